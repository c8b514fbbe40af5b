#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "flcheck/exactnum.hpp"
#include "flcheck/lfactor.hpp"
#include "flcheck/schwartz.hpp"

namespace flcheck {

enum class DTag { F, FxF, Mat2 };

// Standard (skew-)Hermitian model data: coordinates of V over F, the
// distinguished vector v0, and the shapes of the invariant quadratic form
// Q(v) = tau(B(v,v))/2 and the linear form L(v) = tau(B(v0, v)).
//
// Coordinate order:
//   D = F      : v_1 .. v_d, Q = sum_{i<d+1-i} v_i v_{d+1-i} (+ v_c^2, d odd),
//                L = v_1 + v_d
//   D = F x F  : x_1..x_n, y_1..y_n, Q = sum x_i y_i, L = x_n + y_n
//   D = Mat2   : x_1..x_n, y_1..y_n, z_1..z_n, w_1..w_n (block i is the
//                matrix [[x_i, z_i], [w_i, y_i]]), Q = sum (x_i y_i - z_i w_i),
//                L = x_n + y_n
//
// For odd orthogonal d the central square enters Q with coefficient 1 (the
// Gram matrix has middle entry 2); this is the normalization under which the
// unipotent Weil action reproduces the classical Gauss-sum tables.
struct HermitianModel {
    DTag tag;
    int n;   // D-rank
    int d;   // dim_F V

    static HermitianModel standard(DTag tag, int n);
    // model used by a spherical type at rank parameter n
    static HermitianModel for_type(SphericalType t, int n);

    std::vector<Rat> v0() const;
    // Q and L on exact coordinate vectors
    Rat quad(const std::vector<Rat>& v) const;
    Rat linear(const std::vector<Rat>& v) const;
};

// element of D as an exact coordinate tuple
struct DElem {
    DTag tag;
    Rat a, b, c, d; // F: a; FxF: (a,b); Mat2: [[a,b],[c,d]]

    static DElem scalar(DTag tag, const Rat& x);
    Rat norm() const; // nu
};

// torus datum of U(W) plus the optional SL2 Iwasawa part used for type C
struct OrbitalPoint {
    DTag tag;
    Rat zeta;        // D = F
    Rat t1, t2;      // D = F x F
    Rat xi;          // D = Mat2
    std::optional<std::pair<Rat, Rat>> iwasawa; // (x, m) with k in SL2(o)

    static OrbitalPoint sl2(const Rat& zeta);
    static OrbitalPoint gl2(const Rat& t1, const Rat& t2);
    static OrbitalPoint sp(const Rat& xi);
    static OrbitalPoint sp_iwasawa(const Rat& xi, const Rat& x, const Rat& m);
};

// measure / character knobs used by the negative controls
struct WeilOptions {
    int psi_shift = 0;       // verifies with psi(x p^{-shift}) instead of psi
    Rat du_scale = Rat(1);   // scales the regularizing Haar measure du
    Rat iwasawa_scale = Rat(1); // scales the Iwasawa density of type C
};

// Weil-representation generators acting on F(V)
struct GenScalar { ExactScalar z; };
struct GenTorus { OrbitalPoint t; };
struct GenUnipotent { Rat u; };
struct GenWeyl {};
using WeilGenerator = std::variant<GenScalar, GenTorus, GenUnipotent, GenWeyl>;

BallFunction weil_act(const HermitianModel& model, const WeilGenerator& g,
                      const BallFunction& phi);

// regularized Whittaker integral int*_N omega(w) omega(t) omega(u) Phi(v0)
// psi^{-1}(u) du, with stabilization detection
struct WhittakerResult {
    ExactScalar value;
    int k_stab;
};
WhittakerResult regularized_whittaker(const HermitianModel& model, const BallFunction& phi,
                                      const OrbitalPoint& t, int k_budget = 0,
                                      const WeilOptions& opts = {});

// orbital integral I(Phi)(x): fiber integral over X_x (with the 4x-2
// coordinate shift for odd orthogonal models), via thickened fibers
ExactScalar orbital_I(const HermitianModel& model, const BallFunction& phi,
                      const DElem& x, int k_budget = 0);
// total mass int_D I(Phi) = int_X Phi |omega_1|
ExactScalar orbital_mass(const HermitianModel& model, const BallFunction& phi,
                         int k_budget = 0);

// center integrations of the regularized integrals
ExactScalar center_integral_A(int p, const Rat& xi, int n, const WeilOptions& opts = {},
                              int* k_stab = nullptr);
ExactScalar center_integral_C(int p, const Rat& xi, int n, const WeilOptions& opts = {},
                              int* k_stab = nullptr);

// closed form of the odd-orthogonal orbital (type B), both branches
ExactScalar orbital_closed_b(int p, const Rat& zeta, int n);

struct TamagawaData {
    ExactScalar tau_X;     // mass of X(o) under the unramified measure
    ExactScalar tau_Xbar;  // mass of the Xbar used by the theorem constant
    mpz_class points_Xbar; // #Xbar-side point count entering q^dim/#X...
    int dim_X;
    int dim_Xbar;
};
TamagawaData tamagawa_and_counts(SphericalType type, int n, int q);

// classical group orders over kappa
mpz_class count_gl(int n, int q);
mpz_class count_sp(int n, int q);       // #Sp_{2n}
mpz_class count_so_odd(int n, int q);   // #SO_{2n+1}
mpz_class count_so_even_split(int n, int q); // #SO_{2n}^+

} // namespace flcheck
