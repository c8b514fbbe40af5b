#pragma once

#include <vector>

#include "flcheck/exactnum.hpp"
#include "flcheck/expsums.hpp"

namespace flcheck {

enum class SphericalType { A, B, C, D };
enum class DualGroup { SL2, PGL2 };

char type_letter(SphericalType t);
SphericalType type_from_letter(char c);

// L-value data of a rank-one spherical variety of classical type, following
// the standard table.  For type C the table exponents (n-1/2, n-3/2) are the
// operative ones; the rescaled pair ((n-1)/2, (n-3)/2) that appears in the
// type-C computation section is inconsistent with the final theorem constants
// and is kept only for reporting.
struct LValueSpec {
    SphericalType type;
    int n;
    DualGroup dual;
    HalfInt s1, s2; // SL2 dual
    HalfInt s0;     // PGL2 dual
    HalfInt s_X;    // s1+s2 resp. 2*s0

    static LValueSpec standard(SphericalType type, int n);
    static std::pair<HalfInt, HalfInt> type_c_rescaled(int n);
};

// coefficient of tr(Sym^m Std) in L(Std,s1) L(Std,s2)
ExactScalar lseries_coeff_std2(int p, int m, HalfInt s1, HalfInt s2);
// coefficient of rho_m in L(Ad,s)
ExactScalar lseries_coeff_ad(int p, int m, HalfInt s);

// multiset of symmetric-power labels in Sym^{m1} Std (x) Sym^{m2} Std,
// computed by exact Laurent character arithmetic
std::vector<int> clebsch_oracle(int m1, int m2);
// re-derivation of lseries_coeff_std2 from the tensor decomposition
ExactScalar lseries_coeff_std2_oracle(int p, int m, HalfInt s1, HalfInt s2);

// Casselman-Shalika values of the convolved basic function against the
// (N, psi)-integral: 1 at |x| = q^m, -1 one step below the support wall,
// the Kloosterman/Salie germ at m = 0 below 1, and 0 otherwise.
ExactScalar cs_whittaker_value(int p, int m, const Rat& x, DualGroup dual);
ExactScalar cs_whittaker_value(int p, int m, const PAdicPoint& x, DualGroup dual);

// closed forms of the basic-vector densities f / (|xi| d^x xi) resp.
// f / (|zeta|^2 d^x zeta)
ExactScalar basic_std2(int p, const Rat& xi, HalfInt s1, HalfInt s2);
ExactScalar basic_ad(int p, const Rat& zeta, HalfInt s);
ExactScalar basic_std2(int p, const PAdicPoint& xi, HalfInt s1, HalfInt s2);
ExactScalar basic_ad(int p, const PAdicPoint& zeta, HalfInt s);

// truncated Casselman-Shalika series oracles; exact once trunc covers the
// finitely many contributing symmetric powers at the shell of x
ExactScalar basic_std2_series(int p, const Rat& xi, HalfInt s1, HalfInt s2, int trunc);
ExactScalar basic_ad_series(int p, const Rat& zeta, HalfInt s, int trunc);

} // namespace flcheck
