#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "flcheck/lfactor.hpp"
#include "flcheck/weilorbit.hpp"

namespace flcheck {

// ---------------------------------------------------------------------------
// Symbolic radial expansions on F^x.
//
// Elements of the enlarged test-measure spaces, and everything the rank-one
// transfer chains produce from them, decompose into finitely many pieces of
// the shapes below.  Only the compositions required by the four classical
// types are supported; each germ transform is backed by a rule validated
// against brute-force summation.
// ---------------------------------------------------------------------------

// c |x|^alpha (log_q|x|)^logdeg on the shells lo <= val(x) <= hi
struct PRadial {
    ExactScalar c;
    HalfInt alpha;
    int logdeg = 0;
    long long lo, hi;
};

// c |x|^alpha psi(b x) (inv=false) or c |x|^alpha psi(b / x) (inv=true)
struct POsc {
    ExactScalar c;
    Rat b;
    HalfInt alpha;
    bool inv = false;
    long long lo, hi;
};

// c |x|^alpha K(b x^{+-1}) with K the PGL2 Kloosterman germ
struct PKloo {
    ExactScalar c;
    Rat b;
    HalfInt alpha;
    bool inv = false;
    long long lo, hi;
};

// c |x|^alpha S(b x^{+-1}) with S the SL2 Salie germ
struct PSalie {
    ExactScalar c;
    Rat b;
    HalfInt alpha;
    bool inv = false;
    long long lo, hi;
};

// explicit values on single shells: val(x) = shell, value depends on the
// unit of x mod p^level
struct ShellTable {
    int level = 1;
    std::map<long long, ExactScalar> vals; // keyed by the unit representative
};
struct PWindow {
    std::map<long long, ShellTable> shells;
};

class GermExpansion;

// Deferred Fourier transform of a germ expansion, evaluated exactly on
// demand (germ pieces are handled by interchanging their defining
// integrals).  Not thread-safe: the memo is shared across copies.
struct PTransform {
    std::shared_ptr<const GermExpansion> inner;
    int sign = 1;           // F_psi (+1) or F_{psi^{-1}} (-1)
    HalfInt post_alpha{};   // multiply by |x|^{post_alpha} after the transform
    bool post_iota = false; // evaluate at 1/x after the transform
    ExactScalar c = ExactScalar::one();
    std::shared_ptr<std::map<Rat, ExactScalar>> memo;
};

using GermPiece = std::variant<PRadial, POsc, PKloo, PSalie, PWindow, PTransform>;

class GermExpansion {
public:
    GermExpansion() = default;
    explicit GermExpansion(int p) : p_(p) {}

    int p() const { return p_; }
    const std::vector<GermPiece>& pieces() const { return pieces_; }
    void add(GermPiece piece) { pieces_.push_back(std::move(piece)); }

    ExactScalar eval(const Rat& x) const;
    GermExpansion twist_abs(HalfInt gamma) const; // multiply by |x|^gamma
    GermExpansion iota() const;                   // x -> 1/x on functions
    GermExpansion scaled(const ExactScalar& c) const;
    GermExpansion operator+(const GermExpansion& o) const;

    // deferred F_psi / F_{psi^{-1}}
    GermExpansion fourier(int sign) const;

    // the basic-vector densities as germ expansions (window + tails + germ)
    static GermExpansion basic_std2_density(int p, HalfInt s1, HalfInt s2, int window);
    static GermExpansion basic_ad_density(int p, HalfInt s, int window);

private:
    int p_ = 3;
    std::vector<GermPiece> pieces_;
};

// exact transform of a single radial tail term against psi^{(-sign)}(xy):
//   int_{lo <= val x <= hi} c |x|^alpha log^d |x| psi^{(-sign)}(xy) dx
// (the building block behind the Fourier-composition lemmas)
ExactScalar fourier_tate(int p, const PRadial& term, int sign, const Rat& y);

// F_psi(1_o(x) psi^{-1}(1/x))(y): the three-branch closed form
ExactScalar fourier_kloo_rule(int p, const Rat& y);
// the same value by exact shell-by-shell summation (oracle)
ExactScalar fourier_kloo_enum(int p, const Rat& y, int shells = 0);

// transfer operator of the rank-one comparison, realized as the Fourier
// composition acting on densities f = phi(x) dx
GermExpansion transfer_T(const GermExpansion& phi, const LValueSpec& spec);

// The type-B composite evaluated on the basic vector:
//   psi(2/zeta) |zeta|^{-1/2} (F_{psi^{-1}} o iota o |.|)(phi)(zeta/4),
// computed through the f1/f2 decomposition and the Kloosterman-Fourier rule.
ExactScalar b_composite_on_basic(int p, int n, const Rat& zeta);
// intermediate tables of the f1/f2 pipeline (exposed for the test suite)
ExactScalar b_pipeline_F_f1(int p, int n, const Rat& x);
ExactScalar b_pipeline_F_f2(int p, int n, const Rat& x);
ExactScalar b_pipeline_value(int p, int n, const Rat& x); // F_{psi^{-1}} iota |.| f_L

// Weil-side transfer operator applied to an orbital-integral function given
// as ball data: formulas (1)-(4), computed by a psi-weighted thickened-fiber
// sum.  `point` selects the torus element.
ExactScalar ttilde(const HermitianModel& model, const BallFunction& phi,
                   const OrbitalPoint& point, int k_budget = 0);

// multiplier descriptor of the composite relation per type
struct CompositeRelation {
    SphericalType type;
    std::string description;
    // rhs multiplier at a point: Id, |.|^{-1}, or the psi(2/zeta)-twisted form
    ExactScalar apply_rhs(int p, int n, const Rat& x) const;
    // lhs: the composed operator chain applied to the basic vector
    ExactScalar apply_lhs(int p, int n, const Rat& x) const;
};
CompositeRelation composite_relation(SphericalType type);

// registry of germ transform rules with validation status
struct TransformRule {
    std::string pattern;
    std::string provenance;
    bool validated = false;
};
// validates every rule used by the engine at this prime; throws MissingRule
// if a rule fails its oracle
const std::vector<TransformRule>& validated_rules(int p);

} // namespace flcheck
