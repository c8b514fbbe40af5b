#pragma once

#include <functional>
#include <vector>

#include "flcheck/exactnum.hpp"

namespace flcheck {

// Enumeration domain for a multiplicative shell {|u| = q^{-m}}: points are
// p^m * w with w running over the units of o/p^level, each representative
// carrying Haar weight q^{-m-level}.  The total weight is the shell measure
// q^{-m}(1 - q^{-1}).
struct ShellDomain {
    int p;
    int m;      // target valuation
    int level;  // enumeration level (>= 1)

    Rat weight() const { return ball_volume(p, m + level); }
    Rat measure() const { return ball_volume(p, m) * Rat(p - 1, p); }
    // apply f to every representative (as an exact rational)
    void for_each(const std::function<void(const Rat&)>& f) const;
    std::vector<Rat> points() const;
};

// int_o psi(u z^2) dz, closed form of the quadratic Gauss integral
ExactScalar gauss_quadratic(const PAdicPoint& u);
// the same integral by residue enumeration at the given level (level <= 0
// picks the minimal sufficient one); oracle for the closed form
ExactScalar gauss_quadratic_enum(const PAdicPoint& u, int level = 0);

// closed form / enumeration working on exact rationals (internal kernels)
ExactScalar gauss_quadratic_rat(const Rat& u, int p);
ExactScalar gauss_quadratic_enum_rat(const Rat& u, int p, int level = 0);

// Kloosterman germ integral for PGL2 coordinates:
//   int_{|u|^2 = |xi|} psi^{-1}(u/xi + u^{-1}) du
// Empty (zero) when val(xi) is odd.  level <= 0 selects |val(xi)| + 2.
ExactScalar kloosterman_pgl2(const PAdicPoint& xi, int level = 0);
ExactScalar kloosterman_pgl2_rat(const Rat& xi, int p, int level = 0);

// Salie-type germ integral for SL2 coordinates:
//   int_{u in (1+p) union (-1+p)} psi^{-1}((u + u^{-1})/zeta) du
ExactScalar salie_sl2(const PAdicPoint& zeta, int level = 0);
ExactScalar salie_sl2_rat(const Rat& zeta, int p, int level = 0);

// #{(a, b) in kappa x kappa^x : b + b^{-1} - b a^2 = alpha}; equals 2q-3 for
// alpha = +-2 and q-3 otherwise
long count_quadric_pairs(long alpha, int p);

// sum_{u in kappa} psi^{-1}(u^2/(zu*p)) * sum_{a in kappa} psi(a^2/(zu*p)),
// always equal to q
ExactScalar dual_gauss_product_check(long zeta_unit, int p);

} // namespace flcheck
