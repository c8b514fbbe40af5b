#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <string>
#include <utility>

#include <gmpxx.h>

#include "flcheck/errors.hpp"

namespace flcheck {

using Rat = mpq_class;

// Half-integers, stored as twice their value. All L-function exponents in
// this library live in (1/2)Z.
struct HalfInt {
    int twice = 0;

    HalfInt() = default;
    explicit constexpr HalfInt(int twice_value) : twice(twice_value) {}
    static HalfInt whole(int s) { return HalfInt(2 * s); }

    bool is_integer() const { return twice % 2 == 0; }
    bool operator==(const HalfInt&) const = default;
    HalfInt operator+(HalfInt o) const { return HalfInt(twice + o.twice); }
    HalfInt operator-(HalfInt o) const { return HalfInt(twice - o.twice); }
    HalfInt operator-() const { return HalfInt(-twice); }
    HalfInt operator*(int k) const { return HalfInt(twice * k); }
    Rat as_rat() const { return Rat(twice, 2); }
};

long ipow(long base, int exp);

// Element of Q(zeta_{p^K}, sqrt(q)) with q = p, in the canonical basis
// { zeta^j * sqrt(q)^e : 0 <= j < phi(p^K), e in {0,1} }.  Exponents j >=
// phi(p^K) are reduced through Phi_{p^K}(zeta) = sum_i zeta^{i p^{K-1}} = 0.
// A scalar with no root-of-unity and no sqrt(q) part canonicalizes to
// prime = 0 so that plain rationals compare equal across primes.
class ExactScalar {
public:
    ExactScalar() = default;
    ExactScalar(const Rat& r) { // NOLINT: implicit by design
        Rat rc = r;
        rc.canonicalize();
        if (rc != 0) coeff_[0][0] = rc;
    }
    ExactScalar(long n) : ExactScalar(Rat(n)) {} // NOLINT
    ExactScalar(int n) : ExactScalar(Rat(n)) {} // NOLINT

    static ExactScalar zero() { return ExactScalar(); }
    static ExactScalar one() { return ExactScalar(Rat(1)); }

    // zeta_{p^level}^j, any integer j
    static ExactScalar root_of_unity(int p, int level, long long j);
    static ExactScalar sqrt_q(int p);
    // q^{s} for half-integer s
    static ExactScalar q_pow(int p, HalfInt s);

    int prime() const { return prime_; }
    int level() const { return level_; }

    bool is_zero() const { return coeff_[0].empty() && coeff_[1].empty(); }
    bool is_rational() const { return prime_ == 0; }
    // true when the scalar lies in Q(sqrt q) (no root of unity)
    bool is_quadratic() const;
    Rat rational_value() const; // requires is_rational()

    ExactScalar operator+(const ExactScalar& o) const;
    ExactScalar operator-(const ExactScalar& o) const;
    ExactScalar operator*(const ExactScalar& o) const;
    ExactScalar operator-() const;
    ExactScalar& operator+=(const ExactScalar& o) { *this = *this + o; return *this; }
    ExactScalar& operator-=(const ExactScalar& o) { *this = *this - o; return *this; }
    ExactScalar& operator*=(const ExactScalar& o) { *this = *this * o; return *this; }

    // inverse of an element of Q(sqrt q); throws PoleAtZero on 0 and
    // Error if the scalar has a root-of-unity part
    ExactScalar quad_inverse() const;
    ExactScalar operator/(const ExactScalar& o) const { return *this * o.quad_inverse(); }

    bool operator==(const ExactScalar& o) const;
    bool operator!=(const ExactScalar& o) const { return !(*this == o); }

    std::complex<double> embed() const;
    // canonical form "c0 + c1*z^j1 + ... + d0*r + ...", z = zeta_{p^K}, r = sqrt(q)
    std::string str() const;

private:
    void normalize();
    void promote(int p, int level);
    static void align(ExactScalar& a, ExactScalar& b);

    int prime_ = 0;  // 0 while no zeta/sqrt part is present
    int level_ = 0;  // K; exponents index powers of zeta_{p^K}
    std::map<long long, Rat> coeff_[2]; // [sqrt-q exponent][zeta exponent]

    friend class ExactScalarTestPeek;
};

// A p-adic number known to finite precision: x = unit * p^valuation with
// unit known modulo p^prec.  q = p (prime residue field).
class PAdicPoint {
public:
    PAdicPoint() = default;

    static PAdicPoint zero(int p, int prec);
    static PAdicPoint from_unit(int p, int prec, long long valuation, long long unit);
    static PAdicPoint from_rational(const Rat& x, int p, int prec);

    bool is_zero() const { return zero_; }
    int p() const { return p_; }
    int prec() const { return prec_; }
    long long valuation() const; // throws on zero
    long long unit() const;      // ac(x) mod p^prec, in [1, p^prec)
    Rat abs() const;             // |x| = q^{-val}, 0 for zero

    PAdicPoint operator*(const PAdicPoint& o) const;
    PAdicPoint operator+(const PAdicPoint& o) const;
    PAdicPoint operator-() const;
    PAdicPoint inverse() const;  // throws ZeroInput on zero

    bool operator==(const PAdicPoint& o) const;

private:
    int p_ = 0;
    int prec_ = 0;
    bool zero_ = true;
    long long val_ = 0;
    long long unit_ = 1;
};

// psi(x) = e^{2 pi i * (principal part of x)}; unramified with conductor
// exactly o.  Needs the unit of x mod p^m for m = -val(x); PrecisionLoss
// when the stored digits do not determine it.
ExactScalar psi(const PAdicPoint& x);

// Exact-rational variant used by the enumeration kernels.
ExactScalar psi_rat(const Rat& x, int p);

// local zeta factor 1/(1 - q^{-s})
ExactScalar zeta_local(int p, HalfInt s);

// vol(a + p^k o) = q^{-k} under the self-dual Haar measure, vol(o) = 1
Rat ball_volume(int p, int k);

// valuation of a nonzero rational at p (throws ZeroInput on 0)
long long val_p(const Rat& x, int p);
// |x|_p as a rational, 0 for x = 0
Rat abs_p(const Rat& x, int p);
// the unit x / p^{val(x)} reduced mod p^m, in [0, p^m)
long long unit_mod(const Rat& x, int p, int m);

} // namespace flcheck
