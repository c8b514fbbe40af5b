#include "flcheck/exactnum.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>
#include <sstream>

namespace flcheck {

long ipow(long base, int exp) {
    long r = 1;
    while (exp-- > 0) r *= base;
    return r;
}

namespace {

long long mulmod(long long a, long long b, long long m) {
    return static_cast<long long>((static_cast<__int128>(a) * b) % m);
}

long long powmod(long long a, long long e, long long m) {
    long long r = 1 % m;
    a %= m;
    while (e > 0) {
        if (e & 1) r = mulmod(r, a, m);
        a = mulmod(a, a, m);
        e >>= 1;
    }
    return r;
}

long long invmod(long long a, long long m) {
    // extended Euclid; gcd(a, m) = 1 assumed
    long long t = 0, newt = 1, r = m, newr = ((a % m) + m) % m;
    while (newr != 0) {
        long long quot = r / newr;
        std::swap(t -= quot * newt, newt);
        std::swap(r -= quot * newr, newr);
    }
    assert(r == 1);
    return ((t % m) + m) % m;
}

} // namespace

// ------------------------------------------------------------ ExactScalar

ExactScalar ExactScalar::root_of_unity(int p, int level, long long j) {
    ExactScalar s;
    if (level <= 0) {
        s.coeff_[0][0] = 1;
        s.normalize();
        return s;
    }
    long long pk = ipow(p, level);
    j = ((j % pk) + pk) % pk;
    s.prime_ = p;
    s.level_ = level;
    s.coeff_[0][j] = 1;
    s.normalize();
    return s;
}

ExactScalar ExactScalar::sqrt_q(int p) {
    ExactScalar s;
    s.prime_ = p;
    s.level_ = 0;
    s.coeff_[1][0] = 1;
    return s;
}

ExactScalar ExactScalar::q_pow(int p, HalfInt s) {
    int t = s.twice;
    Rat r;
    int whole;
    bool half = (t % 2 != 0);
    if (half) {
        // q^{t/2} = q^{(t-1)/2} * sqrt(q)
        whole = (t - 1) / 2;
    } else {
        whole = t / 2;
    }
    if (whole >= 0)
        r = Rat(mpz_class(ipow(p, whole)));
    else
        r = Rat(1, mpz_class(ipow(p, -whole)));
    ExactScalar out(r);
    if (half) out *= sqrt_q(p);
    return out;
}

bool ExactScalar::is_quadratic() const {
    for (int e = 0; e < 2; ++e)
        for (const auto& [j, c] : coeff_[e])
            if (j != 0) return false;
    return true;
}

Rat ExactScalar::rational_value() const {
    if (!is_rational()) throw Error("scalar is not rational");
    auto it = coeff_[0].find(0);
    return it == coeff_[0].end() ? Rat(0) : it->second;
}

void ExactScalar::normalize() {
    for (int e = 0; e < 2; ++e)
        for (auto it = coeff_[e].begin(); it != coeff_[e].end();)
            it = (it->second == 0) ? coeff_[e].erase(it) : std::next(it);
    if (prime_ == 0 || level_ == 0) {
        if (coeff_[1].empty() && (coeff_[0].empty() ||
            (coeff_[0].size() == 1 && coeff_[0].begin()->first == 0)))
            prime_ = 0;
        return;
    }
    long long pk = ipow(prime_, level_);
    long long pk1 = pk / prime_;          // p^{K-1}
    long long phi = pk - pk1;             // (p-1) p^{K-1}
    // reduce exponents with top base-p digit p-1 via Phi_{p^K}(zeta) = 0;
    // the replacement exponents all have top digit <= p-2, so one pass per
    // offending term suffices
    for (int e = 0; e < 2; ++e) {
        bool again = true;
        while (again) {
            again = false;
            for (auto it = coeff_[e].begin(); it != coeff_[e].end(); ++it) {
                long long j = it->first;
                if (j < phi) continue;
                Rat c = it->second;
                coeff_[e].erase(it);
                long long b = j - phi;    // j = (p-1) p^{K-1} + b
                for (long long i = 0; i + 1 < prime_; ++i) {
                    Rat& slot = coeff_[e][i * pk1 + b];
                    slot -= c;
                    if (slot == 0) coeff_[e].erase(i * pk1 + b);
                }
                again = true;
                break;
            }
        }
    }
    // demote the level while every exponent is divisible by p
    while (level_ > 0) {
        bool all = true;
        bool any = false;
        for (int e = 0; e < 2 && all; ++e)
            for (const auto& [j, c] : coeff_[e]) {
                any = true;
                if (j % prime_ != 0) { all = false; break; }
            }
        if (!all) break;
        if (!any) { level_ = 0; break; }
        bool trivial = true;
        for (int e = 0; e < 2; ++e)
            for (const auto& [j, c] : coeff_[e])
                if (j != 0) trivial = false;
        if (trivial) { level_ = 0; break; }
        std::map<long long, Rat> next[2];
        for (int e = 0; e < 2; ++e)
            for (const auto& [j, c] : coeff_[e]) next[e][j / prime_] = c;
        coeff_[0] = std::move(next[0]);
        coeff_[1] = std::move(next[1]);
        --level_;
    }
    if (coeff_[1].empty() && (coeff_[0].empty() ||
        (coeff_[0].size() == 1 && coeff_[0].begin()->first == 0)))
        prime_ = 0;
}

void ExactScalar::promote(int p, int level) {
    if (prime_ == 0) {
        prime_ = p;
        level_ = 0;
    }
    if (prime_ != p) throw Error("mixing scalars over different primes");
    if (level_ >= level) return;
    long long f = ipow(p, level - level_);
    for (int e = 0; e < 2; ++e) {
        std::map<long long, Rat> next;
        for (const auto& [j, c] : coeff_[e]) next[j * f] = c;
        coeff_[e] = std::move(next);
    }
    level_ = level;
}

void ExactScalar::align(ExactScalar& a, ExactScalar& b) {
    if (a.prime_ != 0 && b.prime_ != 0 && a.prime_ != b.prime_)
        throw Error("mixing scalars over different primes");
    int p = a.prime_ != 0 ? a.prime_ : b.prime_;
    if (p == 0) return;
    int lvl = std::max(a.level_, b.level_);
    a.promote(p, lvl);
    b.promote(p, lvl);
}

ExactScalar ExactScalar::operator+(const ExactScalar& o) const {
    ExactScalar a = *this, b = o;
    align(a, b);
    for (int e = 0; e < 2; ++e)
        for (const auto& [j, c] : b.coeff_[e]) a.coeff_[e][j] += c;
    a.normalize();
    return a;
}

ExactScalar ExactScalar::operator-() const {
    ExactScalar a = *this;
    for (int e = 0; e < 2; ++e)
        for (auto& [j, c] : a.coeff_[e]) c = -c;
    return a;
}

ExactScalar ExactScalar::operator-(const ExactScalar& o) const {
    return *this + (-o);
}

ExactScalar ExactScalar::operator*(const ExactScalar& o) const {
    ExactScalar a = *this, b = o;
    align(a, b);
    ExactScalar out;
    out.prime_ = a.prime_;
    out.level_ = a.level_;
    long long pk = (out.prime_ != 0 && out.level_ > 0) ? ipow(out.prime_, out.level_) : 0;
    Rat q(a.prime_ == 0 ? 1 : a.prime_);
    for (int e1 = 0; e1 < 2; ++e1)
        for (const auto& [j1, c1] : a.coeff_[e1])
            for (int e2 = 0; e2 < 2; ++e2)
                for (const auto& [j2, c2] : b.coeff_[e2]) {
                    long long j = pk ? (j1 + j2) % pk : 0;
                    int e = e1 + e2;
                    Rat c = c1 * c2;
                    if (e == 2) { e = 0; c *= q; }
                    out.coeff_[e][j] += c;
                }
    out.normalize();
    return out;
}

ExactScalar ExactScalar::quad_inverse() const {
    if (is_zero()) throw PoleAtZero("inverse of zero");
    if (!is_quadratic()) throw Error("inverse limited to Q(sqrt q) scalars");
    Rat a = coeff_[0].count(0) ? coeff_[0].at(0) : Rat(0);
    Rat b = coeff_[1].count(0) ? coeff_[1].at(0) : Rat(0);
    if (b == 0) return ExactScalar(Rat(1) / a);
    Rat q(prime_);
    Rat den = a * a - b * b * q;  // nonzero: q is not a rational square
    ExactScalar out(a / den);
    ExactScalar rt = sqrt_q(prime_);
    out += ExactScalar(-b / den) * rt;
    return out;
}

bool ExactScalar::operator==(const ExactScalar& o) const {
    ExactScalar a = *this, b = o;
    align(a, b);
    return a.coeff_[0] == b.coeff_[0] && a.coeff_[1] == b.coeff_[1];
}

std::complex<double> ExactScalar::embed() const {
    std::complex<double> out(0.0, 0.0);
    double pk = (prime_ != 0 && level_ > 0) ? static_cast<double>(ipow(prime_, level_)) : 1.0;
    double rq = prime_ != 0 ? std::sqrt(static_cast<double>(prime_)) : 1.0;
    for (int e = 0; e < 2; ++e)
        for (const auto& [j, c] : coeff_[e]) {
            double ang = 2.0 * M_PI * static_cast<double>(j) / pk;
            out += c.get_d() * (e == 1 ? rq : 1.0) *
                   std::complex<double>(std::cos(ang), std::sin(ang));
        }
    return out;
}

std::string ExactScalar::str() const {
    if (is_zero()) return "0";
    std::ostringstream os;
    bool first = true;
    for (int e = 0; e < 2; ++e)
        for (const auto& [j, c] : coeff_[e]) {
            if (!first) os << " + ";
            first = false;
            os << "(" << c.get_str() << ")";
            if (j != 0) os << "*z^" << j;
            if (e == 1) os << "*r";
        }
    if (prime_ != 0) {
        os << " [p=" << prime_;
        if (level_ > 0) os << ", z=zeta_" << prime_ << "^" << level_;
        os << "]";
    }
    return os.str();
}

// ------------------------------------------------------------ rationals mod p

long long val_p(const Rat& x, int p) {
    if (x == 0) throw ZeroInput("valuation of zero");
    long long v = 0;
    mpz_class n = x.get_num();
    mpz_class d = x.get_den();
    while (mpz_divisible_ui_p(n.get_mpz_t(), p)) { n /= p; ++v; }
    while (mpz_divisible_ui_p(d.get_mpz_t(), p)) { d /= p; --v; }
    return v;
}

Rat abs_p(const Rat& x, int p) {
    if (x == 0) return Rat(0);
    long long v = val_p(x, p);
    if (v >= 0) return Rat(1, mpz_class(ipow(p, static_cast<int>(v))));
    return Rat(mpz_class(ipow(p, static_cast<int>(-v))));
}

long long unit_mod(const Rat& x, int p, int m) {
    if (x == 0) throw ZeroInput("unit of zero");
    if (m <= 0) return 0;
    long long pm = ipow(p, m);
    mpz_class n = x.get_num();
    mpz_class d = x.get_den();
    while (mpz_divisible_ui_p(n.get_mpz_t(), p)) n /= p;
    while (mpz_divisible_ui_p(d.get_mpz_t(), p)) d /= p;
    mpz_class mod(static_cast<long>(pm));
    mpz_class nn = n % mod; if (nn < 0) nn += mod;
    mpz_class dd = d % mod; if (dd < 0) dd += mod;
    long long ni = nn.get_si();
    long long di = dd.get_si();
    return mulmod(ni, invmod(di, pm), pm);
}

// ------------------------------------------------------------ PAdicPoint

PAdicPoint PAdicPoint::zero(int p, int prec) {
    PAdicPoint x;
    x.p_ = p;
    x.prec_ = prec;
    x.zero_ = true;
    return x;
}

PAdicPoint PAdicPoint::from_unit(int p, int prec, long long valuation, long long unit) {
    PAdicPoint x;
    x.p_ = p;
    x.prec_ = prec;
    x.zero_ = false;
    long long pm = ipow(p, prec);
    x.val_ = valuation;
    x.unit_ = ((unit % pm) + pm) % pm;
    if (x.unit_ % p == 0 || x.unit_ == 0) throw Error("unit not coprime to p");
    return x;
}

PAdicPoint PAdicPoint::from_rational(const Rat& x, int p, int prec) {
    if (x == 0) return zero(p, prec);
    PAdicPoint out;
    out.p_ = p;
    out.prec_ = prec;
    out.zero_ = false;
    out.val_ = val_p(x, p);
    out.unit_ = unit_mod(x, p, prec);
    return out;
}

long long PAdicPoint::valuation() const {
    if (zero_) throw ZeroInput("valuation of zero point");
    return val_;
}

long long PAdicPoint::unit() const {
    if (zero_) throw ZeroInput("unit of zero point");
    return unit_;
}

Rat PAdicPoint::abs() const {
    if (zero_) return Rat(0);
    if (val_ >= 0) return Rat(1, mpz_class(ipow(p_, static_cast<int>(val_))));
    return Rat(mpz_class(ipow(p_, static_cast<int>(-val_))));
}

PAdicPoint PAdicPoint::operator*(const PAdicPoint& o) const {
    if (p_ != o.p_) throw Error("mixing primes");
    int prec = std::min(prec_, o.prec_);
    if (zero_ || o.zero_) return zero(p_, prec);
    long long pm = ipow(p_, prec);
    PAdicPoint out;
    out.p_ = p_;
    out.prec_ = prec;
    out.zero_ = false;
    out.val_ = val_ + o.val_;
    out.unit_ = mulmod(unit_ % pm, o.unit_ % pm, pm);
    return out;
}

PAdicPoint PAdicPoint::operator-() const {
    if (zero_) return *this;
    PAdicPoint out = *this;
    long long pm = ipow(p_, prec_);
    out.unit_ = pm - unit_;
    return out;
}

PAdicPoint PAdicPoint::inverse() const {
    if (zero_) throw ZeroInput("inverse of zero point");
    PAdicPoint out = *this;
    out.val_ = -val_;
    out.unit_ = invmod(unit_, ipow(p_, prec_));
    return out;
}

PAdicPoint PAdicPoint::operator+(const PAdicPoint& o) const {
    if (p_ != o.p_) throw Error("mixing primes");
    if (zero_ && o.zero_) return zero(p_, std::min(prec_, o.prec_));
    if (zero_) return o;
    if (o.zero_) return *this;
    const PAdicPoint& a = (val_ <= o.val_) ? *this : o;
    const PAdicPoint& b = (val_ <= o.val_) ? o : *this;
    long long delta = b.val_ - a.val_;
    // absolute precisions val + prec; the sum's digits are certain up to the
    // smaller of the two
    long long absprec = std::min(a.val_ + a.prec_, b.val_ + b.prec_);
    long long window = absprec - a.val_; // digits available for the unit sum
    if (window <= 0) throw PrecisionLoss("no overlapping digits in addition");
    if (delta >= window) return a; // b invisible at this precision
    long long pw = ipow(p_, static_cast<int>(window));
    long long s = (a.unit_ % pw + mulmod(b.unit_ % pw, ipow(p_, static_cast<int>(delta)), pw)) % pw;
    if (s == 0)
        throw PrecisionLoss("cancellation below stored precision in addition");
    long long extra = 0;
    while (s % p_ == 0) { s /= p_; ++extra; }
    long long prec = window - extra;
    if (prec <= 0) throw PrecisionLoss("cancellation below stored precision in addition");
    PAdicPoint out;
    out.p_ = p_;
    out.prec_ = static_cast<int>(prec);
    out.zero_ = false;
    out.val_ = a.val_ + extra;
    out.unit_ = s % ipow(p_, static_cast<int>(prec));
    return out;
}

bool PAdicPoint::operator==(const PAdicPoint& o) const {
    if (p_ != o.p_) return false;
    if (zero_ || o.zero_) return zero_ == o.zero_;
    if (val_ != o.val_) return false;
    long long pm = ipow(p_, std::min(prec_, o.prec_));
    return (unit_ % pm) == (o.unit_ % pm);
}

// ------------------------------------------------------------ characters

ExactScalar psi(const PAdicPoint& x) {
    if (x.is_zero()) return ExactScalar::one();
    long long v = x.valuation();
    if (v >= 0) return ExactScalar::one();
    long long m = -v;
    if (m > x.prec())
        throw PrecisionLoss("psi needs the unit mod p^" + std::to_string(m));
    long long pm = ipow(x.p(), static_cast<int>(m));
    return ExactScalar::root_of_unity(x.p(), static_cast<int>(m), x.unit() % pm);
}

ExactScalar psi_rat(const Rat& x, int p) {
    if (x == 0) return ExactScalar::one();
    long long v = val_p(x, p);
    if (v >= 0) return ExactScalar::one();
    int m = static_cast<int>(-v);
    return ExactScalar::root_of_unity(p, m, unit_mod(x, p, m));
}

ExactScalar zeta_local(int p, HalfInt s) {
    if (s.twice == 0) throw PoleAtZero("zeta_F(0)");
    ExactScalar den = ExactScalar::one() - ExactScalar::q_pow(p, -s);
    if (den.is_zero()) throw PoleAtZero("zeta_F pole");
    return den.quad_inverse();
}

Rat ball_volume(int p, int k) {
    if (k >= 0) return Rat(1, mpz_class(ipow(p, k)));
    return Rat(mpz_class(ipow(p, -k)));
}

} // namespace flcheck
