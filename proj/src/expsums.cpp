#include "flcheck/expsums.hpp"

namespace flcheck {

namespace {

Rat point_rep(const PAdicPoint& x) {
    if (x.is_zero()) return Rat(0);
    Rat u(static_cast<long>(x.unit()));
    long long v = x.valuation();
    if (v >= 0) return u * Rat(mpz_class(ipow(x.p(), static_cast<int>(v))));
    return u / Rat(mpz_class(ipow(x.p(), static_cast<int>(-v))));
}

// x known mod p^{val + prec}; germ integrands below need arguments mod o,
// which bounds the usable level
void require_prec(const PAdicPoint& x, long long needed) {
    if (x.prec() < needed)
        throw PrecisionLoss("point carries " + std::to_string(x.prec()) +
                            " digits, needs " + std::to_string(needed));
}

} // namespace

void ShellDomain::for_each(const std::function<void(const Rat&)>& f) const {
    long long pl = ipow(p, level);
    Rat scale = (m >= 0) ? Rat(mpz_class(ipow(p, m))) : Rat(1, mpz_class(ipow(p, -m)));
    for (long long w = 1; w < pl; ++w) {
        if (w % p == 0) continue;
        f(Rat(static_cast<long>(w)) * scale);
    }
}

std::vector<Rat> ShellDomain::points() const {
    std::vector<Rat> out;
    for_each([&](const Rat& x) { out.push_back(x); });
    return out;
}

ExactScalar gauss_quadratic_rat(const Rat& u, int p) {
    if (u == 0) throw ZeroInput("gauss_quadratic at 0");
    long long v = val_p(u, p);
    if (v >= 0) return ExactScalar::one();
    long long r = -v; // |u| = q^r
    if (r % 2 == 0) return ExactScalar(ball_volume(p, static_cast<int>(r / 2)));
    // odd: q^{-1/2} |u|^{-1/2} sum_{a in kappa} psi(ac(u) a^2 / p), and the
    // prefactor q^{-(r+1)/2} is rational since r is odd
    long long ac = unit_mod(u, p, 1);
    ExactScalar sum = ExactScalar::zero();
    for (long long a = 0; a < p; ++a)
        sum += ExactScalar::root_of_unity(p, 1, ac * a * a);
    return ExactScalar::q_pow(p, HalfInt(static_cast<int>(-(r + 1)))) * sum;
}

ExactScalar gauss_quadratic_enum_rat(const Rat& u, int p, int level) {
    if (u == 0) throw ZeroInput("gauss_quadratic at 0");
    long long v = val_p(u, p);
    int ell = level > 0 ? level : static_cast<int>(std::max<long long>(1, -v));
    long long pl = ipow(p, ell);
    ExactScalar sum = ExactScalar::zero();
    for (long long z = 0; z < pl; ++z)
        sum += psi_rat(u * Rat(static_cast<long>(z)) * Rat(static_cast<long>(z)), p);
    return sum * ExactScalar(ball_volume(p, ell));
}

ExactScalar gauss_quadratic(const PAdicPoint& u) {
    if (u.is_zero()) throw ZeroInput("gauss_quadratic at 0");
    if (u.valuation() < 0) require_prec(u, 1); // closed form reads ac(u) mod p
    return gauss_quadratic_rat(point_rep(u), u.p());
}

ExactScalar gauss_quadratic_enum(const PAdicPoint& u, int level) {
    if (u.is_zero()) throw ZeroInput("gauss_quadratic at 0");
    long long v = u.is_zero() ? 0 : u.valuation();
    long long need = std::max<long long>(1, -v);
    require_prec(u, need);
    return gauss_quadratic_enum_rat(point_rep(u), u.p(), level);
}

ExactScalar kloosterman_pgl2_rat(const Rat& xi, int p, int level) {
    if (xi == 0) throw ZeroInput("kloosterman germ at 0");
    long long v = val_p(xi, p);
    if (v % 2 != 0) return ExactScalar::zero(); // empty shell
    int m = static_cast<int>(v / 2);
    int ell = level > 0 ? level : static_cast<int>(std::llabs(v)) + 2;
    ShellDomain dom{p, m, ell};
    ExactScalar sum = ExactScalar::zero();
    dom.for_each([&](const Rat& u) {
        sum += psi_rat(-(u / xi + 1 / u), p);
    });
    return sum * ExactScalar(dom.weight());
}

ExactScalar kloosterman_pgl2(const PAdicPoint& xi, int level) {
    if (xi.is_zero()) throw ZeroInput("kloosterman germ at 0");
    long long v = xi.valuation();
    if (v % 2 != 0) return ExactScalar::zero();
    int ell = level > 0 ? level : static_cast<int>(std::llabs(v)) + 2;
    // integrand arguments have valuation >= -(|v|/2 + |v|) on the shell
    require_prec(xi, std::llabs(v) / 2 + ell);
    return kloosterman_pgl2_rat(point_rep(xi), xi.p(), ell);
}

ExactScalar salie_sl2_rat(const Rat& zeta, int p, int level) {
    if (zeta == 0) throw ZeroInput("salie germ at 0");
    long long v = val_p(zeta, p);
    int ell = level > 0 ? level : static_cast<int>(std::max<long long>(0, v)) + 2;
    long long pl1 = ipow(p, ell - 1);
    ExactScalar sum = ExactScalar::zero();
    for (int sgn : {1, -1})
        for (long long t = 0; t < pl1; ++t) {
            Rat u = Rat(sgn) + Rat(p) * Rat(static_cast<long>(t));
            sum += psi_rat(-(u + 1 / u) / zeta, p);
        }
    return sum * ExactScalar(ball_volume(p, ell));
}

ExactScalar salie_sl2(const PAdicPoint& zeta, int level) {
    if (zeta.is_zero()) throw ZeroInput("salie germ at 0");
    long long v = zeta.valuation();
    int ell = level > 0 ? level : static_cast<int>(std::max<long long>(0, v)) + 2;
    require_prec(zeta, std::max<long long>(1, v + ell));
    return salie_sl2_rat(point_rep(zeta), zeta.p(), ell);
}

long count_quadric_pairs(long alpha, int p) {
    long count = 0;
    alpha = ((alpha % p) + p) % p;
    for (long a = 0; a < p; ++a)
        for (long b = 1; b < p; ++b) {
            long binv = 1;
            while ((b * binv) % p != 1) ++binv;
            long lhs = ((b + binv - b * a % p * a) % p + p) % p;
            if (lhs == static_cast<long>(alpha)) ++count;
        }
    return count;
}

ExactScalar dual_gauss_product_check(long zeta_unit, int p) {
    Rat c = Rat(1) / (Rat(zeta_unit) * Rat(p));
    ExactScalar s1 = ExactScalar::zero(), s2 = ExactScalar::zero();
    for (long a = 0; a < p; ++a) {
        s1 += psi_rat(-Rat(a * a) * c, p);
        s2 += psi_rat(Rat(a * a) * c, p);
    }
    return s1 * s2;
}

} // namespace flcheck
