#include "flcheck/lfactor.hpp"

#include <algorithm>
#include <map>

namespace flcheck {

char type_letter(SphericalType t) {
    switch (t) {
        case SphericalType::A: return 'A';
        case SphericalType::B: return 'B';
        case SphericalType::C: return 'C';
        case SphericalType::D: return 'D';
    }
    return '?';
}

SphericalType type_from_letter(char c) {
    switch (c) {
        case 'A': case 'a': return SphericalType::A;
        case 'B': case 'b': return SphericalType::B;
        case 'C': case 'c': return SphericalType::C;
        case 'D': case 'd': return SphericalType::D;
    }
    throw UnsupportedType(std::string("type ") + c);
}

LValueSpec LValueSpec::standard(SphericalType type, int n) {
    if (n < 2) throw ConfigError("rank parameter must be >= 2");
    LValueSpec s{};
    s.type = type;
    s.n = n;
    switch (type) {
        case SphericalType::A:
            s.dual = DualGroup::SL2;
            s.s1 = HalfInt(n - 1); // (n-1)/2 twice
            s.s2 = HalfInt(n - 1);
            s.s_X = s.s1 + s.s2;
            break;
        case SphericalType::B:
            s.dual = DualGroup::SL2;
            s.s1 = HalfInt(2 * n - 1); // n - 1/2
            s.s2 = HalfInt(1);         // 1/2
            s.s_X = s.s1 + s.s2;       // n
            break;
        case SphericalType::C:
            s.dual = DualGroup::SL2;
            s.s1 = HalfInt(2 * n - 1); // n - 1/2
            s.s2 = HalfInt(2 * n - 3); // n - 3/2
            s.s_X = s.s1 + s.s2;       // 2n - 2
            break;
        case SphericalType::D:
            s.dual = DualGroup::PGL2;
            s.s0 = HalfInt::whole(n - 1);
            s.s_X = s.s0 * 2; // 2n - 2
            break;
    }
    return s;
}

std::pair<HalfInt, HalfInt> LValueSpec::type_c_rescaled(int n) {
    return {HalfInt(n - 1), HalfInt(n - 3)};
}

ExactScalar lseries_coeff_std2(int p, int m, HalfInt s1, HalfInt s2) {
    auto qs = [&](HalfInt h) { return ExactScalar::q_pow(p, h); };
    ExactScalar one = ExactScalar::one();
    if (s1 == s2) {
        ExactScalar den = one - qs(-(s1 + s2)); // 1 - q^{-2s}
        if (den.is_zero()) throw PoleAtZero("lseries_coeff_std2 at s = 0");
        return ExactScalar(Rat(m + 1)) * qs(-(s1 * m)) * den.quad_inverse();
    }
    ExactScalar d1 = one - qs(s1 - s2);
    ExactScalar d2 = one - qs(-(s1 + s2));
    if (d1.is_zero() || d2.is_zero()) throw PoleAtZero("lseries_coeff_std2 denominator");
    ExactScalar num = qs(-(s1 * m)) - qs(-(s2 * m)) * qs(s1 - s2);
    return num * d1.quad_inverse() * d2.quad_inverse();
}

ExactScalar lseries_coeff_ad(int p, int m, HalfInt s) {
    ExactScalar den = ExactScalar::one() - ExactScalar::q_pow(p, -(s * 2));
    if (den.is_zero()) throw PoleAtZero("lseries_coeff_ad at s = 0");
    return ExactScalar::q_pow(p, -(s * m)) * den.quad_inverse();
}

std::vector<int> clebsch_oracle(int m1, int m2) {
    // multiply the Laurent characters sum_{i<=m} z^{m-2i} and peel off
    // highest weights
    std::map<int, long> chi;
    for (int i = 0; i <= m1; ++i)
        for (int j = 0; j <= m2; ++j) chi[(m1 - 2 * i) + (m2 - 2 * j)] += 1;
    std::vector<int> out;
    while (!chi.empty()) {
        auto top = std::prev(chi.end());
        if (top->second <= 0) { chi.erase(top); continue; }
        int m = top->first;
        if (m < 0) throw Error("character decomposition failed");
        out.push_back(m);
        for (int i = 0; i <= m; ++i) {
            int w = m - 2 * i;
            auto it = chi.find(w);
            if (it == chi.end() || it->second <= 0) throw Error("character decomposition failed");
            if (--it->second == 0) chi.erase(it);
        }
    }
    std::sort(out.rbegin(), out.rend());
    return out;
}

ExactScalar lseries_coeff_std2_oracle(int p, int m, HalfInt s1, HalfInt s2) {
    // Sym^{m1} (x) Sym^{m2} = sum_{l} Sym^{m1+m2-2l}, so Sym^m occurs in the
    // pairs (l+a, l+m-a); the l-sum is geometric and the a-sum finite
    auto qs = [&](HalfInt h) { return ExactScalar::q_pow(p, h); };
    ExactScalar geo = ExactScalar::one() - qs(-(s1 + s2));
    if (geo.is_zero()) throw PoleAtZero("oracle denominator");
    ExactScalar sum = ExactScalar::zero();
    for (int a = 0; a <= m; ++a)
        sum += qs(-(s1 * a)) * qs(-(s2 * (m - a)));
    return sum * geo.quad_inverse();
}

ExactScalar cs_whittaker_value(int p, int m, const Rat& x, DualGroup dual) {
    if (x == 0) throw ZeroInput("cs_whittaker_value at 0");
    long long v = val_p(x, p); // |x| = q^{-v}
    int step = (dual == DualGroup::PGL2) ? 2 : 1;
    if (-v == m) return ExactScalar::one();
    if (m >= 1 && -v == m - step) return -ExactScalar::one();
    if (m == 0 && v > 0) {
        ExactScalar absinv = ExactScalar(ball_volume(p, static_cast<int>(-v))); // |x|^{-1}
        if (dual == DualGroup::PGL2) return absinv * kloosterman_pgl2_rat(x, p);
        return absinv * salie_sl2_rat(x, p);
    }
    return ExactScalar::zero();
}

ExactScalar cs_whittaker_value(int p, int m, const PAdicPoint& x, DualGroup dual) {
    if (x.is_zero()) throw ZeroInput("cs_whittaker_value at 0");
    if (m == 0 && x.valuation() > 0) {
        // germ case reads digits; delegate to the precision-checked kernels
        ExactScalar absinv = ExactScalar(ball_volume(p, static_cast<int>(-x.valuation())));
        if (dual == DualGroup::PGL2) return absinv * kloosterman_pgl2(x);
        return absinv * salie_sl2(x);
    }
    // away from the germ only the shell matters
    long long v = x.valuation();
    Rat rep = (v >= 0) ? Rat(mpz_class(ipow(p, static_cast<int>(v))))
                       : Rat(1, mpz_class(ipow(p, static_cast<int>(-v))));
    return cs_whittaker_value(p, m, rep, dual);
}

namespace {

// |x|^h as an exact scalar, h a half-integer
ExactScalar abs_pow(int p, const Rat& x, HalfInt h) {
    long long v = val_p(x, p);
    return ExactScalar::q_pow(p, HalfInt(static_cast<int>(-v) * h.twice));
}

} // namespace

ExactScalar basic_std2(int p, const Rat& xi, HalfInt s1, HalfInt s2) {
    if (xi == 0) throw ZeroInput("basic_std2 at 0");
    auto qs = [&](HalfInt h) { return ExactScalar::q_pow(p, h); };
    ExactScalar one = ExactScalar::one();
    ExactScalar pref2 = one - ExactScalar(Rat(1, p * p)); // 1 - q^{-2}
    long long v = val_p(xi, p);
    long long lg = -v; // log_q |xi|
    const HalfInt half(1);
    if (s1 == s2) {
        ExactScalar den = one - qs(-(s1 + s2));
        if (den.is_zero()) throw PoleAtZero("basic_std2 at s = 0");
        ExactScalar pref = pref2.quad_inverse() * den.quad_inverse();
        ExactScalar a = one - qs(-(s1 + s2) - HalfInt::whole(1)); // 1 - q^{-2s-1}
        ExactScalar b = one - ExactScalar(Rat(3)) * qs(-(s1 + s2) - HalfInt::whole(1));
        if (lg >= 0)
            return pref * abs_pow(p, xi, -(s1 + half)) *
                   (a * ExactScalar(Rat(static_cast<long>(lg))) + b);
        if (lg == -1)
            return pref * ExactScalar(Rat(-2)) * qs(-(s1 + half));
        return pref * abs_pow(p, xi, HalfInt::whole(-1)) * kloosterman_pgl2_rat(xi, p);
    }
    ExactScalar d1 = one - qs(s1 - s2);
    ExactScalar d2 = one - qs(-(s1 + s2));
    if (d1.is_zero() || d2.is_zero()) throw PoleAtZero("basic_std2 denominator");
    ExactScalar pref = pref2.quad_inverse() * d1.quad_inverse() * d2.quad_inverse();
    if (lg >= 0) {
        ExactScalar t1 = abs_pow(p, xi, -(s1 + half)) * (one - qs(-(s1 * 2) - HalfInt::whole(1)));
        ExactScalar t2 = abs_pow(p, xi, -(s2 + half)) * qs(s1 - s2) *
                         (one - qs(-(s2 * 2) - HalfInt::whole(1)));
        return pref * (t1 - t2);
    }
    if (lg == -1)
        return pref * (ExactScalar(Rat(-1)) * qs(-(s1 + half)) + qs(-(s2 + half)) * qs(s1 - s2));
    return pref * (one - qs(s1 - s2)) * abs_pow(p, xi, HalfInt::whole(-1)) *
           kloosterman_pgl2_rat(xi, p);
}

ExactScalar basic_ad(int p, const Rat& zeta, HalfInt s) {
    if (zeta == 0) throw ZeroInput("basic_ad at 0");
    auto qs = [&](HalfInt h) { return ExactScalar::q_pow(p, h); };
    ExactScalar one = ExactScalar::one();
    ExactScalar den = one - qs(-(s * 2));
    if (den.is_zero()) throw PoleAtZero("basic_ad at s = 0");
    ExactScalar pref = (one - ExactScalar(Rat(1, p * p))).quad_inverse() * den.quad_inverse();
    long long v = val_p(zeta, p);
    if (v <= 0)
        return pref * abs_pow(p, zeta, -(s + HalfInt::whole(1))) *
               (one - qs(-(s + HalfInt::whole(1))));
    return pref * abs_pow(p, zeta, HalfInt::whole(-1)) * salie_sl2_rat(zeta, p);
}

namespace {
Rat point_rep(const PAdicPoint& x) {
    if (x.is_zero()) return Rat(0);
    Rat u(static_cast<long>(x.unit()));
    long long v = x.valuation();
    if (v >= 0) return u * Rat(mpz_class(ipow(x.p(), static_cast<int>(v))));
    return u / Rat(mpz_class(ipow(x.p(), static_cast<int>(-v))));
}
} // namespace

ExactScalar basic_std2(int p, const PAdicPoint& xi, HalfInt s1, HalfInt s2) {
    return basic_std2(p, point_rep(xi), s1, s2);
}

ExactScalar basic_ad(int p, const PAdicPoint& zeta, HalfInt s) {
    return basic_ad(p, point_rep(zeta), s);
}

ExactScalar basic_std2_series(int p, const Rat& xi, HalfInt s1, HalfInt s2, int trunc) {
    ExactScalar pref = (ExactScalar::one() - ExactScalar(Rat(1, p * p))).quad_inverse();
    ExactScalar sum = ExactScalar::zero();
    for (int m = 0; m <= trunc; ++m) {
        ExactScalar cs = cs_whittaker_value(p, m, xi, DualGroup::PGL2);
        if (cs.is_zero()) continue;
        sum += lseries_coeff_std2(p, m, s1, s2) * ExactScalar::q_pow(p, HalfInt(-m)) * cs;
    }
    return pref * sum;
}

ExactScalar basic_ad_series(int p, const Rat& zeta, HalfInt s, int trunc) {
    ExactScalar pref = (ExactScalar::one() - ExactScalar(Rat(1, p * p))).quad_inverse();
    ExactScalar sum = ExactScalar::zero();
    for (int m = 0; m <= trunc; ++m) {
        ExactScalar cs = cs_whittaker_value(p, m, zeta, DualGroup::SL2);
        if (cs.is_zero()) continue;
        sum += lseries_coeff_ad(p, m, s) * ExactScalar::q_pow(p, HalfInt::whole(-m)) * cs;
    }
    return pref * sum;
}

} // namespace flcheck
