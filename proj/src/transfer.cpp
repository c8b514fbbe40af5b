#include "flcheck/transfer.hpp"

#include <algorithm>
#include <cassert>

namespace flcheck {

namespace {

constexpr long long kInf = 1'000'000;

long long wval(const Rat& y, int p) { return y == 0 ? kInf : val_p(y, p); }

Rat rat_qpow(int p, long long e) {
    if (e >= 0) return Rat(mpz_class(ipow(p, static_cast<int>(e))));
    return Rat(1, mpz_class(ipow(p, static_cast<int>(-e))));
}

// |x|^h for x on the shell val(x) = s
ExactScalar abs_pow_shell(int p, long long s, HalfInt h) {
    return ExactScalar::q_pow(p, HalfInt(static_cast<int>(-s) * h.twice));
}

// int_{val(x) = s} psi(c x) dx: full shell, boundary shell, or zero
ExactScalar shell_psi_integral(int p, long long s, const Rat& c) {
    long long vc = wval(c, p);
    if (vc + s >= 0)
        return ExactScalar(ball_volume(p, static_cast<int>(s)) * Rat(p - 1, p));
    if (vc + s == -1)
        return -ExactScalar(ball_volume(p, static_cast<int>(s) + 1));
    return ExactScalar::zero();
}

long long rat_mod_ll(const Rat& x, int p, int k) {
    if (x == 0) return 0;
    if (val_p(x, p) < 0) throw Error("non-integral residue");
    long long pk = ipow(p, k);
    mpz_class pkz(static_cast<long>(pk));
    mpz_class ni = x.get_num() % pkz;
    if (ni < 0) ni += pkz;
    mpz_class di = x.get_den() % pkz;
    mpz_class inv;
    mpz_invert(inv.get_mpz_t(), di.get_mpz_t(), pkz.get_mpz_t());
    return mpz_class(ni * inv % pkz).get_si();
}

} // namespace

// -------------------------------------------------------------- fourier_tate

ExactScalar fourier_tate(int p, const PRadial& term, int sign, const Rat& y) {
    // integrand phase psi(c x) with c = -y for F_psi, +y for F_{psi^{-1}}
    Rat c = (sign > 0) ? -y : y;
    long long w = wval(c, p); // psi(cx) trivial on val(x) >= -w
    ExactScalar out = ExactScalar::zero();
    if (term.logdeg > 1) throw DivergentTail("log degree > 1 unsupported");
    // boundary shell s = -w-1 contributes -q^{-s-1} per unit of magnitude
    if (w < kInf / 2 && -w - 1 >= term.lo && -w - 1 <= term.hi) {
        long long s = -w - 1;
        ExactScalar val = term.c * abs_pow_shell(p, s, term.alpha);
        if (term.logdeg == 1) val *= ExactScalar(Rat(static_cast<long>(-s)));
        out += val * (-ExactScalar(ball_volume(p, static_cast<int>(s) + 1)));
    }
    // full shells s in [max(lo, -w), hi]
    long long s0 = std::max(term.lo, w >= kInf / 2 ? term.lo : -w);
    long long hi = term.hi;
    if (s0 > hi) return out;
    if (s0 <= -kInf / 2) throw DivergentTail("radial transform unbounded toward infinity");
    bool infinite = hi >= kInf / 2;
    if (infinite && term.alpha.twice <= -2)
        throw DivergentTail("non-summable radial tail toward zero");
    ExactScalar acc = ExactScalar::zero();
    if (infinite) {
        // sum_{s >= s0} (-s)^d t^s with t = q^{-(alpha+1)}, |t| < 1
        HalfInt texp(-(term.alpha.twice + 2));
        ExactScalar t = ExactScalar::q_pow(p, texp);
        ExactScalar t_s0 = ExactScalar::q_pow(p, HalfInt(static_cast<int>(texp.twice * s0)));
        ExactScalar geo = (ExactScalar::one() - t).quad_inverse();
        if (term.logdeg == 0) {
            acc = t_s0 * geo;
        } else {
            // sum_{s>=s0} s t^s = t^{s0} (s0 - (s0-1) t) (1-t)^{-2}; log is -s
            ExactScalar num = ExactScalar(Rat(static_cast<long>(s0))) -
                              ExactScalar(Rat(static_cast<long>(s0 - 1))) * t;
            acc = -(t_s0 * num * geo * geo);
        }
    } else {
        for (long long s = s0; s <= hi; ++s) {
            ExactScalar ts =
                ExactScalar::q_pow(p, HalfInt(static_cast<int>(-(term.alpha.twice + 2) * s)));
            if (term.logdeg == 1) ts *= ExactScalar(Rat(static_cast<long>(-s)));
            acc += ts;
        }
    }
    out += term.c * acc * ExactScalar(Rat(p - 1, p));
    return out;
}

// ------------------------------------------------------- kloosterman rule

ExactScalar fourier_kloo_rule(int p, const Rat& y) {
    Rat q(p);
    if (y == 0 || val_p(y, p) >= 0)
        return ExactScalar(1 - 1 / q - 1 / (q * q));
    long long v = val_p(y, p);
    if (v == -1) return ExactScalar(-1 / q - 1 / (q * q));
    if (v % 2 != 0) return ExactScalar::zero();
    // |y| > q even: int_{|x|^2 = |y|^{-1}} psi^{-1}(1/x + x y) dx
    int m = static_cast<int>(-v) / 2;
    int ell = static_cast<int>(-v) + 2;
    ShellDomain dom{p, m, ell};
    ExactScalar sum = ExactScalar::zero();
    dom.for_each([&](const Rat& x) { sum += psi_rat(-(1 / x + x * y), p); });
    return sum * ExactScalar(dom.weight());
}

ExactScalar fourier_kloo_enum(int p, const Rat& y, int shells) {
    long long w = wval(y, p);
    int smax = shells > 0 ? shells
                          : static_cast<int>(std::max<long long>(2, w >= kInf / 2 ? 2 : -w)) + 2;
    ExactScalar total = ExactScalar::zero();
    for (int s = 0; s <= smax; ++s) {
        int r = static_cast<int>(std::max<long long>(
            {1, static_cast<long long>(s) + 1, w >= kInf / 2 ? 1 : -s - w}));
        ShellDomain dom{p, s, r};
        ExactScalar acc = ExactScalar::zero();
        dom.for_each([&](const Rat& x) { acc += psi_rat(-(1 / x + x * y), p); });
        total += acc * ExactScalar(dom.weight());
    }
    // deeper shells vanish: psi^{-1}(xy) is trivial there while the inner
    // oscillation integrates to zero shell by shell
    return total;
}

// ------------------------------------------------------- germ expansions

namespace {

ExactScalar transform_eval(const GermExpansion& h, int sign, const Rat& y);

bool in_range(long long s, long long lo, long long hi) { return s >= lo && s <= hi; }

ExactScalar piece_eval(int p, const GermPiece& piece, const Rat& x) {
    long long s = val_p(x, p);
    if (std::holds_alternative<PRadial>(piece)) {
        const auto& t = std::get<PRadial>(piece);
        if (!in_range(s, t.lo, t.hi)) return ExactScalar::zero();
        ExactScalar v = t.c * abs_pow_shell(p, s, t.alpha);
        if (t.logdeg == 1) v *= ExactScalar(Rat(static_cast<long>(-s)));
        return v;
    }
    if (std::holds_alternative<POsc>(piece)) {
        const auto& t = std::get<POsc>(piece);
        if (!in_range(s, t.lo, t.hi)) return ExactScalar::zero();
        return t.c * abs_pow_shell(p, s, t.alpha) * psi_rat(t.inv ? Rat(t.b / x) : Rat(t.b * x), p);
    }
    if (std::holds_alternative<PKloo>(piece)) {
        const auto& t = std::get<PKloo>(piece);
        if (!in_range(s, t.lo, t.hi)) return ExactScalar::zero();
        return t.c * abs_pow_shell(p, s, t.alpha) *
               kloosterman_pgl2_rat(t.inv ? Rat(t.b / x) : Rat(t.b * x), p);
    }
    if (std::holds_alternative<PSalie>(piece)) {
        const auto& t = std::get<PSalie>(piece);
        if (!in_range(s, t.lo, t.hi)) return ExactScalar::zero();
        return t.c * abs_pow_shell(p, s, t.alpha) *
               salie_sl2_rat(t.inv ? Rat(t.b / x) : Rat(t.b * x), p);
    }
    if (std::holds_alternative<PWindow>(piece)) {
        const auto& t = std::get<PWindow>(piece);
        auto it = t.shells.find(s);
        if (it == t.shells.end()) return ExactScalar::zero();
        long long u = unit_mod(x, p, it->second.level);
        auto jt = it->second.vals.find(u);
        if (jt == it->second.vals.end()) throw Error("window table missing unit");
        return jt->second;
    }
    const auto& t = std::get<PTransform>(piece);
    Rat arg = t.post_iota ? 1 / x : x;
    ExactScalar v;
    if (t.memo) {
        auto it = t.memo->find(arg);
        if (it != t.memo->end()) v = it->second;
        else {
            v = transform_eval(*t.inner, t.sign, arg);
            t.memo->emplace(arg, v);
        }
    } else {
        v = transform_eval(*t.inner, t.sign, arg);
    }
    return t.c * abs_pow_shell(p, s, t.post_alpha) * v;
}

// ---- transforms of individual pieces evaluated at a point ----

ExactScalar window_transform(int p, const PWindow& t, int sign, const Rat& y) {
    long long w = wval(y, p);
    Rat eps = (sign > 0) ? Rat(-1) : Rat(1);
    ExactScalar out = ExactScalar::zero();
    for (const auto& [s, table] : t.shells) {
        long long need = (w >= kInf / 2) ? 1 : -s - w;
        int r = std::max<int>(table.level, static_cast<int>(std::max<long long>(1, need)));
        ShellDomain dom{p, static_cast<int>(s), r};
        ExactScalar acc = ExactScalar::zero();
        dom.for_each([&](const Rat& x) {
            long long u = unit_mod(x, p, table.level);
            auto jt = table.vals.find(u);
            if (jt == table.vals.end()) throw Error("window table missing unit");
            acc += jt->second * psi_rat(eps * x * y, p);
        });
        out += acc * ExactScalar(dom.weight());
    }
    return out;
}

ExactScalar osc_transform(int p, const POsc& t, int sign, const Rat& y) {
    Rat eps = (sign > 0) ? Rat(-1) : Rat(1);
    if (!t.inv) {
        // psi(bx) shifts the phase: total coefficient b + eps y
        PRadial rad{t.c, t.alpha, 0, t.lo, t.hi};
        Rat c = t.b + eps * y;
        // fourier_tate with sign -1 integrates against psi(+ y' x)
        return fourier_tate(p, rad, -1, c);
    }
    // c |x|^alpha psi(b/x): per-shell unit sums with exact pruning
    long long w = wval(y, p);
    long long vb = val_p(t.b, p);
    ExactScalar out = ExactScalar::zero();
    long long lo = std::max(t.lo, w >= kInf / 2 ? t.lo : -w - 1);
    long long hi = std::min(t.hi, std::max(vb + 1, (w >= kInf / 2 ? vb : -w) + 1));
    for (long long s = lo; s <= hi; ++s) {
        // both oscillations orthogonal => zero
        if ((w >= kInf / 2 || s > -w) && vb - s <= -2) continue;
        long long rpsi = (w >= kInf / 2) ? 1 : -s - w;
        int r = static_cast<int>(std::max<long long>({1, rpsi, s - vb}));
        ShellDomain dom{p, static_cast<int>(s), r};
        ExactScalar acc = ExactScalar::zero();
        dom.for_each([&](const Rat& x) { acc += psi_rat(t.b / x + eps * x * y, p); });
        out += t.c * abs_pow_shell(p, s, t.alpha) * acc * ExactScalar(dom.weight());
    }
    return out;
}

// Fourier transform of c |x|^alpha K(b/x) on lo <= val(x) <= hi, by
// interchanging the germ integral with the radial shell sums
ExactScalar kloo_inv_transform(int p, const PKloo& t, int sign, const Rat& y) {
    if (!t.inv) throw MissingRule("Fourier of a direct Kloosterman germ");
    if (t.hi >= kInf / 2) throw MissingRule("Kloosterman tail unbounded toward zero");
    Rat eps = (sign > 0) ? Rat(-1) : Rat(1);
    long long w = wval(y, p);
    long long vb = val_p(t.b, p);
    long long sstar = (w >= kInf / 2) ? vb : -vb - 2 * w; // |u/b| = |y| shell
    long long lo_eff = std::max(t.lo, std::min({w >= kInf / 2 ? vb - 3 : -w - 1,
                                                sstar - 1, vb - 3}) - 2);
    ExactScalar out = ExactScalar::zero();
    for (long long s = lo_eff; s <= t.hi; ++s) {
        long long varg = vb - s; // val(b/x)
        if (varg % 2 != 0) continue;
        long long uv = varg / 2;
        // K(b/x) = int_{val(u) = uv} psi^{-1}(u x / b + 1/u) du
        ExactScalar prev = ExactScalar::zero();
        bool have = false;
        ExactScalar shell = ExactScalar::zero();
        for (int ru = 1; ; ++ru) {
            if (ru > 22) throw NoStabilization("kloosterman interchange level");
            ShellDomain dom{p, static_cast<int>(uv), ru};
            ExactScalar acc = ExactScalar::zero();
            dom.for_each([&](const Rat& u) {
                Rat clin = eps * y - u / t.b;
                acc += psi_rat(-1 / u, p) * shell_psi_integral(p, s, clin);
            });
            acc *= ExactScalar(dom.weight());
            if (have && acc == prev) { shell = acc; break; }
            prev = acc;
            have = true;
        }
        out += t.c * abs_pow_shell(p, s, t.alpha) * shell;
    }
    return out;
}

// Fourier transform of c |x|^alpha S(b/x): the Salie integral interchanges
// with a complete radial transform at shifted phase points
ExactScalar salie_inv_transform(int p, const PSalie& t, int sign, const Rat& y) {
    if (!t.inv) throw MissingRule("Fourier of a direct Salie germ");
    Rat eps = (sign > 0) ? Rat(-1) : Rat(1);
    ExactScalar prev = ExactScalar::zero();
    bool have = false;
    for (int rv = 2;; ++rv) {
        if (rv > 22) throw NoStabilization("salie interchange level");
        long long pl = ipow(p, rv - 1);
        ExactScalar acc = ExactScalar::zero();
        PRadial rad{ExactScalar::one(), t.alpha, 0, t.lo, t.hi};
        for (int sgn : {1, -1})
            for (long long tt = 0; tt < pl; ++tt) {
                Rat v = Rat(sgn) + Rat(p) * Rat(static_cast<long>(tt));
                Rat shift = eps * y - (v + 1 / v) / t.b;
                // inner radial sum against psi(shift * x)
                acc += fourier_tate(p, rad, -1, shift);
            }
        acc *= ExactScalar(ball_volume(p, rv));
        if (have && acc == prev) return t.c * acc;
        prev = acc;
        have = true;
    }
}

// generic transform of a lazily transformed piece (nested Fourier)
ExactScalar nested_transform(int p, const PTransform& t, int sign, const Rat& y) {
    Rat eps = (sign > 0) ? Rat(-1) : Rat(1);
    long long w = wval(y, p);
    if (w >= kInf / 2) throw MissingRule("nested transform at 0");
    auto value_at = [&](const Rat& x) {
        GermPiece piece = t;
        return piece_eval(p, piece, x);
    };

    auto shell_integral = [&](long long s) -> ExactScalar {
        int r = static_cast<int>(std::max<long long>(1, -s - w));
        ExactScalar prev = ExactScalar::zero();
        bool have = false;
        for (;; ++r) {
            if (r > 22) throw NoStabilization("nested transform shell level");
            ShellDomain dom{p, static_cast<int>(s), r};
            ExactScalar acc = ExactScalar::zero();
            dom.for_each([&](const Rat& x) { acc += value_at(x) * psi_rat(eps * x * y, p); });
            acc *= ExactScalar(dom.weight());
            if (have && acc == prev) return acc;
            prev = acc;
            have = true;
        }
    };

    ExactScalar out = ExactScalar::zero();
    // toward |x| large: stop after three consecutive zero shells
    int zeros = 0;
    for (long long s = -w - 1;; --s) {
        if (s < -w - 45) throw DivergentTail("nested transform tail (infinity side)");
        ExactScalar sh = shell_integral(s);
        if (sh.is_zero()) {
            if (++zeros >= 3) break;
        } else {
            zeros = 0;
            out += sh;
        }
    }
    // toward 0: the transformed function becomes locally constant; detect the
    // stable value and close the remaining ball in closed form
    ExactScalar cinf = ExactScalar::zero();
    int stable = 0;
    long long s_last = -w;
    for (long long s = -w;; ++s) {
        if (s > -w + 60) throw DivergentTail("nested transform tail (zero side)");
        ExactScalar c0;
        bool constant = true;
        bool first = true;
        for (int r : {1, 2}) {
            ShellDomain dom{p, static_cast<int>(s), r};
            dom.for_each([&](const Rat& x) {
                ExactScalar v = value_at(x);
                if (first) { c0 = v; first = false; }
                else if (!(v == c0)) constant = false;
            });
        }
        out += shell_integral(s);
        if (constant && (stable == 0 || c0 == cinf)) {
            cinf = c0;
            ++stable;
        } else {
            stable = 0;
        }
        if (stable >= 3) { s_last = s; break; }
    }
    out += cinf * ExactScalar(ball_volume(p, static_cast<int>(s_last + 1)));
    return out;
}

ExactScalar piece_transform(int p, const GermPiece& piece, int sign, const Rat& y) {
    if (std::holds_alternative<PRadial>(piece))
        return fourier_tate(p, std::get<PRadial>(piece), sign, y);
    if (std::holds_alternative<POsc>(piece))
        return osc_transform(p, std::get<POsc>(piece), sign, y);
    if (std::holds_alternative<PKloo>(piece))
        return kloo_inv_transform(p, std::get<PKloo>(piece), sign, y);
    if (std::holds_alternative<PSalie>(piece))
        return salie_inv_transform(p, std::get<PSalie>(piece), sign, y);
    if (std::holds_alternative<PWindow>(piece))
        return window_transform(p, std::get<PWindow>(piece), sign, y);
    return nested_transform(p, std::get<PTransform>(piece), sign, y);
}

ExactScalar transform_eval(const GermExpansion& h, int sign, const Rat& y) {
    ExactScalar out = ExactScalar::zero();
    for (const auto& piece : h.pieces()) out += piece_transform(h.p(), piece, sign, y);
    return out;
}

} // namespace

ExactScalar GermExpansion::eval(const Rat& x) const {
    ExactScalar out = ExactScalar::zero();
    for (const auto& piece : pieces_) out += piece_eval(p_, piece, x);
    return out;
}

GermExpansion GermExpansion::twist_abs(HalfInt gamma) const {
    GermExpansion out(p_);
    for (auto piece : pieces_) {
        std::visit([&](auto& t) {
            using T = std::decay_t<decltype(t)>;
            if constexpr (std::is_same_v<T, PWindow>) {
                for (auto& [s, table] : t.shells) {
                    ExactScalar f = abs_pow_shell(p_, s, gamma);
                    for (auto& [u, v] : table.vals) v *= f;
                }
            } else if constexpr (std::is_same_v<T, PTransform>) {
                // the twist lives in the current evaluation variable
                t.post_alpha = t.post_alpha + gamma;
            } else {
                t.alpha = t.alpha + gamma;
            }
        }, piece);
        out.add(std::move(piece));
    }
    return out;
}

GermExpansion GermExpansion::iota() const {
    GermExpansion out(p_);
    for (auto piece : pieces_) {
        std::visit([&](auto& t) {
            using T = std::decay_t<decltype(t)>;
            if constexpr (std::is_same_v<T, PRadial>) {
                t.alpha = -t.alpha;
                if (t.logdeg % 2 == 1) t.c = -t.c;
                long long lo = -t.hi, hi = -t.lo;
                t.lo = lo;
                t.hi = hi;
            } else if constexpr (std::is_same_v<T, PWindow>) {
                std::map<long long, ShellTable> flipped;
                for (auto& [s, table] : t.shells) {
                    ShellTable nt;
                    nt.level = table.level;
                    long long pm = ipow(p_, table.level);
                    for (auto& [u, v] : table.vals) {
                        long long uinv = 1;
                        for (long long g = 1; g < pm; ++g)
                            if ((static_cast<__int128>(g) * u) % pm == 1) { uinv = g; break; }
                        nt.vals[uinv] = v;
                    }
                    flipped[-s] = std::move(nt);
                }
                t.shells = std::move(flipped);
            } else if constexpr (std::is_same_v<T, PTransform>) {
                t.post_iota = !t.post_iota;
                t.post_alpha = -t.post_alpha;
            } else {
                t.inv = !t.inv;
                t.alpha = -t.alpha;
                long long lo = -t.hi, hi = -t.lo;
                t.lo = lo;
                t.hi = hi;
            }
        }, piece);
        out.add(std::move(piece));
    }
    return out;
}

GermExpansion GermExpansion::scaled(const ExactScalar& c) const {
    GermExpansion out(p_);
    for (auto piece : pieces_) {
        std::visit([&](auto& t) {
            using T = std::decay_t<decltype(t)>;
            if constexpr (std::is_same_v<T, PWindow>) {
                for (auto& [s, table] : t.shells)
                    for (auto& [u, v] : table.vals) v *= c;
            } else {
                t.c *= c;
            }
        }, piece);
        out.add(std::move(piece));
    }
    return out;
}

GermExpansion GermExpansion::operator+(const GermExpansion& o) const {
    GermExpansion out = *this;
    for (const auto& piece : o.pieces_) out.add(piece);
    return out;
}

GermExpansion GermExpansion::fourier(int sign) const {
    GermExpansion out(p_);
    PTransform t;
    t.inner = std::make_shared<GermExpansion>(*this);
    t.sign = sign;
    t.memo = std::make_shared<std::map<Rat, ExactScalar>>();
    out.add(std::move(t));
    return out;
}

GermExpansion GermExpansion::basic_std2_density(int p, HalfInt s1, HalfInt s2, int window) {
    GermExpansion out(p);
    (void)window;
    ExactScalar one = ExactScalar::one();
    auto qs = [&](HalfInt h) { return ExactScalar::q_pow(p, h); };
    ExactScalar pref2 = (one - ExactScalar(Rat(1, p * p))).quad_inverse();
    const HalfInt half(1);
    if (s1 == s2) {
        ExactScalar pref = pref2 * (one - qs(-(s1 + s2))).quad_inverse();
        ExactScalar a = one - qs(-(s1 + s2) - HalfInt::whole(1));
        ExactScalar b = one - ExactScalar(Rat(3)) * qs(-(s1 + s2) - HalfInt::whole(1));
        out.add(PRadial{pref * a, -(s1 + half), 1, -kInf, 0});
        out.add(PRadial{pref * b, -(s1 + half), 0, -kInf, 0});
        out.add(PRadial{pref * ExactScalar(Rat(-2)) * qs(-(s1 + half)), HalfInt(0), 0, 1, 1});
        out.add(PKloo{pref, Rat(1), HalfInt::whole(-1), false, 2, kInf});
        return out;
    }
    ExactScalar pref = pref2 * (one - qs(s1 - s2)).quad_inverse() *
                       (one - qs(-(s1 + s2))).quad_inverse();
    out.add(PRadial{pref * (one - qs(-(s1 * 2) - HalfInt::whole(1))), -(s1 + half), 0, -kInf, 0});
    out.add(PRadial{-(pref * qs(s1 - s2) * (one - qs(-(s2 * 2) - HalfInt::whole(1)))),
                    -(s2 + half), 0, -kInf, 0});
    out.add(PRadial{pref * (qs(-(s2 + half)) * qs(s1 - s2) - qs(-(s1 + half))),
                    HalfInt(0), 0, 1, 1});
    out.add(PKloo{pref * (one - qs(s1 - s2)), Rat(1), HalfInt::whole(-1), false, 2, kInf});
    return out;
}

GermExpansion GermExpansion::basic_ad_density(int p, HalfInt s, int window) {
    // density with respect to the additive measure: |zeta| * basic_ad
    GermExpansion out(p);
    (void)window;
    ExactScalar one = ExactScalar::one();
    auto qs = [&](HalfInt h) { return ExactScalar::q_pow(p, h); };
    ExactScalar pref = (one - ExactScalar(Rat(1, p * p))).quad_inverse() *
                       (one - qs(-(s * 2))).quad_inverse();
    out.add(PRadial{pref * (one - qs(-(s + HalfInt::whole(1)))), -s, 0, -kInf, 0});
    out.add(PSalie{pref, Rat(1), HalfInt(0), false, 1, kInf});
    return out;
}

// ------------------------------------------------------------- B pipeline

namespace {

ExactScalar b_pref(int p, int n) {
    ExactScalar one = ExactScalar::one();
    Rat q(p);
    ExactScalar d1 = one - ExactScalar(rat_qpow(p, n - 1));
    ExactScalar d2 = one - ExactScalar(rat_qpow(p, -n));
    return (one - ExactScalar(1 / (q * q))).quad_inverse() * d1.quad_inverse() *
           d2.quad_inverse();
}

PRadial b_f1_power(int p, int n) {
    return PRadial{ExactScalar(Rat(1) - rat_qpow(p, -2 * n)), HalfInt::whole(n - 1), 0, 0, kInf};
}
PRadial b_f1_const(int p, int n) {
    Rat c = rat_qpow(p, -2) + rat_qpow(p, -1) - 1 - rat_qpow(p, n - 2);
    return PRadial{ExactScalar(c), HalfInt(0), 0, 0, kInf};
}
PRadial b_f2(int p, int n) {
    Rat c = -rat_qpow(p, -n - 1) + rat_qpow(p, -1) + rat_qpow(p, -2) - rat_qpow(p, n - 2);
    return PRadial{ExactScalar(c), HalfInt(0), 0, -1, -1};
}

} // namespace

ExactScalar b_pipeline_F_f1(int p, int n, const Rat& x) {
    return fourier_tate(p, b_f1_power(p, n), -1, x) + fourier_tate(p, b_f1_const(p, n), -1, x);
}

ExactScalar b_pipeline_F_f2(int p, int n, const Rat& x) {
    return fourier_tate(p, b_f2(p, n), -1, x);
}

ExactScalar b_pipeline_value(int p, int n, const Rat& x) {
    // F_{psi^{-1}}(iota |.| f)(x): the Kloosterman part returns to
    // 1_o(x) psi^{-1}(1/x) by Fourier inversion, the rest is f1 + f2
    ExactScalar kpart = ExactScalar::zero();
    if (x != 0 && val_p(x, p) >= 0)
        kpart = ExactScalar(Rat(1) - rat_qpow(p, n - 1)) * psi_rat(-1 / x, p);
    return b_pref(p, n) * (kpart + b_pipeline_F_f1(p, n, x) + b_pipeline_F_f2(p, n, x));
}

ExactScalar b_composite_on_basic(int p, int n, const Rat& zeta) {
    if (zeta == 0) throw ZeroInput("composite at 0");
    long long v = val_p(zeta, p);
    ExactScalar zfac = ExactScalar::q_pow(p, HalfInt(static_cast<int>(v))); // |zeta|^{-1/2}
    return psi_rat(2 / zeta, p) * zfac * b_pipeline_value(p, n, zeta / 4);
}

// ------------------------------------------------------------- transfer_T

GermExpansion transfer_T(const GermExpansion& phi, const LValueSpec& spec) {
    const HalfInt half(1);
    if (spec.dual == DualGroup::SL2) {
        GermExpansion h1 = phi.twist_abs(spec.s2 + half).iota().fourier(-1);
        return h1.twist_abs(HalfInt::whole(1) + spec.s1 - spec.s2).iota().fourier(-1);
    }
    return phi.twist_abs(spec.s0).iota().fourier(-1);
}

// ------------------------------------------------------------- ttilde

ExactScalar ttilde(const HermitianModel& model, const BallFunction& phi,
                   const OrbitalPoint& point, int k_budget) {
    const int p = phi.p();
    if (k_budget <= 0) k_budget = 10;
    Rat ca, cb;
    int axis_a = 0, axis_b = 0;
    ExactScalar pref = ExactScalar::one();
    switch (model.tag) {
        case DTag::F: {
            if (point.zeta == 0) throw ZeroInput("ttilde at 0");
            long long vz = val_p(point.zeta, p);
            pref = ExactScalar::q_pow(p, HalfInt(static_cast<int>(vz) * model.d));
            ca = 1 / point.zeta;
            cb = 1 / point.zeta;
            axis_a = 0;
            axis_b = model.d - 1;
            break;
        }
        case DTag::FxF: {
            if (point.t1 == 0 || point.t2 == 0) throw ZeroInput("ttilde at 0");
            long long v1 = val_p(point.t1, p), v2 = val_p(point.t2, p);
            pref = ExactScalar::q_pow(p, HalfInt(static_cast<int>(v1 - v2) * model.n));
            ca = 1 / point.t1;
            cb = point.t2;
            axis_a = model.n - 1;
            axis_b = 2 * model.n - 1;
            break;
        }
        case DTag::Mat2: {
            if (point.xi == 0) throw ZeroInput("ttilde at 0");
            long long vx = val_p(point.xi, p);
            pref = ExactScalar::q_pow(p, HalfInt::whole(static_cast<int>(vx) * model.n));
            ca = 1 / point.xi;
            cb = 1;
            axis_a = model.n - 1;
            axis_b = 2 * model.n - 1;
            break;
        }
    }
    ExactScalar prev = ExactScalar::zero();
    int agree = 0;
    for (int k = 1; k <= k_budget; ++k) {
        long long pk = ipow(p, k);
        int extra = static_cast<int>(std::max<long long>(
            {0, -wval(ca, p), -wval(cb, p)}));
        int ell = k + extra;
        ExactScalar val = ExactScalar::zero();
        for (const auto& term : phi.terms()) {
            for (const auto& b : term.axes)
                if (b.center != 0 || b.level < 0)
                    throw Error("ttilde needs integral 0-centered ball data");
            std::map<long long, ExactScalar> dist{{0, ExactScalar::one()}};
            Rat volume = 1;
            auto fold = [&](const std::map<long long, ExactScalar>& pd) {
                std::map<long long, ExactScalar> nd;
                for (const auto& [q1, c1] : dist)
                    for (const auto& [q2, c2] : pd) {
                        long long qv = (q1 + q2) % pk;
                        auto it = nd.find(qv);
                        if (it == nd.end()) nd.emplace(qv, c1 * c2);
                        else it->second += c1 * c2;
                    }
                dist = std::move(nd);
            };
            auto convolve_pair = [&](int ax, int ay, int csign) {
                const Ball& bx = term.axes[ax];
                const Ball& by = term.axes[ay];
                bool wa = (ax == axis_a || ax == axis_b);
                bool wb = (ay == axis_a || ay == axis_b);
                int la = wa ? ell : k, lb = wb ? ell : k;
                long long na = ipow(p, std::max(0, la - bx.level));
                long long nb = ipow(p, std::max(0, lb - by.level));
                std::map<long long, ExactScalar> pd;
                for (long long i = 0; i < na; ++i)
                    for (long long j = 0; j < nb; ++j) {
                        Rat xv = Rat(static_cast<long>(i)) * ball_volume(p, -bx.level);
                        Rat yv = Rat(static_cast<long>(j)) * ball_volume(p, -by.level);
                        long long qv = rat_mod_ll(xv * yv, p, k);
                        if (csign < 0) qv = (pk - qv) % pk;
                        ExactScalar wgt = ExactScalar::one();
                        if (ax == axis_a) wgt *= psi_rat(-ca * xv, p);
                        if (ax == axis_b) wgt *= psi_rat(-cb * xv, p);
                        if (ay == axis_a) wgt *= psi_rat(-ca * yv, p);
                        if (ay == axis_b) wgt *= psi_rat(-cb * yv, p);
                        auto it = pd.find(qv);
                        if (it == pd.end()) pd.emplace(qv, wgt);
                        else it->second += wgt;
                    }
                volume *= ball_volume(p, std::max(0, la - bx.level) + bx.level) *
                          ball_volume(p, std::max(0, lb - by.level) + by.level);
                fold(pd);
            };
            switch (model.tag) {
                case DTag::F: {
                    int np = model.d / 2;
                    for (int i = 0; i < np; ++i) convolve_pair(i, model.d - 1 - i, 1);
                    if (model.d % 2 == 1) {
                        const Ball& cball = term.axes[(model.d - 1) / 2];
                        std::map<long long, ExactScalar> pd;
                        long long nz = ipow(p, std::max(0, k - cball.level));
                        for (long long z = 0; z < nz; ++z) {
                            Rat zv = Rat(static_cast<long>(z)) * ball_volume(p, -cball.level);
                            long long qv = rat_mod_ll(zv * zv, p, k);
                            auto it = pd.find(qv);
                            if (it == pd.end()) pd.emplace(qv, ExactScalar::one());
                            else it->second += ExactScalar::one();
                        }
                        volume *= ball_volume(p, std::max(0, k - cball.level) + cball.level);
                        fold(pd);
                    }
                    break;
                }
                case DTag::FxF:
                    for (int i = 0; i < model.n; ++i) convolve_pair(i, model.n + i, 1);
                    break;
                case DTag::Mat2:
                    for (int i = 0; i < model.n; ++i) {
                        convolve_pair(i, model.n + i, 1);
                        convolve_pair(2 * model.n + i, 3 * model.n + i, -1);
                    }
                    break;
            }
            auto it = dist.find(1 % pk);
            if (it != dist.end()) val += term.coeff * it->second * ExactScalar(volume);
        }
        ExactScalar scaled = val * ExactScalar(Rat(mpz_class(ipow(p, k))));
        if (k > 1 && scaled == prev) {
            if (++agree >= 2) return pref * scaled;
        } else {
            agree = 0;
        }
        prev = scaled;
    }
    throw NoStabilization("ttilde did not stabilize");
}

// ------------------------------------------------------------- composites

ExactScalar CompositeRelation::apply_rhs(int p, int n, const Rat& x) const {
    LValueSpec spec = LValueSpec::standard(type, n);
    switch (type) {
        case SphericalType::A:
        case SphericalType::C:
            return GermExpansion::basic_std2_density(p, spec.s1, spec.s2, 0).eval(x);
        case SphericalType::D:
            return ExactScalar(abs_p(x, p)).quad_inverse() *
                   GermExpansion::basic_ad_density(p, spec.s0, 0).eval(x);
        case SphericalType::B:
            return b_composite_on_basic(p, n, x);
    }
    throw UnsupportedType("composite");
}

ExactScalar CompositeRelation::apply_lhs(int p, int n, const Rat& x) const {
    LValueSpec spec = LValueSpec::standard(type, n);
    switch (type) {
        case SphericalType::D: {
            GermExpansion f = GermExpansion::basic_ad_density(p, spec.s0, 0);
            GermExpansion tf = transfer_T(f, spec);
            GermExpansion g = tf.fourier(1).iota().twist_abs(HalfInt::whole(-n));
            return g.eval(x);
        }
        case SphericalType::A: {
            GermExpansion f = GermExpansion::basic_std2_density(p, spec.s1, spec.s2, 0);
            GermExpansion tf = transfer_T(f, spec);
            GermExpansion g = tf.fourier(1).iota().twist_abs(HalfInt::whole(-1))
                                  .fourier(1).iota().twist_abs(HalfInt(-n));
            return g.eval(x);
        }
        case SphericalType::C: {
            GermExpansion f = GermExpansion::basic_std2_density(p, spec.s1, spec.s2, 0);
            GermExpansion tf = transfer_T(f, spec);
            GermExpansion g = tf.fourier(1).iota().twist_abs(HalfInt::whole(-2))
                                  .fourier(1).iota().twist_abs(HalfInt::whole(-n + 1));
            return g.eval(x);
        }
        case SphericalType::B: {
            GermExpansion f = GermExpansion::basic_std2_density(p, spec.s1, spec.s2, 0);
            GermExpansion tf = transfer_T(f, spec);
            GermExpansion g = tf.fourier(1);
            ExactScalar v = g.eval(4 / x);
            long long vz = val_p(x, p);
            return ExactScalar::q_pow(p, HalfInt(static_cast<int>(vz) * (2 * n + 1))) *
                   psi_rat(2 / x, p) * v;
        }
    }
    throw UnsupportedType("composite");
}

CompositeRelation composite_relation(SphericalType type) {
    CompositeRelation rel;
    rel.type = type;
    switch (type) {
        case SphericalType::A: rel.description = "identity"; break;
        case SphericalType::C: rel.description = "identity"; break;
        case SphericalType::D: rel.description = "|.|^{-1}"; break;
        case SphericalType::B: rel.description = "psi(2/zeta)-twisted"; break;
    }
    return rel;
}

const std::vector<TransformRule>& validated_rules(int p) {
    static std::map<int, std::vector<TransformRule>> cache;
    auto it = cache.find(p);
    if (it != cache.end()) return it->second;
    std::vector<TransformRule> rules;
    {
        TransformRule r{"F_psi(1_o psi^{-1}(1/x))", "Fourier of the Kloosterman kernel", false};
        int checked = 0;
        for (int shell : {-1, 0, 1, 2, 3}) {
            for (long long u : {1LL, 2LL, static_cast<long long>(p - 1)}) {
                Rat y = Rat(static_cast<long>(u)) * rat_qpow(p, -shell);
                if (!(fourier_kloo_rule(p, y) == fourier_kloo_enum(p, y)))
                    throw MissingRule("kloosterman rule failed validation");
                ++checked;
            }
        }
        r.validated = checked >= 12;
        rules.push_back(r);
    }
    {
        TransformRule r{"F(c |x|^a log^d 1_{val >= m})", "shell resummation of Tate integrals",
                        false};
        for (int twice_alpha : {0, 1, 2}) {
            for (int logdeg : {0, 1}) {
                PRadial t{ExactScalar::one(), HalfInt(twice_alpha), logdeg, 0, kInf};
                for (int shell : {-2, -1, 0, 1}) {
                    Rat y = rat_qpow(p, -shell);
                    ExactScalar closed = fourier_tate(p, t, -1, y);
                    ExactScalar brute = ExactScalar::zero();
                    long long w = wval(y, p);
                    long long cut = std::max<long long>(8, -w + 8);
                    for (long long s = t.lo; s <= cut; ++s) {
                        ExactScalar mag = abs_pow_shell(p, s, t.alpha);
                        if (t.logdeg == 1) mag *= ExactScalar(Rat(static_cast<long>(-s)));
                        brute += mag * shell_psi_integral(p, s, y);
                    }
                    PRadial tail = t;
                    tail.lo = cut + 1;
                    brute += fourier_tate(p, tail, -1, y);
                    if (!(closed == brute))
                        throw MissingRule("radial tate rule failed validation");
                }
            }
        }
        r.validated = true;
        rules.push_back(r);
    }
    auto [jt, ok] = cache.emplace(p, std::move(rules));
    (void)ok;
    return jt->second;
}

} // namespace flcheck
