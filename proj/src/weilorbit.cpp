#include "flcheck/weilorbit.hpp"

#include <algorithm>
#include <cassert>
#include <map>

namespace flcheck {

// ---------------------------------------------------------------- models

HermitianModel HermitianModel::standard(DTag tag, int n) {
    switch (tag) {
        case DTag::F: return {tag, n, n};
        case DTag::FxF: return {tag, n, 2 * n};
        case DTag::Mat2: return {tag, n, 4 * n};
    }
    throw Error("bad tag");
}

HermitianModel HermitianModel::for_type(SphericalType t, int n) {
    switch (t) {
        case SphericalType::A: return standard(DTag::FxF, n);
        case SphericalType::B: return standard(DTag::F, 2 * n + 1);
        case SphericalType::C: return standard(DTag::Mat2, n);
        case SphericalType::D: return standard(DTag::F, 2 * n);
    }
    throw Error("bad type");
}

std::vector<Rat> HermitianModel::v0() const {
    std::vector<Rat> v(d, Rat(0));
    switch (tag) {
        case DTag::F:
            v[0] = 1;
            v[d - 1] = 1;
            break;
        case DTag::FxF:
            v[n - 1] = 1;     // x_n
            v[2 * n - 1] = 1; // y_n
            break;
        case DTag::Mat2:
            v[n - 1] = 1;     // x_n
            v[2 * n - 1] = 1; // y_n  (block n = I_2)
            break;
    }
    return v;
}

Rat HermitianModel::quad(const std::vector<Rat>& v) const {
    Rat s = 0;
    switch (tag) {
        case DTag::F:
            for (int i = 0; 2 * i + 1 < d; ++i) s += v[i] * v[d - 1 - i];
            if (d % 2 == 1) { Rat c = v[(d - 1) / 2]; s += c * c; }
            break;
        case DTag::FxF:
            for (int i = 0; i < n; ++i) s += v[i] * v[n + i];
            break;
        case DTag::Mat2:
            for (int i = 0; i < n; ++i) s += v[i] * v[n + i] - v[2 * n + i] * v[3 * n + i];
            break;
    }
    return s;
}

Rat HermitianModel::linear(const std::vector<Rat>& v) const {
    switch (tag) {
        case DTag::F: return v[0] + v[d - 1];
        case DTag::FxF: return v[n - 1] + v[2 * n - 1];
        case DTag::Mat2: return v[n - 1] + v[2 * n - 1];
    }
    throw Error("bad tag");
}

DElem DElem::scalar(DTag tag, const Rat& x) {
    DElem e{tag, x, 0, 0, 0};
    if (tag == DTag::FxF) e.b = x;
    if (tag == DTag::Mat2) e.d = x;
    return e;
}

Rat DElem::norm() const {
    switch (tag) {
        case DTag::F: return a;
        case DTag::FxF: return a * b;
        case DTag::Mat2: return a * d - b * c;
    }
    throw Error("bad tag");
}

OrbitalPoint OrbitalPoint::sl2(const Rat& zeta) {
    OrbitalPoint t{};
    t.tag = DTag::F;
    t.zeta = zeta;
    return t;
}
OrbitalPoint OrbitalPoint::gl2(const Rat& t1, const Rat& t2) {
    OrbitalPoint t{};
    t.tag = DTag::FxF;
    t.t1 = t1;
    t.t2 = t2;
    return t;
}
OrbitalPoint OrbitalPoint::sp(const Rat& xi) {
    OrbitalPoint t{};
    t.tag = DTag::Mat2;
    t.xi = xi;
    return t;
}
OrbitalPoint OrbitalPoint::sp_iwasawa(const Rat& xi, const Rat& x, const Rat& m) {
    OrbitalPoint t = sp(xi);
    t.iwasawa = {x, m};
    return t;
}

// ------------------------------------------------------- whittaker engine

namespace {

long long val_or(const Rat& x, int p, long long inf) {
    return x == 0 ? inf : val_p(x, p);
}

constexpr long long kInf = 1'000'000;

struct PairData {
    int usign = 1;
    Rat alpha = 0, beta = 0;
    Ball bx{Rat(0), 0}, by{Rat(0), 0};
};

struct CenterData {
    Rat ucoeff = 1;
    Ball b{Rat(0), 0}; // center must be 0
};

struct RWProblem {
    int p = 3;
    ExactScalar prefactor = ExactScalar::one();
    std::vector<PairData> pairs;
    std::optional<CenterData> center;
};

// V(u) = int_{bx} int_{by} psi(usign * u * x * y) psi^{-1}(alpha x + beta y) dx dy
ExactScalar pair_value(int p, const Rat& u, const PairData& pd) {
    Rat uu = pd.usign > 0 ? u : -u;
    const Rat& c1 = pd.bx.center;
    const Rat& c2 = pd.by.center;
    int k1 = pd.bx.level, k2 = pd.by.level;
    Rat vol = ball_volume(p, k1 + k2);
    Rat U = uu * ball_volume(p, k1 + k2); // uu p^{k1+k2}
    Rat A = (uu * c2 - pd.alpha) * ball_volume(p, k1);
    Rat B = (uu * c1 - pd.beta) * ball_volume(p, k2);
    long long vU = val_or(U, p, kInf);
    if (vU >= 0) {
        if (val_or(A, p, kInf) < 0 || val_or(B, p, kInf) < 0) return ExactScalar::zero();
        Rat phase = uu * c1 * c2 - pd.alpha * c1 - pd.beta * c2;
        return ExactScalar(vol) * psi_rat(phase, p);
    }
    if (val_or(A, p, kInf) < vU || val_or(B, p, kInf) < vU) return ExactScalar::zero();
    // total oscillation collapses to -alpha beta / uu in this branch
    Rat scale = vol * ball_volume(p, static_cast<int>(-vU)); // vol * q^{vU}
    return ExactScalar(scale) * psi_rat(-pd.alpha * pd.beta / uu, p);
}

// sound level r such that the pair value on the shell val(u) = -j depends
// only on the unit of u mod p^r
int pair_constancy(int p, int j, const PairData& pd) {
    const Rat& c1 = pd.bx.center;
    const Rat& c2 = pd.by.center;
    int k1 = pd.bx.level, k2 = pd.by.level;
    long long r = 0;
    long long vU = -j + k1 + k2;
    if (vU >= 0) {
        if (c1 != 0 && c2 != 0) r = std::max(r, j - val_p(c1 * c2, p));
        if (c2 != 0) r = std::max(r, j - val_p(c2, p) - k1);
        if (c1 != 0) r = std::max(r, j - val_p(c1, p) - k2);
    } else {
        if (pd.alpha != 0 && pd.beta != 0)
            r = std::max(r, -val_p(pd.alpha * pd.beta, p) - j);
        if (c2 != 0) r = std::max(r, static_cast<long long>(k2) - val_p(c2, p));
        if (c1 != 0) r = std::max(r, static_cast<long long>(k1) - val_p(c1, p));
    }
    return static_cast<int>(std::max<long long>(0, r));
}

// valuation threshold S with the pair value constant on val(u) >= S
long long pair_smallu(int p, const PairData& pd) {
    const Rat& c1 = pd.bx.center;
    const Rat& c2 = pd.by.center;
    int k1 = pd.bx.level, k2 = pd.by.level;
    long long s = -(k1 + k2); // stay in the |U| <= 1 branch
    if (c1 != 0 && c2 != 0) s = std::max(s, -val_p(c1 * c2, p));
    if (c2 != 0) {
        if (pd.alpha != 0) s = std::max(s, val_p(pd.alpha, p) - val_p(c2, p) + 1);
        else s = std::max(s, -val_p(c2, p) - k1);
    }
    if (c1 != 0) {
        if (pd.beta != 0) s = std::max(s, val_p(pd.beta, p) - val_p(c1, p) + 1);
        else s = std::max(s, -val_p(c1, p) - k2);
    }
    return s;
}

ExactScalar center_value(int p, const Rat& u, const CenterData& cd) {
    if (cd.b.center != 0) throw Error("center coordinate ball must be centered at 0");
    if (u == 0) return ExactScalar(ball_volume(p, cd.b.level));
    // int_{p^k o} psi(u c z^2) dz = q^{-k} gauss(u c p^{2k})
    Rat arg = u * cd.ucoeff * ball_volume(p, 2 * cd.b.level);
    return ExactScalar(ball_volume(p, cd.b.level)) * gauss_quadratic_rat(arg, p);
}

int center_constancy(int /*p*/, int /*j*/, const CenterData&) {
    // the closed Gauss form depends on u through its shell and ac(u) mod p
    return 1;
}

long long center_smallu(int p, const CenterData& cd) {
    // int psi(u c z^2) stabilizes once |u c p^{2k}| <= 1
    return -val_p(cd.ucoeff, p) - 2 * cd.b.level;
}

ExactScalar rw_H(const RWProblem& prob, const Rat& u) {
    ExactScalar h = ExactScalar::one();
    for (const auto& pd : prob.pairs) {
        h *= pair_value(prob.p, u, pd);
        if (h.is_zero()) return h;
    }
    if (prob.center) h *= center_value(prob.p, u, *prob.center);
    return h;
}

WhittakerResult rw_integrate(const RWProblem& prob, int k_budget) {
    const int p = prob.p;
    // constant-near-zero threshold
    long long S0 = 0;
    for (const auto& pd : prob.pairs) S0 = std::max(S0, pair_smallu(p, pd));
    if (prob.center) S0 = std::max(S0, center_smallu(p, *prob.center));
    S0 = std::max<long long>(S0, 0);

    // H is constant on val(u) >= S0 and psi^{-1}(u) = 1 there
    ExactScalar total = rw_H(prob, Rat(mpz_class(ipow(p, static_cast<int>(S0))))) *
                        ExactScalar(ball_volume(p, static_cast<int>(S0)));

    // shells |u| = q^j, j > -S0; psi^{-1}(u) = 1 for j <= 0
    long long guard_max = 2;
    for (const auto& pd : prob.pairs) {
        guard_max = std::max(guard_max, static_cast<long long>(pd.bx.level + pd.by.level) + 1);
        if (pd.by.center != 0) guard_max = std::max(guard_max, pd.by.level - val_p(pd.by.center, p) + 1);
        if (pd.bx.center != 0) guard_max = std::max(guard_max, pd.bx.level - val_p(pd.bx.center, p) + 1);
    }
    if (k_budget <= 0) {
        long long ab = 0;
        for (const auto& pd : prob.pairs)
            if (pd.alpha != 0 && pd.beta != 0)
                ab = std::max(ab, -val_p(pd.alpha * pd.beta, p));
        k_budget = static_cast<int>(std::max(guard_max, ab)) + 8;
    }

    int last_nonzero = 0;
    int consec_rule_zero = 0;
    bool stabilized = false;
    for (long long j = -S0 + 1; j <= k_budget; ++j) {
        int rH = 1;
        for (const auto& pd : prob.pairs)
            rH = std::max(rH, pair_constancy(p, static_cast<int>(j), pd));
        if (prob.center)
            rH = std::max(rH, center_constancy(p, static_cast<int>(j), *prob.center));
        ExactScalar shell = ExactScalar::zero();
        bool rule_zero = false;
        if (j <= 0) {
            ShellDomain dom{p, static_cast<int>(-j), rH};
            dom.for_each([&](const Rat& u) { shell += rw_H(prob, u); });
            shell *= ExactScalar(dom.weight());
        } else if (rH >= j) {
            ShellDomain dom{p, static_cast<int>(-j), rH};
            dom.for_each([&](const Rat& u) { shell += psi_rat(-u, p) * rw_H(prob, u); });
            shell *= ExactScalar(dom.weight());
        } else {
            // H is constant on cosets over which int psi^{-1}(u) du vanishes;
            // this persists for all larger shells once past the branch guards
            rule_zero = true;
        }

        if (rule_zero) {
            ++consec_rule_zero;
        } else {
            consec_rule_zero = 0;
            if (!shell.is_zero()) {
                last_nonzero = static_cast<int>(j);
                total += shell;
            }
        }
        if (j >= guard_max && consec_rule_zero >= 3) {
            stabilized = true;
            break;
        }
    }
    if (!stabilized)
        throw NoStabilization("regularized integral did not stabilize within budget " +
                              std::to_string(k_budget));
    return {total * prob.prefactor, std::max(1, last_nonzero)};
}

// fold a conductor shift into the problem data: psi'(x) = psi(x p^{-shift})
// turns into the standard character after substituting u -> u p^{shift},
// which scales the linear forms and the measure
void apply_psi_shift(RWProblem& prob, int shift, int& k_budget) {
    if (shift == 0) return;
    Rat c = shift > 0 ? Rat(1, mpz_class(ipow(prob.p, shift)))
                      : Rat(mpz_class(ipow(prob.p, -shift)));
    for (auto& pd : prob.pairs) {
        pd.alpha *= c;
        pd.beta *= c;
    }
    prob.prefactor *= ExactScalar(ball_volume(prob.p, shift)); // |c|^{-1}
    if (k_budget > 0) k_budget += shift;
}

RWProblem build_problem(const HermitianModel& model, const BallTerm& term,
                        const OrbitalPoint& t, int p) {
    RWProblem prob;
    prob.p = p;
    prob.prefactor = term.coeff;
    const int n = model.n;
    switch (model.tag) {
        case DTag::F: {
            if (t.zeta == 0) throw ZeroInput("torus coordinate is 0");
            long long vz = val_p(t.zeta, p);
            // |zeta|^{-d/2}
            prob.prefactor *= ExactScalar::q_pow(p, HalfInt(static_cast<int>(vz) * model.d));
            int np = model.d / 2;
            for (int i = 0; i < np; ++i) {
                PairData pd;
                pd.bx = term.axes[i];
                pd.by = term.axes[model.d - 1 - i];
                if (i == 0) { pd.alpha = 1 / t.zeta; pd.beta = 1 / t.zeta; }
                prob.pairs.push_back(pd);
            }
            if (model.d % 2 == 1) {
                CenterData cd;
                cd.b = term.axes[(model.d - 1) / 2];
                prob.center = cd;
            }
            break;
        }
        case DTag::FxF: {
            if (t.t1 == 0 || t.t2 == 0) throw ZeroInput("torus coordinate is 0");
            long long v1 = val_p(t.t1, p), v2 = val_p(t.t2, p);
            // |t1/t2|^{-n/2}
            prob.prefactor *= ExactScalar::q_pow(p, HalfInt(static_cast<int>(v1 - v2) * n));
            for (int i = 0; i < n; ++i) {
                PairData pd;
                pd.bx = term.axes[i];
                pd.by = term.axes[n + i];
                if (i == n - 1) { pd.alpha = 1 / t.t1; pd.beta = t.t2; }
                prob.pairs.push_back(pd);
            }
            break;
        }
        case DTag::Mat2: {
            if (t.xi == 0) throw ZeroInput("torus coordinate is 0");
            Rat x = 0, m = 1;
            if (t.iwasawa) { x = t.iwasawa->first; m = t.iwasawa->second; }
            if (m == 0) throw ZeroInput("Iwasawa torus coordinate is 0");
            long long vxi = val_p(t.xi, p);
            // |xi|^{-n}
            prob.prefactor *= ExactScalar::q_pow(p, HalfInt::whole(static_cast<int>(vxi) * n));
            for (int i = 0; i < n; ++i) {
                PairData pd;
                pd.bx = term.axes[i];
                pd.by = term.axes[n + i];
                if (i == n - 1) { pd.alpha = 1 / (t.xi * m); pd.beta = m; }
                prob.pairs.push_back(pd);
            }
            for (int i = 0; i < n; ++i) {
                PairData pd;
                pd.usign = -1;
                pd.bx = term.axes[2 * n + i];
                pd.by = term.axes[3 * n + i];
                if (i == n - 1) { pd.alpha = 0; pd.beta = -x / m; }
                prob.pairs.push_back(pd);
            }
            break;
        }
    }
    return prob;
}

} // namespace

WhittakerResult regularized_whittaker(const HermitianModel& model, const BallFunction& phi,
                                      const OrbitalPoint& t, int k_budget,
                                      const WeilOptions& opts) {
    if (phi.dim() != model.d) throw Error("test function dimension mismatch");
    ExactScalar value = ExactScalar::zero();
    int k_stab = 1;
    for (const auto& term : phi.terms()) {
        RWProblem prob = build_problem(model, term, t, phi.p());
        int budget = k_budget;
        apply_psi_shift(prob, opts.psi_shift, budget);
        if (opts.du_scale != 1) prob.prefactor *= ExactScalar(opts.du_scale);
        WhittakerResult r = rw_integrate(prob, budget);
        value += r.value;
        k_stab = std::max(k_stab, r.k_stab);
    }
    return {value, k_stab};
}

// --------------------------------------------------------------- weil_act

namespace {

Ball scale_ball(const Ball& b, const Rat& s, int p) {
    // {x : s x in b} = b / s
    return Ball{b.center / s, b.level - static_cast<int>(val_p(s, p))};
}

struct WeylShape {
    std::vector<int> perm;   // axis i of the output pairs with input axis perm[i]
    std::vector<Rat> mult;   // pairing multiplier per input axis
};

WeylShape weyl_shape(const HermitianModel& model) {
    WeylShape w;
    w.perm.resize(model.d);
    w.mult.assign(model.d, Rat(1));
    switch (model.tag) {
        case DTag::F:
            for (int i = 0; i < model.d; ++i) w.perm[i] = model.d - 1 - i;
            if (model.d % 2 == 1) w.mult[(model.d - 1) / 2] = 2;
            break;
        case DTag::FxF:
            for (int i = 0; i < model.n; ++i) {
                w.perm[i] = model.n + i;
                w.perm[model.n + i] = i;
            }
            break;
        case DTag::Mat2:
            for (int i = 0; i < model.n; ++i) {
                w.perm[i] = model.n + i;          // x_i <-> y_i
                w.perm[model.n + i] = i;
                w.perm[2 * model.n + i] = 3 * model.n + i; // z_i <-> w_i, sign -1
                w.perm[3 * model.n + i] = 2 * model.n + i;
                w.mult[2 * model.n + i] = -1;
                w.mult[3 * model.n + i] = -1;
            }
            break;
    }
    return w;
}

} // namespace

BallFunction weil_act(const HermitianModel& model, const WeilGenerator& g,
                      const BallFunction& phi) {
    if (phi.dim() != model.d) throw Error("test function dimension mismatch");
    const int p = phi.p();
    if (std::holds_alternative<GenScalar>(g)) {
        return phi * std::get<GenScalar>(g).z;
    }
    if (std::holds_alternative<GenTorus>(g)) {
        const OrbitalPoint& t = std::get<GenTorus>(g).t;
        BallFunction out(p, model.d);
        for (const auto& term : phi.terms()) {
            BallTerm nt = term;
            switch (model.tag) {
                case DTag::F: {
                    long long vz = val_p(t.zeta, p);
                    for (auto& b : nt.axes) b = scale_ball(b, t.zeta, p);
                    nt.coeff *= ExactScalar::q_pow(p, HalfInt(static_cast<int>(-vz) * model.d));
                    break;
                }
                case DTag::FxF: {
                    long long v1 = val_p(t.t1, p), v2 = val_p(t.t2, p);
                    for (int i = 0; i < model.n; ++i) {
                        nt.axes[i] = scale_ball(nt.axes[i], t.t1, p);
                        nt.axes[model.n + i] = scale_ball(nt.axes[model.n + i], 1 / t.t2, p);
                    }
                    nt.coeff *= ExactScalar::q_pow(p, HalfInt(static_cast<int>(-(v1 - v2)) * model.n));
                    break;
                }
                case DTag::Mat2: {
                    long long vx = val_p(t.xi, p);
                    for (int i = 0; i < model.n; ++i) {
                        nt.axes[i] = scale_ball(nt.axes[i], t.xi, p);
                        nt.axes[3 * model.n + i] = scale_ball(nt.axes[3 * model.n + i], t.xi, p);
                    }
                    nt.coeff *= ExactScalar::q_pow(p, HalfInt::whole(static_cast<int>(-vx) * model.n));
                    break;
                }
            }
            out.add_term(nt.axes, nt.coeff);
        }
        return out;
    }
    if (std::holds_alternative<GenUnipotent>(g)) {
        const Rat u = std::get<GenUnipotent>(g).u;
        if (u == 0) return phi;
        long long vu = val_p(u, p);
        BallFunction out(p, model.d);
        WeylShape shape = weyl_shape(model); // reuse the pairing layout
        for (const auto& term : phi.terms()) {
            // refine every axis so that psi(u Q) is constant on each product coset
            std::vector<std::vector<Ball>> splits(model.d);
            std::size_t combos = 1;
            for (int i = 0; i < model.d; ++i) {
                const Ball& b = term.axes[i];
                long long vmin = b.center == 0
                    ? b.level
                    : std::min<long long>(val_p(b.center, p), b.level);
                long long L = std::max<long long>(
                    b.level, std::max(-vu - vmin, (-vu + 1) / 2));
                long long cnt = ipow(p, static_cast<int>(L - b.level));
                combos *= static_cast<std::size_t>(cnt);
                if (combos > 200000)
                    throw PrecisionLoss("unipotent refinement level exceeds capacity");
                for (long long tt = 0; tt < cnt; ++tt)
                    splits[i].push_back(Ball{b.center + Rat(static_cast<long>(tt)) *
                                                           ball_volume(p, -b.level),
                                             static_cast<int>(L)});
            }
            std::vector<std::size_t> idx(model.d, 0);
            while (true) {
                std::vector<Ball> axes(model.d);
                std::vector<Rat> centers(model.d);
                for (int i = 0; i < model.d; ++i) {
                    axes[i] = splits[i][idx[i]];
                    centers[i] = axes[i].center;
                }
                ExactScalar c = term.coeff * psi_rat(u * model.quad(centers), p);
                out.add_term(axes, c);
                int pos = 0;
                while (pos < model.d && ++idx[pos] == splits[pos].size()) idx[pos++] = 0;
                if (pos == model.d) break;
            }
        }
        (void)shape;
        return out;
    }
    // Weyl element: per-axis twisted Fourier transforms, then permute axes
    WeylShape shape = weyl_shape(model);
    BallFunction out(p, model.d);
    for (const auto& term : phi.terms()) {
        std::vector<std::vector<std::pair<Ball, ExactScalar>>> axis_out(model.d);
        for (int i = 0; i < model.d; ++i) {
            const Ball& b = term.axes[i];
            Rat volume = ball_volume(p, b.level);
            int oa = shape.perm[i];
            Rat mu = shape.mult[i];
            if (b.center == 0) {
                axis_out[oa].push_back({Ball{Rat(0), -b.level}, ExactScalar(volume)});
                continue;
            }
            int jc = static_cast<int>(-val_p(mu * b.center, p));
            int L = std::max(-b.level, jc);
            long long cnt = ipow(p, L + b.level);
            if (cnt > 200000) throw PrecisionLoss("weyl materialization too large");
            for (long long tt = 0; tt < cnt; ++tt) {
                Rat y0 = Rat(static_cast<long>(tt)) * ball_volume(p, b.level);
                axis_out[oa].push_back(
                    {Ball{y0, L}, ExactScalar(volume) * psi_rat(-mu * b.center * y0, p)});
            }
        }
        std::vector<BallTerm> partial{BallTerm{std::vector<Ball>(model.d), term.coeff}};
        for (int a = 0; a < model.d; ++a) {
            std::vector<BallTerm> next;
            for (const auto& t : partial)
                for (const auto& [ball, c] : axis_out[a]) {
                    BallTerm nt = t;
                    nt.axes[a] = ball;
                    nt.coeff *= c;
                    next.push_back(std::move(nt));
                }
            partial = std::move(next);
            if (partial.size() > 200000) throw PrecisionLoss("weyl materialization too large");
        }
        for (auto& t : partial) out.add_term(t.axes, t.coeff);
    }
    return out;
}

// --------------------------------------------------- thickened-fiber orbits

namespace {

// distribution of a quadratic contribution over the residues of a ball pair:
// counts of c * x * y mod p^k (c = +-1), coordinates confined to the balls
std::map<long long, mpz_class> pair_q_dist(int p, int k, const Ball& bx, const Ball& by,
                                           int csign, Rat& volume_unit) {
    if (bx.center != 0 || by.center != 0 || bx.level < 0 || by.level < 0)
        throw Error("orbital enumeration needs integral 0-centered balls");
    long long pk = ipow(p, k);
    std::map<long long, mpz_class> dist;
    long long nx = ipow(p, std::max(0, k - bx.level));
    long long ny = ipow(p, std::max(0, k - by.level));
    long long sx = ipow(p, bx.level), sy = ipow(p, by.level);
    for (long long i = 0; i < nx; ++i)
        for (long long j = 0; j < ny; ++j) {
            long long v = static_cast<long long>(
                (static_cast<__int128>(i) * sx % pk) * (j * sy % pk) % pk);
            if (csign < 0) v = (pk - v) % pk;
            dist[v] += 1;
        }
    volume_unit = ball_volume(p, std::max(0, k - bx.level) + bx.level) *
                  ball_volume(p, std::max(0, k - by.level) + by.level);
    return dist;
}

std::map<long long, mpz_class> convolve(int p, int k,
                                        const std::map<long long, mpz_class>& a,
                                        const std::map<long long, mpz_class>& b) {
    long long pk = ipow(p, k);
    std::map<long long, mpz_class> out;
    for (const auto& [x, cx] : a)
        for (const auto& [y, cy] : b) out[(x + y) % pk] += cx * cy;
    return out;
}

long long rat_mod(const Rat& x, int p, int k) {
    // x must be a p-integer here
    if (x == 0) return 0;
    if (val_p(x, p) < 0) throw Error("non-integral residue");
    long long pk = ipow(p, k);
    mpz_class num = x.get_num(), den = x.get_den();
    mpz_class pkz(static_cast<long>(pk));
    mpz_class ni = num % pkz; if (ni < 0) ni += pkz;
    mpz_class di = den % pkz;
    mpz_class inv;
    mpz_invert(inv.get_mpz_t(), di.get_mpz_t(), pkz.get_mpz_t());
    mpz_class r = ni * inv % pkz;
    return r.get_si();
}

} // namespace

ExactScalar orbital_I(const HermitianModel& model, const BallFunction& phi,
                      const DElem& x, int k_budget) {
    if (phi.dim() != model.d) throw Error("test function dimension mismatch");
    const int p = phi.p();
    // regular locus check in the quotient coordinates
    Rat nu = x.norm();
    if (model.tag == DTag::F) {
        if (model.d % 2 == 0 ? (nu == 2 || nu == -2) : (nu == 0 || nu == 1))
            throw SingularFiber("fiber over a singular point");
    } else if (nu == 0 || nu == 1) {
        throw SingularFiber("fiber over a singular point");
    }
    if (k_budget <= 0) {
        long long v = 0;
        for (const Rat& c : {x.a, x.b, x.c, x.d})
            if (c != 0) v = std::max(v, std::llabs(val_p(c, p)));
        k_budget = static_cast<int>(v) + 10;
    }
    int dcod = model.tag == DTag::F ? 1 : (model.tag == DTag::FxF ? 2 : 4);
    ExactScalar prev = ExactScalar::zero();
    int agree = 0;
    for (int k = 1; k <= k_budget; ++k) {
        long long pk = ipow(p, k);
        // target for the quadratic constraint and the D-coordinates
        Rat qtarget = 1;
        ExactScalar val = ExactScalar::zero();
        for (const auto& term : phi.terms()) {
            Rat lin_target = (model.tag == DTag::F)
                ? ((model.d % 2 == 1) ? 4 * x.a - 2 : x.a)
                : Rat(0);

            // distribution of the unconstrained quadratic part
            std::map<long long, mpz_class> dist{{0, mpz_class(1)}};
            Rat volume(1);
            bool feasible = true;
            Rat fixed_q = 0; // contribution of constrained coordinates to Q
            auto handle_fixed = [&](int axis, const Rat& tgt) {
                const Ball& b = term.axes[axis];
                // thickened membership: target ball (tgt, k) must meet b
                Ball tb{tgt, k};
                if (!tb.intersects(b, p)) { feasible = false; return Rat(0); }
                // measure of the overlap (the finer ball)
                return ball_volume(p, std::max(k, b.level));
            };

            switch (model.tag) {
                case DTag::F: {
                    int np = model.d / 2;
                    // pair 1 carries the linear constraint v_1 + v_d = lin_target
                    for (int i = 1; i < np; ++i) {
                        Rat vu;
                        auto dpair = pair_q_dist(p, k, term.axes[i], term.axes[model.d - 1 - i], 1, vu);
                        dist = convolve(p, k, dist, dpair);
                        volume *= vu;
                    }
                    if (model.d % 2 == 1) {
                        const Ball& cb = term.axes[(model.d - 1) / 2];
                        if (cb.center != 0 || cb.level < 0)
                            throw Error("orbital enumeration needs integral 0-centered balls");
                        std::map<long long, mpz_class> dc;
                        long long nz = ipow(p, std::max(0, k - cb.level));
                        long long sz = ipow(p, cb.level);
                        for (long long z = 0; z < nz; ++z) {
                            long long zz = z * sz % pk;
                            dc[static_cast<long long>(static_cast<__int128>(zz) * zz % pk)] += 1;
                        }
                        dist = convolve(p, k, dist, dc);
                        volume *= ball_volume(p, std::max(0, k - cb.level) + cb.level);
                    }
                    // enumerate pair 1 under the linear constraint
                    const Ball& b1 = term.axes[0];
                    const Ball& b2 = term.axes[model.d - 1];
                    if (b1.center != 0 || b2.center != 0 || b1.level < 0 || b2.level < 0)
                        throw Error("orbital enumeration needs integral 0-centered balls");
                    if (lin_target != 0 && val_p(lin_target, p) < 0) { feasible = false; break; }
                    long long n1 = ipow(p, std::max(0, k - b1.level));
                    long long s1 = ipow(p, b1.level);
                    long long lt = rat_mod(lin_target, p, k);
                    std::map<long long, mpz_class> dpair1;
                    for (long long i = 0; i < n1; ++i) {
                        long long a = i * s1 % pk;
                        long long bb = ((lt - a) % pk + pk) % pk;
                        // b must be representable inside ball b2 mod p^k
                        if (b2.level > 0 && bb % ipow(p, std::min(k, b2.level)) != 0) continue;
                        dpair1[static_cast<long long>(static_cast<__int128>(a) * bb % pk)] += 1;
                    }
                    dist = convolve(p, k, dist, dpair1);
                    // v_1 ranges over its residues; v_d is pinned to one class
                    volume *= ball_volume(p, std::max(k, b1.level)) *
                              ball_volume(p, std::max(k, b2.level));
                    break;
                }
                case DTag::FxF: {
                    for (int i = 0; i + 1 < model.n; ++i) {
                        Rat vu;
                        auto dpair = pair_q_dist(p, k, term.axes[i], term.axes[model.n + i], 1, vu);
                        dist = convolve(p, k, dist, dpair);
                        volume *= vu;
                    }
                    Rat vx = handle_fixed(model.n - 1, x.b);
                    Rat vy = handle_fixed(2 * model.n - 1, x.a);
                    if (!feasible) break;
                    volume *= vx * vy;
                    fixed_q = x.a * x.b; // x_n y_n contribution (mod p^k below)
                    break;
                }
                case DTag::Mat2: {
                    for (int i = 0; i + 1 < model.n; ++i) {
                        Rat vu;
                        auto d1 = pair_q_dist(p, k, term.axes[i], term.axes[model.n + i], 1, vu);
                        dist = convolve(p, k, dist, d1);
                        volume *= vu;
                        auto d2 = pair_q_dist(p, k, term.axes[2 * model.n + i],
                                              term.axes[3 * model.n + i], -1, vu);
                        dist = convolve(p, k, dist, d2);
                        volume *= vu;
                    }
                    Rat v1 = handle_fixed(model.n - 1, x.a);
                    Rat v2 = handle_fixed(2 * model.n - 1, x.d);
                    Rat v3 = handle_fixed(3 * model.n - 1, x.b);
                    Rat v4 = handle_fixed(4 * model.n - 1, x.c);
                    if (!feasible) break;
                    volume *= v1 * v2 * v3 * v4;
                    fixed_q = x.a * x.d - x.b * x.c;
                    break;
                }
            }
            if (!feasible) continue;
            Rat resid = qtarget - fixed_q;
            if (resid != 0 && val_p(resid, p) < 0) continue;
            long long want = rat_mod(resid, p, k);
            auto it = dist.find(want);
            if (it == dist.end()) continue;
            val += term.coeff * ExactScalar(volume * Rat(it->second));
        }
        // thickening normalization q^{k (1 + dim_F D)}
        ExactScalar scaled = val * ExactScalar(Rat(mpz_class(ipow(p, k * (1 + dcod)))));
        if (k > 1 && scaled == prev) {
            if (++agree >= 2) return scaled;
        } else {
            agree = 0;
        }
        prev = scaled;
    }
    throw NoStabilization("orbital integral did not stabilize");
}

ExactScalar orbital_mass(const HermitianModel& model, const BallFunction& phi, int k_budget) {
    const int p = phi.p();
    if (k_budget <= 0) k_budget = 12;
    ExactScalar prev = ExactScalar::zero();
    int agree = 0;
    for (int k = 1; k <= k_budget; ++k) {
        long long pk = ipow(p, k);
        ExactScalar val = ExactScalar::zero();
        for (const auto& term : phi.terms()) {
            std::map<long long, mpz_class> dist{{0, mpz_class(1)}};
            Rat volume(1);
            switch (model.tag) {
                case DTag::F: {
                    int np = model.d / 2;
                    for (int i = 0; i < np; ++i) {
                        Rat vu;
                        auto dpair = pair_q_dist(p, k, term.axes[i], term.axes[model.d - 1 - i], 1, vu);
                        dist = convolve(p, k, dist, dpair);
                        volume *= vu;
                    }
                    if (model.d % 2 == 1) {
                        const Ball& cb = term.axes[(model.d - 1) / 2];
                        std::map<long long, mpz_class> dc;
                        long long nz = ipow(p, std::max(0, k - cb.level));
                        long long sz = ipow(p, cb.level);
                        for (long long z = 0; z < nz; ++z) {
                            long long zz = z * sz % pk;
                            dc[static_cast<long long>(static_cast<__int128>(zz) * zz % pk)] += 1;
                        }
                        dist = convolve(p, k, dist, dc);
                        volume *= ball_volume(p, std::max(0, k - cb.level) + cb.level);
                    }
                    break;
                }
                case DTag::FxF:
                    for (int i = 0; i < model.n; ++i) {
                        Rat vu;
                        auto dpair = pair_q_dist(p, k, term.axes[i], term.axes[model.n + i], 1, vu);
                        dist = convolve(p, k, dist, dpair);
                        volume *= vu;
                    }
                    break;
                case DTag::Mat2:
                    for (int i = 0; i < model.n; ++i) {
                        Rat vu;
                        auto d1 = pair_q_dist(p, k, term.axes[i], term.axes[model.n + i], 1, vu);
                        dist = convolve(p, k, dist, d1);
                        volume *= vu;
                        auto d2 = pair_q_dist(p, k, term.axes[2 * model.n + i],
                                              term.axes[3 * model.n + i], -1, vu);
                        dist = convolve(p, k, dist, d2);
                        volume *= vu;
                    }
                    break;
            }
            auto it = dist.find(1 % pk);
            if (it == dist.end()) continue;
            val += term.coeff * ExactScalar(volume * Rat(it->second));
        }
        ExactScalar scaled = val * ExactScalar(Rat(mpz_class(ipow(p, k))));
        if (k > 1 && scaled == prev) {
            if (++agree >= 2) return scaled;
        } else {
            agree = 0;
        }
        prev = scaled;
    }
    throw NoStabilization("orbital mass did not stabilize");
}

// ------------------------------------------------------- center integrals

ExactScalar center_integral_A(int p, const Rat& xi, int n, const WeilOptions& opts, int* k_stab) {
    if (xi == 0) throw ZeroInput("center integral at 0");
    HermitianModel model = HermitianModel::standard(DTag::FxF, n);
    BallFunction phi0 = BallFunction::unit_lattice(p, model.d);
    int c = static_cast<int>(std::llabs(val_p(xi, p))) + 2;
    ExactScalar total = ExactScalar::zero();
    for (int mz = -c - 2; mz <= c + 2; ++mz) {
        ExactScalar shell = ExactScalar::zero();
        bool first = true;
        ExactScalar check = ExactScalar::zero();
        for (int r : {1, 2}) {
            ExactScalar acc = ExactScalar::zero();
            ShellDomain dom{p, mz, r};
            dom.for_each([&](const Rat& z) {
                WhittakerResult w =
                    regularized_whittaker(model, phi0, OrbitalPoint::gl2(xi * z, z), 0, opts);
                if (k_stab) *k_stab = std::max(*k_stab, w.k_stab);
                acc += w.value;
            });
            acc *= ExactScalar(ball_volume(p, r)); // q^{-r} per representative
            if (first) { shell = acc; first = false; }
            else check = acc;
        }
        if (!(shell == check))
            throw NoStabilization("center integrand not constant on z-shells");
        if ((mz == -c - 2 || mz == c + 2) && !shell.is_zero())
            throw NoStabilization("center integration window too small");
        total += shell;
    }
    return total * ExactScalar(opts.iwasawa_scale);
}

ExactScalar center_integral_C(int p, const Rat& xi, int n, const WeilOptions& opts, int* k_stab) {
    if (xi == 0) throw ZeroInput("center integral at 0");
    HermitianModel model = HermitianModel::standard(DTag::Mat2, n);
    BallFunction phi0 = BallFunction::unit_lattice(p, model.d);
    int c = static_cast<int>(std::llabs(val_p(xi, p))) + 4;
    ExactScalar total = ExactScalar::zero();
    for (int mm = -c - 2; mm <= c + 2; ++mm) {
        ExactScalar shell = ExactScalar::zero();
        ExactScalar check = ExactScalar::zero();
        bool first = true;
        for (int r : {1, 2}) {
            ExactScalar acc = ExactScalar::zero();
            ShellDomain dom{p, mm, r};
            dom.for_each([&](const Rat& m) {
                // x-integrated orbital: the w_n-pair integrates to |m| and the
                // remaining integrand is the plain Iwasawa-torus orbital
                WhittakerResult w = regularized_whittaker(
                    model, phi0, OrbitalPoint::sp_iwasawa(xi, Rat(0), m), 0, opts);
                if (k_stab) *k_stab = std::max(*k_stab, w.k_stab);
                ExactScalar u = w.value;
                // |m| * |m|^{-2} = |m|^{-1}
                ExactScalar mfac = ExactScalar::q_pow(p, HalfInt::whole(static_cast<int>(val_p(m, p))));
                acc += u * mfac;
            });
            acc *= ExactScalar(ball_volume(p, r));
            if (first) { shell = acc; first = false; }
            else check = acc;
        }
        if (!(shell == check))
            throw NoStabilization("center integrand not constant on m-shells");
        if ((mm == -c - 2 || mm == c + 2) && !shell.is_zero())
            throw NoStabilization("center integration window too small");
        total += shell;
    }
    // Iwasawa density (1-q^{-2})/(1-q^{-1})
    ExactScalar density = ExactScalar(Rat(1) - Rat(1, p * p)) *
                          ExactScalar(Rat(1) - Rat(1, p)).quad_inverse();
    return total * density * ExactScalar(opts.iwasawa_scale);
}

ExactScalar orbital_closed_b(int p, const Rat& zeta, int n) {
    if (zeta == 0) throw ZeroInput("orbital at 0");
    long long v = val_p(zeta, p);
    if (v <= 0) {
        // |zeta|^{-n-1/2} (1 + q^{-n})
        ExactScalar pw = ExactScalar::q_pow(p, HalfInt(static_cast<int>(v) * (2 * n + 1)));
        return pw * (ExactScalar::one() + ExactScalar(ball_volume(p, n)));
    }
    ExactScalar pw = ExactScalar::q_pow(p, HalfInt(static_cast<int>(v)));
    return pw * (psi_rat(-2 / zeta, p) + psi_rat(2 / zeta, p));
}

// ------------------------------------------------------- point counts

mpz_class count_gl(int n, int q) {
    mpz_class qq(q), out(1), qn;
    mpz_pow_ui(qn.get_mpz_t(), qq.get_mpz_t(), static_cast<unsigned>(n));
    for (int i = 0; i < n; ++i) {
        mpz_class qi;
        mpz_pow_ui(qi.get_mpz_t(), qq.get_mpz_t(), static_cast<unsigned>(i));
        out *= (qn - qi);
    }
    return out;
}

mpz_class count_sp(int n, int q) {
    mpz_class qq(q), out;
    mpz_pow_ui(out.get_mpz_t(), qq.get_mpz_t(), static_cast<unsigned>(n) * static_cast<unsigned>(n));
    for (int i = 1; i <= n; ++i) {
        mpz_class q2i;
        mpz_pow_ui(q2i.get_mpz_t(), qq.get_mpz_t(), 2u * static_cast<unsigned>(i));
        out *= (q2i - 1);
    }
    return out;
}

mpz_class count_so_odd(int n, int q) { return count_sp(n, q); }

mpz_class count_so_even_split(int n, int q) {
    mpz_class qq(q), out, qn;
    mpz_pow_ui(out.get_mpz_t(), qq.get_mpz_t(),
               static_cast<unsigned>(n) * static_cast<unsigned>(n - 1));
    mpz_pow_ui(qn.get_mpz_t(), qq.get_mpz_t(), static_cast<unsigned>(n));
    out *= (qn - 1);
    for (int i = 1; i <= n - 1; ++i) {
        mpz_class q2i;
        mpz_pow_ui(q2i.get_mpz_t(), qq.get_mpz_t(), 2u * static_cast<unsigned>(i));
        out *= (q2i - 1);
    }
    return out;
}

TamagawaData tamagawa_and_counts(SphericalType type, int n, int q) {
    TamagawaData out{};
    mpz_class qq(q);
    auto qpow = [&](int e) {
        mpz_class r;
        mpz_pow_ui(r.get_mpz_t(), qq.get_mpz_t(), static_cast<unsigned>(e));
        return r;
    };
    ExactScalar one = ExactScalar::one();
    switch (type) {
        case SphericalType::A: {
            out.dim_X = 2 * n - 1;
            out.dim_Xbar = 2 * n - 2;
            out.tau_X = one - ExactScalar(Rat(1, qpow(n)));
            out.tau_Xbar = out.tau_X * ExactScalar(Rat(1) - Rat(1, q)).quad_inverse();
            out.points_Xbar = qpow(n - 1) * (qpow(n) - 1) / (qq - 1);
            break;
        }
        case SphericalType::B: {
            out.dim_X = 2 * n;
            out.dim_Xbar = 2 * n;
            out.tau_X = one + ExactScalar(Rat(1, qpow(n)));
            out.tau_Xbar = out.tau_X;
            out.points_Xbar = qpow(2 * n) + qpow(n);
            break;
        }
        case SphericalType::C: {
            out.dim_X = 4 * n - 3;
            out.dim_Xbar = 4 * n - 4;
            out.tau_X = one - ExactScalar(Rat(1, qpow(2 * n)));
            out.tau_Xbar = out.tau_X * ExactScalar(Rat(1) - Rat(1, qpow(2))).quad_inverse();
            out.points_Xbar = qpow(2 * n - 2) * (qpow(2 * n) - 1) / (qpow(2) - 1);
            break;
        }
        case SphericalType::D: {
            out.dim_X = 2 * n - 1;
            out.dim_Xbar = 2 * n - 1;
            out.tau_X = one - ExactScalar(Rat(1, qpow(n)));
            out.tau_Xbar = out.tau_X;
            out.points_Xbar = qpow(2 * n - 1) - qpow(n - 1);
            break;
        }
    }
    return out;
}

} // namespace flcheck
