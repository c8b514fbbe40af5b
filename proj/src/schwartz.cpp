#include "flcheck/schwartz.hpp"

#include <algorithm>

namespace flcheck {

namespace {
constexpr std::size_t kTermCap = 2'000'000;

int cmp_rat(const Rat& a, const Rat& b) {
    return mpq_cmp(a.get_mpq_t(), b.get_mpq_t());
}

bool term_axes_less(const BallTerm& a, const BallTerm& b) {
    for (std::size_t i = 0; i < a.axes.size(); ++i) {
        if (a.axes[i].level != b.axes[i].level) return a.axes[i].level < b.axes[i].level;
        int c = cmp_rat(a.axes[i].center, b.axes[i].center);
        if (c != 0) return c < 0;
    }
    return false;
}

bool term_axes_equal(const BallTerm& a, const BallTerm& b) {
    for (std::size_t i = 0; i < a.axes.size(); ++i)
        if (!(a.axes[i] == b.axes[i])) return false;
    return true;
}
} // namespace

bool Ball::contains(const Rat& x, int p) const {
    Rat d = x - center;
    if (d == 0) return true;
    return val_p(d, p) >= level;
}

bool Ball::intersects(const Ball& o, int p) const {
    const Ball& coarse = level <= o.level ? *this : o;
    const Ball& fine = level <= o.level ? o : *this;
    return coarse.contains(fine.center, p);
}

BallFunction BallFunction::indicator(int p, const std::vector<Ball>& axes,
                                     const ExactScalar& coeff) {
    BallFunction f(p, static_cast<int>(axes.size()));
    f.add_term(axes, coeff);
    return f;
}

BallFunction BallFunction::unit_lattice(int p, int dim) {
    return indicator(p, std::vector<Ball>(dim, Ball{Rat(0), 0}));
}

BallFunction BallFunction::tensor(const std::vector<BallFunction>& factors) {
    if (factors.empty()) throw Error("tensor of nothing");
    BallFunction out(factors[0].p(), 0);
    out.terms_.push_back(BallTerm{{}, ExactScalar::one()});
    for (const auto& f : factors) {
        if (f.p() != out.p_) throw Error("tensor factors over different primes");
        std::vector<BallTerm> next;
        for (const auto& a : out.terms_)
            for (const auto& b : f.terms_) {
                BallTerm t = a;
                t.axes.insert(t.axes.end(), b.axes.begin(), b.axes.end());
                t.coeff *= b.coeff;
                next.push_back(std::move(t));
            }
        out.terms_ = std::move(next);
        out.dim_ += f.dim();
    }
    out.canonicalize();
    return out;
}

int BallFunction::max_level() const {
    int m = 0;
    for (const auto& t : terms_)
        for (const auto& b : t.axes) m = std::max(m, b.level);
    return m;
}

void BallFunction::add_term(const std::vector<Ball>& axes, const ExactScalar& coeff) {
    if (static_cast<int>(axes.size()) != dim_) throw Error("axis count mismatch");
    terms_.push_back(BallTerm{axes, coeff});
    canonicalize();
}

BallFunction BallFunction::operator+(const BallFunction& o) const {
    if (p_ != o.p_ || dim_ != o.dim_) throw Error("incompatible ball functions");
    BallFunction out = *this;
    out.terms_.insert(out.terms_.end(), o.terms_.begin(), o.terms_.end());
    out.canonicalize();
    return out;
}

BallFunction BallFunction::operator*(const ExactScalar& c) const {
    BallFunction out = *this;
    for (auto& t : out.terms_) t.coeff *= c;
    out.canonicalize();
    return out;
}

ExactScalar BallFunction::eval(const std::vector<Rat>& x) const {
    if (static_cast<int>(x.size()) != dim_) throw Error("point dimension mismatch");
    ExactScalar s = ExactScalar::zero();
    for (const auto& t : terms_) {
        bool in = true;
        for (int i = 0; i < dim_ && in; ++i) in = t.axes[i].contains(x[i], p_);
        if (in) s += t.coeff;
    }
    return s;
}

ExactScalar BallFunction::eval(const Rat& x) const { return eval(std::vector<Rat>{x}); }

ExactScalar BallFunction::eval(const PAdicPoint& x) const {
    if (dim_ != 1) throw Error("padic eval is one-dimensional");
    // membership must be constant on the residue class the point determines
    long long absprec = x.is_zero()
        ? static_cast<long long>(x.prec())
        : x.valuation() + x.prec();
    if (absprec < max_level())
        throw PrecisionLoss("point does not determine membership at level " +
                            std::to_string(max_level()));
    Rat rep = 0;
    if (!x.is_zero()) {
        rep = Rat(static_cast<long>(x.unit()));
        long long v = x.valuation();
        if (v >= 0) rep = rep * Rat(mpz_class(ipow(p_, static_cast<int>(v))));
        else rep = rep / Rat(mpz_class(ipow(p_, static_cast<int>(-v))));
    }
    return eval(rep);
}

void BallFunction::canonicalize() {
    auto reduce_rep = [&](Ball& b) {
        if (b.center == 0) return;
        b.center.canonicalize();
        if (b.center == 0) return;
        long long v = val_p(b.center, p_);
        if (v >= b.level) { b.center = 0; return; }
        int m = static_cast<int>(b.level - v);
        Rat scale = ball_volume(p_, static_cast<int>(-v)); // p^v
        b.center = Rat(static_cast<long>(unit_mod(b.center, p_, m))) * scale;
    };
    for (auto& t : terms_)
        for (auto& b : t.axes) reduce_rep(b);
    // split overlapping supports to a common refinement and merge equal ones
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t i = 0; i < terms_.size() && !changed; ++i)
            for (std::size_t j = i + 1; j < terms_.size() && !changed; ++j) {
                bool overlap = true;
                for (int a = 0; a < dim_ && overlap; ++a)
                    overlap = terms_[i].axes[a].intersects(terms_[j].axes[a], p_);
                if (!overlap) continue;
                if (term_axes_equal(terms_[i], terms_[j])) {
                    terms_[i].coeff += terms_[j].coeff;
                    terms_.erase(terms_.begin() + static_cast<long>(j));
                    changed = true;
                    continue;
                }
                // refine whichever term is coarser on some axis
                for (std::size_t k : {i, j}) {
                    std::size_t other = (k == i) ? j : i;
                    for (int a = 0; a < dim_; ++a) {
                        int la = terms_[k].axes[a].level;
                        int lb = terms_[other].axes[a].level;
                        if (la >= lb) continue;
                        BallTerm base = terms_[k];
                        terms_.erase(terms_.begin() + static_cast<long>(k));
                        long long cnt = ipow(p_, lb - la);
                        if (terms_.size() + cnt > kTermCap)
                            throw Error("ball refinement too large");
                        for (long long t = 0; t < cnt; ++t) {
                            BallTerm piece = base;
                            piece.axes[a].center += Rat(static_cast<long>(t)) *
                                ball_volume(p_, -la); // t * p^{la}
                            piece.axes[a].level = lb;
                            reduce_rep(piece.axes[a]);
                            terms_.push_back(std::move(piece));
                        }
                        changed = true;
                        break;
                    }
                    if (changed) break;
                }
            }
    }
    std::erase_if(terms_, [](const BallTerm& t) { return t.coeff.is_zero(); });
    // coarsen: a complete family of p sibling cosets with equal coefficients
    // collapses to the parent ball, making the canonical form unique
    changed = true;
    while (changed) {
        changed = false;
        for (std::size_t i = 0; i < terms_.size() && !changed; ++i)
            for (int a = 0; a < dim_ && !changed; ++a) {
                int k = terms_[i].axes[a].level;
                Ball parent{terms_[i].axes[a].center, k - 1};
                reduce_rep(parent);
                std::vector<std::size_t> family;
                std::vector<bool> seen(static_cast<std::size_t>(p_), false);
                for (std::size_t j = 0; j < terms_.size(); ++j) {
                    if (terms_[j].axes[a].level != k) continue;
                    bool match = true;
                    for (int b = 0; b < dim_ && match; ++b)
                        if (b != a && !(terms_[i].axes[b] == terms_[j].axes[b])) match = false;
                    if (!match) continue;
                    Rat d = terms_[j].axes[a].center - parent.center;
                    if (d != 0 && val_p(d, p_) < k - 1) continue;
                    if (!(terms_[j].coeff == terms_[i].coeff)) continue;
                    // child index within the parent
                    Rat off = d * ball_volume(p_, -(k - 1)); // d / p^{k-1}
                    long idx = off == 0 ? 0 : static_cast<long>(unit_mod(off, p_, 1) %
                                                                static_cast<long long>(p_));
                    if (off != 0 && val_p(off, p_) > 0) idx = 0;
                    if (!seen[static_cast<std::size_t>(idx)]) {
                        seen[static_cast<std::size_t>(idx)] = true;
                        family.push_back(j);
                    }
                }
                if (family.size() == static_cast<std::size_t>(p_)) {
                    BallTerm merged = terms_[i];
                    merged.axes[a] = parent;
                    std::sort(family.rbegin(), family.rend());
                    for (std::size_t j : family)
                        terms_.erase(terms_.begin() + static_cast<long>(j));
                    terms_.push_back(std::move(merged));
                    changed = true;
                }
            }
    }
    std::sort(terms_.begin(), terms_.end(), term_axes_less);
}

bool BallFunction::operator==(const BallFunction& o) const {
    if (p_ != o.p_ || dim_ != o.dim_) return false;
    if (terms_.size() != o.terms_.size()) return false;
    for (std::size_t i = 0; i < terms_.size(); ++i) {
        if (!term_axes_equal(terms_[i], o.terms_[i])) return false;
        if (terms_[i].coeff != o.terms_[i].coeff) return false;
    }
    return true;
}

BallFunction BallFunction::fourier(int sign) const {
    BallFunction out(p_, dim_);
    for (const auto& term : terms_) {
        // per-axis transforms, then the cartesian product
        std::vector<std::vector<std::pair<Ball, ExactScalar>>> axis_out(dim_);
        for (int a = 0; a < dim_; ++a) {
            const Ball& b = term.axes[a];
            Rat volume = ball_volume(p_, b.level);
            if (b.center == 0) {
                axis_out[a].push_back({Ball{Rat(0), -b.level}, ExactScalar(volume)});
                continue;
            }
            int jc = static_cast<int>(-val_p(b.center, p_));
            int L = std::max(-b.level, jc);
            long long cnt = ipow(p_, L + b.level);
            if (cnt > static_cast<long long>(kTermCap))
                throw Error("fourier materialization too large");
            for (long long t = 0; t < cnt; ++t) {
                // representatives t * p^{-level} of p^{-level} o / p^L o
                Rat y0 = Rat(static_cast<long>(t)) * ball_volume(p_, b.level);
                Rat phase = b.center * y0;
                if (sign > 0) phase = -phase;
                ExactScalar osc = psi_rat(phase, p_);
                axis_out[a].push_back({Ball{y0, L}, ExactScalar(volume) * osc});
            }
        }
        std::vector<BallTerm> partial{BallTerm{{}, term.coeff}};
        for (int a = 0; a < dim_; ++a) {
            std::vector<BallTerm> next;
            if (partial.size() * axis_out[a].size() > kTermCap)
                throw Error("fourier materialization too large");
            for (const auto& t : partial)
                for (const auto& [ball, c] : axis_out[a]) {
                    BallTerm nt = t;
                    nt.axes.push_back(ball);
                    nt.coeff *= c;
                    next.push_back(std::move(nt));
                }
            partial = std::move(next);
        }
        for (auto& t : partial) out.terms_.push_back(std::move(t));
    }
    out.canonicalize();
    return out;
}

} // namespace flcheck
