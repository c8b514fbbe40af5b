#pragma once

#include <vector>

#include "flcheck/exactnum.hpp"

namespace flcheck {

// the ball center + p^level * o inside F
struct Ball {
    Rat center = 0;
    int level = 0;

    bool contains(const Rat& x, int p) const;
    // nonempty intersection is always one of the two balls
    bool intersects(const Ball& o, int p) const;
    bool operator==(const Ball& o) const { return level == o.level && center == o.center; }
};

struct BallTerm {
    std::vector<Ball> axes;
    ExactScalar coeff;
};

// Finite linear combination of product-ball indicators on F^dim with
// ExactScalar coefficients.  Canonical form keeps supports pairwise
// disjoint, so equality is decidable term-by-term.
class BallFunction {
public:
    BallFunction() = default;
    BallFunction(int p, int dim) : p_(p), dim_(dim) {}

    static BallFunction indicator(int p, const std::vector<Ball>& axes,
                                  const ExactScalar& coeff = ExactScalar::one());
    // 1_{o^dim}
    static BallFunction unit_lattice(int p, int dim);
    static BallFunction tensor(const std::vector<BallFunction>& factors);

    int p() const { return p_; }
    int dim() const { return dim_; }
    bool empty() const { return terms_.empty(); }
    const std::vector<BallTerm>& terms() const { return terms_; }
    int max_level() const;

    void add_term(const std::vector<Ball>& axes, const ExactScalar& coeff);
    BallFunction operator+(const BallFunction& o) const;
    BallFunction operator*(const ExactScalar& c) const;

    ExactScalar eval(const std::vector<Rat>& x) const;
    ExactScalar eval(const Rat& x) const;            // dim 1
    ExactScalar eval(const PAdicPoint& x) const;     // dim 1, checks precision

    // F_psi with sign +1 (integrand psi^{-1}(xy)) or F_{psi^{-1}} with -1;
    // axis-wise on product balls, oscillatory factors materialized by ball
    // refinement
    BallFunction fourier(int sign) const;

    void canonicalize();
    bool operator==(const BallFunction& o) const;

private:
    int p_ = 0;
    int dim_ = 0;
    std::vector<BallTerm> terms_;
};

} // namespace flcheck
