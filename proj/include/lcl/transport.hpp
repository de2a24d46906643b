#pragma once

#include "lcl/kernels.hpp"

#include <cstddef>
#include <vector>

namespace lcl {

/// N equally weighted atoms.
class EmpiricalMeasure {
public:
    EmpiricalMeasure() = default;
    /// Throws DomainError on an empty or non-finite point set.
    explicit EmpiricalMeasure(std::vector<Velocity> points);

    std::size_t size() const { return points_.size(); }
    const std::vector<Velocity>& points() const { return points_; }
    const Velocity& operator[](std::size_t i) const { return points_[i]; }

    /// (1/N) sum |x_i|^2
    double second_moment() const;
    /// Every point moved by c.
    EmpiricalMeasure translated(const Velocity& c) const;

private:
    std::vector<Velocity> points_;
};

/// x_i is sent to y_{pairing[i]}.
struct TransportPlan {
    std::vector<std::size_t> pairing;
    double cost = 0.0;  ///< (1/N) sum_i |x_i - y_{pairing[i]}|^2, summed in index order
};

/// (1/N) sum_i |x_i - y_{pairing[i]}|^2. Throws DomainError unless pairing is a permutation of matching size.
double plan_cost(const EmpiricalMeasure& x, const EmpiricalMeasure& y, const std::vector<std::size_t>& pairing);

struct W2Result {
    double distance = 0.0;
    TransportPlan plan;
};

/// Exact W2 between equal-size empirical measures by the Hungarian method. Among
/// optimal permutations the lexicographically smallest is returned. Costs within
/// a relative 1e-13 of each other count as ties.
W2Result w2_exact(const EmpiricalMeasure& x, const EmpiricalMeasure& y);

/// The plan of w2_exact.
TransportPlan optimal_pairing(const EmpiricalMeasure& x, const EmpiricalMeasure& y);

struct EntropicResult {
    double distance = 0.0;  ///< sqrt of the transport cost of the entropic plan
    double cost = 0.0;
    bool converged = false;
    int iterations = 0;
    double marginal_error = 0.0;  ///< L1 row-marginal error at exit
};

/// Log-domain Sinkhorn with absolute regularization `reg` on the squared-distance
/// cost, annealed down from the cost scale. Convergence means an L1 row-marginal
/// error below `tolerance`. The returned cost is that of the entropic plan, so once converged it is
/// an upper bound on the exact cost up to marginal_error times the largest pair cost; it approaches
/// the exact cost as reg -> 0.
/// Identical inputs give a strictly positive value of order reg.
EntropicResult w2_entropic(const EmpiricalMeasure& x, const EmpiricalMeasure& y, double reg, int max_iters,
                           double tolerance = 1e-4);

}  // namespace lcl
