#include "lcl/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace lcl {

EmpiricalMeasure::EmpiricalMeasure(std::vector<Velocity> points) : points_(std::move(points)) {
    if (points_.empty()) throw DomainError("EmpiricalMeasure: need at least one point");
    for (const auto& p : points_) require_finite(p, "EmpiricalMeasure");
}

double EmpiricalMeasure::second_moment() const {
    double s = 0.0;
    for (const auto& p : points_) s += p.squaredNorm();
    return s / static_cast<double>(points_.size());
}

EmpiricalMeasure EmpiricalMeasure::translated(const Velocity& c) const {
    std::vector<Velocity> moved = points_;
    for (auto& p : moved) p += c;
    return EmpiricalMeasure(std::move(moved));
}

namespace {

void require_same_size(const EmpiricalMeasure& x, const EmpiricalMeasure& y, const char* op) {
    if (x.size() != y.size()) {
        throw DomainError(std::string(op) + ": measures have different sizes (" + std::to_string(x.size()) + " vs " +
                          std::to_string(y.size()) + ")");
    }
    if (x.size() == 0) throw DomainError(std::string(op) + ": empty measure");
}

struct Assignment {
    std::vector<std::size_t> row_to_col;
    std::vector<double> u, v;  // dual potentials, c_ij - u_i - v_j >= 0
};

// Shortest augmenting path Hungarian method with potentials, O(N^3).
Assignment hungarian(const std::vector<double>& cost, std::size_t n) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
    // Index 0 is a virtual column/row; real ones are 1..n.
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    std::vector<char> used(n + 1);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            const double* row = &cost[(i0 - 1) * n];
            double delta = inf;
            std::size_t j1 = none;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = row[j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    Assignment a;
    a.row_to_col.assign(n, 0);
    for (std::size_t j = 1; j <= n; ++j) a.row_to_col[p[j] - 1] = j - 1;
    a.u.assign(u.begin() + 1, u.end());
    a.v.assign(v.begin() + 1, v.end());
    return a;
}

// Moves an optimal assignment to the lexicographically smallest optimal one.
// Every optimal assignment uses only tight edges of an optimal dual, and another
// perfect matching of the tight graph differs from the current one by
// alternating cycles, so rows are fixed greedily in index order: row i takes the
// smallest tight column reachable by an alternating cycle through unfixed rows.
void lexicographic_refine(const std::vector<double>& cost, std::size_t n, Assignment& a) {
    double scale = 0.0;
    for (double c : cost) scale = std::max(scale, std::abs(c));
    const double tol = 1e-13 * std::max(scale, 1e-300);
    auto tight = [&](std::size_t i, std::size_t j) { return cost[i * n + j] - a.u[i] - a.v[j] <= tol; };

    std::vector<std::size_t>& row_to_col = a.row_to_col;
    std::vector<std::size_t> col_to_row(n);
    for (std::size_t i = 0; i < n; ++i) col_to_row[row_to_col[i]] = i;

    constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
    // prev_row[r]: the row that takes r's current column if r moves.
    std::vector<std::size_t> prev_row(n, none);
    std::vector<std::size_t> visit_mark(n, none);
    std::vector<std::size_t> queue;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const std::size_t target = row_to_col[i];
        for (std::size_t j = 0; j < target; ++j) {
            if (!tight(i, j) || col_to_row[j] < i) continue;
            // Row i takes j; the displaced rows (all > i) must chain to `target`.
            const std::size_t key = i * n + j;
            const std::size_t start = col_to_row[j];
            queue.assign(1, start);
            visit_mark[start] = key;
            prev_row[start] = i;
            std::size_t last = none;
            for (std::size_t q = 0; q < queue.size() && last == none; ++q) {
                const std::size_t r = queue[q];
                for (std::size_t c = 0; c < n; ++c) {
                    if (c == row_to_col[r] || !tight(r, c)) continue;
                    if (c == target) {
                        last = r;
                        break;
                    }
                    const std::size_t owner = col_to_row[c];
                    if (owner <= i || visit_mark[owner] == key) continue;
                    visit_mark[owner] = key;
                    prev_row[owner] = r;
                    queue.push_back(owner);
                }
            }
            if (last == none) continue;
            std::size_t col = target;
            for (std::size_t r = last; r != i; r = prev_row[r]) {
                const std::size_t freed = row_to_col[r];
                row_to_col[r] = col;
                col_to_row[col] = r;
                col = freed;
            }
            row_to_col[i] = col;
            col_to_row[col] = i;
            break;
        }
    }
}

}  // namespace

double plan_cost(const EmpiricalMeasure& x, const EmpiricalMeasure& y, const std::vector<std::size_t>& pairing) {
    require_same_size(x, y, "plan_cost");
    if (pairing.size() != x.size()) throw DomainError("plan_cost: pairing has the wrong length");
    std::vector<char> seen(x.size(), 0);
    double total = 0.0;
    for (std::size_t i = 0; i < pairing.size(); ++i) {
        const std::size_t j = pairing[i];
        if (j >= x.size() || seen[j]) throw DomainError("plan_cost: pairing is not a permutation");
        seen[j] = 1;
        total += (x[i] - y[j]).squaredNorm();
    }
    return total / static_cast<double>(x.size());
}

W2Result w2_exact(const EmpiricalMeasure& x, const EmpiricalMeasure& y) {
    require_same_size(x, y, "w2_exact");
    const std::size_t n = x.size();
    std::vector<double> cost(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) cost[i * n + j] = (x[i] - y[j]).squaredNorm();
    }
    Assignment a = hungarian(cost, n);
    lexicographic_refine(cost, n, a);
    W2Result out;
    out.plan.pairing = std::move(a.row_to_col);
    out.plan.cost = plan_cost(x, y, out.plan.pairing);
    out.distance = std::sqrt(out.plan.cost);
    return out;
}

TransportPlan optimal_pairing(const EmpiricalMeasure& x, const EmpiricalMeasure& y) { return w2_exact(x, y).plan; }

EntropicResult w2_entropic(const EmpiricalMeasure& x, const EmpiricalMeasure& y, double reg, int max_iters,
                           double tolerance) {
    require_same_size(x, y, "w2_entropic");
    if (!(reg > 0.0) || !std::isfinite(reg)) throw DomainError("w2_entropic: reg must be positive");
    if (max_iters < 1) throw DomainError("w2_entropic: max_iters must be positive");
    const std::size_t n = x.size();
    const double log_w = -std::log(static_cast<double>(n));
    std::vector<double> cost(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) cost[i * n + j] = (x[i] - y[j]).squaredNorm();
    }
    std::vector<double> f(n, 0.0), g(n, 0.0), scratch(n);
    // Regularization is annealed geometrically from the cost scale down to reg;
    // the potentials of one level warm-start the next.
    double current = std::max(reg, *std::max_element(cost.begin(), cost.end()));

    // -reg * log sum_k w exp((h_k - c_k) / reg), stabilized by the max.
    auto soft_min = [&](double eps, auto&& entry) {
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < n; ++k) {
            scratch[k] = entry(k) / eps;
            m = std::max(m, scratch[k]);
        }
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k) s += std::exp(scratch[k] - m);
        return -eps * (m + std::log(s) + log_w);
    };

    EntropicResult out;
    for (int it = 1; it <= max_iters; ++it) {
        const double eps = current;
        for (std::size_t i = 0; i < n; ++i) f[i] = soft_min(eps, [&](std::size_t j) { return g[j] - cost[i * n + j]; });
        for (std::size_t j = 0; j < n; ++j) g[j] = soft_min(eps, [&](std::size_t i) { return f[i] - cost[i * n + j]; });
        out.iterations = it;
        if (current > reg) {
            current = std::max(reg, 0.5 * current);
            continue;
        }
        // Columns are exact after the g update; measure the row marginals.
        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < n; ++j) row += std::exp((f[i] + g[j] - cost[i * n + j]) / reg + 2.0 * log_w);
            err += std::abs(row - std::exp(log_w));
        }
        out.marginal_error = err;
        if (err < tolerance) {
            out.converged = true;
            break;
        }
    }
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            total += std::exp((f[i] + g[j] - cost[i * n + j]) / reg + 2.0 * log_w) * cost[i * n + j];
        }
    }
    out.cost = total;
    out.distance = std::sqrt(total);
    return out;
}

}  // namespace lcl
