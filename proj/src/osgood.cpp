#include "lcl/osgood.hpp"

#include "lcl/kernels.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace lcl::osgood {

namespace {

void require_nonnegative(double x, const char* op) {
    if (!(x >= 0.0)) {
        throw DomainError(std::string(op) + ": argument must be nonnegative");
    }
}

double quadrature_m(double x) {
    using boost::math::quadrature::gauss_kronrod;
    auto inv_psi = [](double y) { return 1.0 / psi(y); };
    // 1/psi has a log-type kink at y = 1 and a 1/(y log y) spike near 0.
    // Integrate in log y, where both become smooth.
    auto in_log = [&](double s) {
        const double y = std::exp(s);
        return y * inv_psi(y);
    };
    const double lo = std::log(std::min(x, 1.0));
    const double hi = std::log(std::max(x, 1.0));
    const double sign = x <= 1.0 ? 1.0 : -1.0;
    if (lo == hi) return 0.0;
    double total = 0.0;
    // Split into unit panels in log y so the adaptive rule never sees the whole range.
    const int panels = std::max(1, static_cast<int>(std::ceil(hi - lo)));
    const double w = (hi - lo) / panels;
    for (int k = 0; k < panels; ++k) {
        total += gauss_kronrod<double, 31>::integrate(in_log, lo + k * w, lo + (k + 1) * w, 15, 1e-14);
    }
    return sign * total;
}

}  // namespace

double psi(double x) {
    require_nonnegative(x, "psi");
    if (x == 0.0) return 0.0;
    return x <= 1.0 ? x * (1.0 - std::log(x)) : x;
}

double gamma_majorant(double x) {
    require_nonnegative(x, "gamma_majorant");
    if (x == 0.0) return 0.0;
    return x <= 0.5 ? x * (1.0 - std::log(x)) : x * std::numbers::ln2 + 0.5;
}

double m_transform(double x) {
    if (!(x > 0.0)) {
        throw DomainError("m_transform: M diverges at 0, argument must be positive");
    }
    return x <= 1.0 ? std::log1p(-std::log(x)) : -std::log(x);
}

double m_inverse(double y) {
    if (std::isnan(y)) throw DomainError("m_inverse: NaN argument");
    return y >= 0.0 ? std::exp(-std::expm1(y)) : std::exp(-y);
}

double m_quadrature_discrepancy(std::span<const double> points) {
    double worst = 0.0;
    for (double x : points) {
        const double closed = m_transform(x);
        const double quad = quadrature_m(x);
        worst = std::max(worst, std::abs(closed - quad) / std::max(1.0, std::abs(closed)));
    }
    return worst;
}

void validate_closed_forms() {
    static std::once_flag once;
    std::call_once(once, [] {
        std::vector<double> grid;
        for (int k = 0; k <= 180; ++k) grid.push_back(std::pow(10.0, -12.0 + k * 0.1));
        const double err = m_quadrature_discrepancy(grid);
        if (!(err <= 1e-8)) {
            std::ostringstream os;
            os << "osgood: closed form of M disagrees with quadrature (" << err << ")";
            throw std::logic_error(os.str());
        }
    });
}

StepFunction::StepFunction(std::vector<double> times, std::vector<double> values, double horizon)
    : times_(std::move(times)), values_(std::move(values)), horizon_(horizon) {
    if (times_.size() != values_.size() || times_.empty()) {
        throw DomainError("StepFunction: need matching, nonempty time and value samples");
    }
    if (times_.front() != 0.0) throw DomainError("StepFunction: first sample must be at t = 0");
    if (!(horizon_ > 0.0) || !std::isfinite(horizon_)) {
        throw DomainError("StepFunction: horizon must be positive and finite");
    }
    for (std::size_t k = 0; k < times_.size(); ++k) {
        if (!(values_[k] >= 0.0) || !std::isfinite(values_[k])) {
            throw DomainError("StepFunction: gamma samples must be finite and nonnegative");
        }
        if (k > 0 && !(times_[k] > times_[k - 1])) {
            throw DomainError("StepFunction: sample times must be strictly increasing");
        }
    }
    if (times_.back() > horizon_) throw DomainError("StepFunction: sample beyond horizon");
}

StepFunction StepFunction::constant(double value, double horizon) {
    return StepFunction({0.0}, {value}, horizon);
}

double StepFunction::integral(double t) const {
    t = std::clamp(t, 0.0, horizon_);
    double sum = 0.0;
    for (std::size_t k = 0; k < times_.size() && times_[k] < t; ++k) {
        const double end = k + 1 < times_.size() ? std::min(times_[k + 1], t) : t;
        sum += values_[k] * (end - times_[k]);
    }
    return sum;
}

double StepFunction::operator()(double t) const {
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    if (it == times_.begin()) return values_.front();
    return values_[static_cast<std::size_t>(it - times_.begin()) - 1];
}

double envelope(const Problem& problem, double t) {
    if (!(problem.a >= 0.0)) throw DomainError("envelope: initial gap must be nonnegative");
    if (t < 0.0 || t > problem.gamma.horizon()) throw DomainError("envelope: t outside [0, T]");
    if (problem.a == 0.0) return 0.0;
    return m_inverse(m_transform(problem.a) - problem.gamma.integral(t));
}

std::vector<double> stability_certificate(std::span<const double> initial_gaps, double gamma_total) {
    if (!(gamma_total >= 0.0)) throw DomainError("stability_certificate: gamma_total must be nonnegative");
    std::vector<double> out;
    out.reserve(initial_gaps.size());
    for (double a : initial_gaps) {
        if (!(a >= 0.0)) throw DomainError("stability_certificate: gaps must be nonnegative");
        out.push_back(a == 0.0 ? 0.0 : m_inverse(m_transform(a) - gamma_total));
    }
    return out;
}

}  // namespace lcl::osgood
