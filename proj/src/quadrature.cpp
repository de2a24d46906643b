#include "lcl/quadrature.hpp"

#include "lcl/kernels.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/legendre.hpp>

#include <algorithm>
#include <cmath>

namespace lcl {

namespace {

double gk(const std::function<double(double)>& f, double a, double b, double rel_tol) {
    using boost::math::quadrature::gauss_kronrod;
    if (!(b > a)) return 0.0;
    return gauss_kronrod<double, 31>::integrate(f, a, b, 20, rel_tol);
}

}  // namespace

double radial_integral(const std::function<double(double)>& shell, double alpha, double r_lo, double r_hi,
                       std::span<const double> breakpoints, double rel_tol) {
    if (r_lo <= 0.0 && !(alpha > -3.0)) {
        throw DomainError("radial_integral: r^alpha r^2 is not integrable at 0 for alpha <= -3");
    }
    if (!(r_hi > r_lo)) return 0.0;
    std::vector<double> cuts{r_lo};
    for (double b : breakpoints) {
        if (b > r_lo && b < r_hi) cuts.push_back(b);
    }
    cuts.push_back(r_hi);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    auto integrand = [&](double r) { return r > 0.0 ? std::pow(r, alpha) * shell(r) : 0.0; };

    double total = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const double a = cuts[k];
        const double b = cuts[k + 1];
        if (a == 0.0) {
            const double m = std::max(1.0, std::ceil(2.0 / (alpha + 3.0)));
            auto sub = [&](double u) {
                if (u <= 0.0) return 0.0;
                const double r = b * std::pow(u, m);
                return integrand(r) * m * b * std::pow(u, m - 1.0);
            };
            total += gk(sub, 0.0, 1.0, rel_tol);
        } else {
            total += gk(integrand, a, b, rel_tol);
        }
    }
    return total;
}

GaussRule gauss_legendre(int n) {
    if (n < 1) throw DomainError("gauss_legendre: need at least one node");
    GaussRule rule;
    const auto positive = boost::math::legendre_p_zeros<double>(n);  // nonnegative zeros, ascending
    std::vector<double> nodes;
    for (double z : positive) {
        nodes.push_back(z);
        if (z != 0.0) nodes.push_back(-z);
    }
    std::sort(nodes.begin(), nodes.end());
    for (double x : nodes) {
        const double dp = boost::math::legendre_p_prime(n, x);
        rule.nodes.push_back(x);
        rule.weights.push_back(2.0 / ((1.0 - x * x) * dp * dp));
    }
    return rule;
}

LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw DomainError("least_squares: need two or more matched points");
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return fit;
}

}  // namespace lcl
