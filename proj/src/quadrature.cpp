#include "quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pfl::detail {

namespace {

GaussLegendreRule build_rule(std::size_t n) {
    GaussLegendreRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const std::size_t half = (n + 1) / 2;
    for (std::size_t i = 0; i < half; ++i) {
        double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                            (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (std::size_t k = 2; k <= n; ++k) {
                const double kd = static_cast<double>(k);
                const double p2 = ((2.0 * kd - 1.0) * x * p1 - (kd - 1.0) * p0) / kd;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) {
                p1 = x;
                p0 = 1.0;
            }
            dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    if (n == 1) {
        rule.nodes[0] = 0.0;
        rule.weights[0] = 2.0;
    }
    return rule;
}

}  // namespace

const GaussLegendreRule& gauss_legendre(std::size_t points) {
    static const std::array<GaussLegendreRule, 33> rules = [] {
        std::array<GaussLegendreRule, 33> r;
        for (std::size_t n = 1; n < r.size(); ++n) r[n] = build_rule(n);
        return r;
    }();
    if (points < 1 || points >= rules.size()) {
        throw std::out_of_range("Gauss-Legendre rule order out of range");
    }
    return rules[points];
}

BesselJ0Table::BesselJ0Table(double x_max, double spacing)
    : spacing_(spacing), inv_spacing_(1.0 / spacing) {
    const auto count = static_cast<std::size_t>(std::ceil(std::max(x_max, 1.0) / spacing)) + 3;
    value_.resize(count);
    slope_.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double x = static_cast<double>(i) * spacing;
        value_[i] = std::cyl_bessel_j(0.0, x);
        slope_[i] = -std::cyl_bessel_j(1.0, x) * spacing;
    }
}

double BesselJ0Table::operator()(double x) const noexcept {
    x = std::abs(x);
    const double u = x * inv_spacing_;
    auto i = static_cast<std::size_t>(u);
    if (i + 1 >= value_.size()) return std::cyl_bessel_j(0.0, x);
    const double t = u - static_cast<double>(i);
    const double t2 = t * t;
    const double t3 = t2 * t;
    const double h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    const double h10 = t3 - 2.0 * t2 + t;
    const double h01 = -2.0 * t3 + 3.0 * t2;
    const double h11 = t3 - t2;
    return h00 * value_[i] + h10 * slope_[i] + h01 * value_[i + 1] + h11 * slope_[i + 1];
}

double median(std::span<const double> values) {
    if (values.empty()) return 0.0;
    std::vector<double> copy(values.begin(), values.end());
    const std::size_t mid = copy.size() / 2;
    std::nth_element(copy.begin(), copy.begin() + static_cast<std::ptrdiff_t>(mid), copy.end());
    double m = copy[mid];
    if (copy.size() % 2 == 0) {
        const double lower =
            *std::max_element(copy.begin(), copy.begin() + static_cast<std::ptrdiff_t>(mid));
        m = 0.5 * (m + lower);
    }
    return m;
}

}  // namespace pfl::detail
