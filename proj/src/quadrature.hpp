#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pfl::detail {

struct GaussLegendreRule {
    std::vector<double> nodes;    // on [-1, 1]
    std::vector<double> weights;
};

/// Cached Gauss-Legendre rule with `points` nodes, 1 <= points <= 32.
const GaussLegendreRule& gauss_legendre(std::size_t points);

/// J0 on [0, x_max] by cubic Hermite interpolation of tabulated J0 and J0' = -J1.
/// Interpolation error is below 1e-11 with the default spacing.
class BesselJ0Table {
public:
    explicit BesselJ0Table(double x_max, double spacing = 1.0 / 128.0);

    double operator()(double x) const noexcept;

private:
    double spacing_;
    double inv_spacing_;
    std::vector<double> value_;
    std::vector<double> slope_;
};

/// Median of a copy of `values` (empty input returns 0).
double median(std::span<const double> values);

}  // namespace pfl::detail
