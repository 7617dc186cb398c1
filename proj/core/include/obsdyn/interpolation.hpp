#pragma once

#include <span>
#include <vector>

#include "obsdyn/linalg.hpp"

namespace obsdyn {

/// Piecewise cubic Hermite curve through (t_i, y_i) with slopes dy_i.
/// Knots must be appended in strictly increasing order. Queries outside the
/// knot range extend the first or last cubic piece.
class CubicHermite {
public:
    CubicHermite() = default;

    void append(double t, Vector value, Vector slope);

    [[nodiscard]] Vector operator()(double t) const;
    [[nodiscard]] std::size_t size() const noexcept { return times_.size(); }
    [[nodiscard]] bool empty() const noexcept { return times_.empty(); }
    [[nodiscard]] double front_time() const { return times_.front(); }
    [[nodiscard]] double back_time() const { return times_.back(); }
    [[nodiscard]] const std::vector<double>& times() const noexcept { return times_; }
    [[nodiscard]] const std::vector<Vector>& values() const noexcept { return values_; }
    [[nodiscard]] const std::vector<Vector>& slopes() const noexcept { return slopes_; }

private:
    std::vector<double> times_;
    std::vector<Vector> values_;
    std::vector<Vector> slopes_;
};

/// First-derivative weights at x0 for the given nodes (Fornberg's recursion).
[[nodiscard]] std::vector<double> derivative_weights(double x0, std::span<const double> nodes);

/// Slope estimates at every node from a five-point stencil (fewer points when
/// the grid is short). Fourth order on smooth data.
[[nodiscard]] std::vector<Vector> estimate_slopes(std::span<const double> times,
                                                  std::span<const Vector> values);

} // namespace obsdyn
