#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "obsdyn/interpolation.hpp"
#include "obsdyn/linalg.hpp"

namespace obsdyn {

/// Sampled observable history theta -> y(t + theta) on [-h, 0].
///
/// Offsets must be strictly increasing and end at 0. Values between samples
/// come from a cubic Hermite interpolant; slopes are taken from the caller
/// when known and otherwise estimated with a five-point stencil.
class HistorySegment {
public:
    HistorySegment(double anchor, std::vector<double> offsets, std::vector<Vector> values,
                   std::optional<std::vector<Vector>> slopes = std::nullopt);

    /// Uniform samples of f(anchor + theta) for theta = -h, -h + step, ..., 0.
    template <typename F>
    static HistorySegment sample(double anchor, double h, double step, F&& f);

    [[nodiscard]] double anchor() const noexcept { return anchor_; }
    [[nodiscard]] double horizon() const noexcept { return -offsets_.front(); }
    [[nodiscard]] int dim() const noexcept { return static_cast<int>(values_.front().size()); }
    [[nodiscard]] const std::vector<double>& offsets() const noexcept { return offsets_; }
    [[nodiscard]] const std::vector<Vector>& values() const noexcept { return values_; }
    [[nodiscard]] const std::vector<Vector>& slopes() const noexcept { return curve_.slopes(); }

    /// y(anchor + theta); theta must lie in [-horizon(), 0].
    [[nodiscard]] Vector at(double theta) const;

    /// True when the segment reaches back at least h (up to rounding).
    [[nodiscard]] bool covers(double h) const noexcept;

private:
    double anchor_;
    std::vector<double> offsets_;
    std::vector<Vector> values_;
    CubicHermite curve_;
};

template <typename F>
HistorySegment HistorySegment::sample(double anchor, double h, double step, F&& f) {
    const auto count = static_cast<long>(std::llround(h / step));
    std::vector<double> offsets;
    std::vector<Vector> values;
    for (long j = -count; j <= 0; ++j) {
        const double theta = static_cast<double>(j) * step;
        offsets.push_back(theta);
        values.push_back(f(anchor + theta));
    }
    return HistorySegment(anchor, std::move(offsets), std::move(values));
}

} // namespace obsdyn
