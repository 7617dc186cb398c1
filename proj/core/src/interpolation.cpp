#include "obsdyn/interpolation.hpp"

#include <algorithm>
#include <cstddef>

#include "obsdyn/errors.hpp"

namespace obsdyn {

void CubicHermite::append(double t, Vector value, Vector slope) {
    if (!times_.empty() && !(t > times_.back()))
        throw Error(ErrorCode::InvalidArgument, "Hermite knots must be strictly increasing");
    if (!values_.empty() && value.size() != values_.front().size())
        throw Error(ErrorCode::InvalidArgument, "Hermite knot dimension mismatch");
    times_.push_back(t);
    values_.push_back(std::move(value));
    slopes_.push_back(std::move(slope));
}

Vector CubicHermite::operator()(double t) const {
    if (times_.empty()) throw Error(ErrorCode::InvalidArgument, "empty Hermite curve");
    if (times_.size() == 1) return values_.front() + (t - times_.front()) * slopes_.front();

    // Piece index i such that t lies in [t_i, t_{i+1}], clamped to the ends.
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    std::size_t i = it == times_.begin() ? 0 : static_cast<std::size_t>(it - times_.begin()) - 1;
    i = std::min(i, times_.size() - 2);

    const double t0 = times_[i];
    const double step = times_[i + 1] - t0;
    const double s = (t - t0) / step;
    if (s == 0.0) return values_[i];
    if (s == 1.0) return values_[i + 1];
    const double s2 = s * s;
    const double s3 = s2 * s;
    const double h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    const double h10 = s3 - 2.0 * s2 + s;
    const double h01 = -2.0 * s3 + 3.0 * s2;
    const double h11 = s3 - s2;
    return h00 * values_[i] + (h10 * step) * slopes_[i] + h01 * values_[i + 1] + (h11 * step) * slopes_[i + 1];
}

std::vector<double> derivative_weights(double x0, std::span<const double> nodes) {
    const std::size_t count = nodes.size();
    std::vector<double> w0(count, 0.0);
    std::vector<double> w1(count, 0.0);
    if (count == 0) return w1;
    w0[0] = 1.0;
    double c1 = 1.0;
    double c4 = nodes[0] - x0;
    for (std::size_t i = 1; i < count; ++i) {
        double c2 = 1.0;
        const double c5 = c4;
        c4 = nodes[i] - x0;
        for (std::size_t j = 0; j < i; ++j) {
            const double c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if (j == i - 1) {
                w1[i] = c1 * (w0[i - 1] - c5 * w1[i - 1]) / c2;
                w0[i] = -c1 * c5 * w0[i - 1] / c2;
            }
            w1[j] = (c4 * w1[j] - w0[j]) / c3;
            w0[j] = c4 * w0[j] / c3;
        }
        c1 = c2;
    }
    return w1;
}

std::vector<Vector> estimate_slopes(std::span<const double> times, std::span<const Vector> values) {
    const std::size_t count = times.size();
    std::vector<Vector> slopes;
    slopes.reserve(count);
    if (count == 0) return slopes;
    if (count == 1) {
        slopes.push_back(Vector::Zero(values[0].size()));
        return slopes;
    }
    const std::size_t width = std::min<std::size_t>(5, count);
    for (std::size_t i = 0; i < count; ++i) {
        std::size_t lo = i >= width / 2 ? i - width / 2 : 0;
        lo = std::min(lo, count - width);
        const auto w = derivative_weights(times[i], times.subspan(lo, width));
        Vector d = Vector::Zero(values[i].size());
        for (std::size_t j = 0; j < width; ++j) d += w[j] * values[lo + j];
        slopes.push_back(std::move(d));
    }
    return slopes;
}

} // namespace obsdyn
