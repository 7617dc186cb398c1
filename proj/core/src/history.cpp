#include "obsdyn/history.hpp"

#include <cmath>

#include "obsdyn/errors.hpp"

namespace obsdyn {

HistorySegment::HistorySegment(double anchor, std::vector<double> offsets, std::vector<Vector> values,
                               std::optional<std::vector<Vector>> slopes)
    : anchor_(anchor), offsets_(std::move(offsets)), values_(std::move(values)) {
    if (offsets_.empty() || offsets_.size() != values_.size())
        throw Error(ErrorCode::InvalidArgument, "history needs matching, non-empty offsets and values");
    if (offsets_.back() != 0.0) throw Error(ErrorCode::InvalidArgument, "history grid must end at offset 0");
    for (std::size_t j = 1; j < offsets_.size(); ++j)
        if (!(offsets_[j] > offsets_[j - 1]))
            throw Error(ErrorCode::InvalidArgument, "history offsets must be strictly increasing");
    for (const auto& v : values_) {
        if (v.size() != values_.front().size() || v.size() == 0)
            throw Error(ErrorCode::InvalidArgument, "history values must share a non-zero dimension");
        if (!v.allFinite()) throw Error(ErrorCode::InvalidArgument, "history values must be finite");
    }
    std::vector<Vector> d = slopes ? std::move(*slopes) : estimate_slopes(offsets_, values_);
    if (d.size() != values_.size()) throw Error(ErrorCode::InvalidArgument, "history slope count mismatch");
    for (std::size_t j = 0; j < offsets_.size(); ++j) curve_.append(offsets_[j], values_[j], std::move(d[j]));
}

bool HistorySegment::covers(double h) const noexcept {
    return horizon() >= h - 1e-12 * std::max(1.0, h);
}

Vector HistorySegment::at(double theta) const {
    const double slack = 1e-12 * std::max(1.0, horizon());
    if (theta > slack || theta < offsets_.front() - slack) {
        throw Error(ErrorCode::InsufficientHistory,
                    "offset " + std::to_string(theta) + " outside history of length " + std::to_string(horizon()));
    }
    return curve_(theta);
}

} // namespace obsdyn
