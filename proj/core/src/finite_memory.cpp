#include "obsdyn/finite_memory.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "obsdyn/errors.hpp"

namespace obsdyn {

Vector FiniteMemoryPredictor::predict(double t, const DelayedLookup& y) const {
    Vector out = Vector::Zero(m);
    for (std::size_t j = 0; j < grid.size(); ++j)
        out += coefficients.middleCols(static_cast<Eigen::Index>(j) * m, m) * y(t + grid[j]);
    return out;
}

Vector FiniteMemoryPredictor::predict(const HistorySegment& history) const {
    if (history.dim() != m) throw Error(ErrorCode::InvalidArgument, "history dimension mismatch");
    if (!history.covers(h)) throw Error(ErrorCode::InsufficientHistory, "history shorter than predictor horizon");
    const double anchor = history.anchor();
    return predict(anchor, [&](double s) { return history.at(s - anchor); });
}

FiniteMemoryPredictor fit_finite_memory(const NonlinearSystem& sys, double h, std::uint64_t seed,
                                        const FiniteMemoryOptions& options) {
    if (!(h > 0.0)) throw Error(ErrorCode::InvalidArgument, "memory length h must be positive");
    if (options.n_traj <= 0 || options.stride <= 0 || !(options.span > 0.0) || !(options.ridge >= 0.0))
        throw Error(ErrorCode::InvalidArgument, "invalid finite-memory fit options");
    const double ratio = options.history_dt / options.dt;
    const auto spacing = static_cast<long>(std::llround(ratio));
    if (spacing < 1 || std::abs(ratio - static_cast<double>(spacing)) > 1e-9 * ratio)
        throw Error(ErrorCode::InvalidArgument, "history_dt must be a positive multiple of dt");
    const auto lags = static_cast<long>(std::llround(h / options.history_dt));
    if (lags < 1) throw Error(ErrorCode::InvalidArgument, "h must span at least one history step");

    FiniteMemoryPredictor pred;
    pred.h = static_cast<double>(lags) * options.history_dt;
    pred.m = sys.m;
    for (long j = -lags; j <= 0; ++j) pred.grid.push_back(static_cast<double>(j) * options.history_dt);

    const long warmup = lags * spacing;
    const int m = sys.m;
    const auto width = static_cast<Eigen::Index>(pred.grid.size()) * m;

    std::vector<Vector> rows;
    std::vector<Vector> targets;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < options.n_traj; ++i) {
        Vector u0(sys.n);
        for (int k = 0; k < sys.n; ++k)
            u0(k) = sys.region.lower(k) + unit(rng) * (sys.region.upper(k) - sys.region.lower(k));
        const Trajectory traj = simulate_nonlinear(sys, u0, 0.0, pred.h + options.span, options.dt);
        for (auto a = static_cast<std::size_t>(warmup); a < traj.size(); a += static_cast<std::size_t>(options.stride)) {
            Vector row(width);
            for (long j = 0; j <= lags; ++j) {
                const auto idx = a - static_cast<std::size_t>((lags - j) * spacing);
                row.segment(j * m, m) = traj.observables[idx];
            }
            rows.push_back(std::move(row));
            targets.push_back(lie_derivative(sys, traj.states[a]));
        }
    }

    const auto count = static_cast<Eigen::Index>(rows.size());
    Matrix x(count, width);
    Matrix y(count, m);
    for (Eigen::Index r = 0; r < count; ++r) {
        x.row(r) = rows[static_cast<std::size_t>(r)].transpose();
        y.row(r) = targets[static_cast<std::size_t>(r)].transpose();
    }

    // Ridge solution through the SVD: c = V diag(s / (s^2 + lambda)) U^T y.
    Eigen::BDCSVD<Matrix> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sv = svd.singularValues();
    const double top = sv.size() > 0 ? sv(0) : 0.0;
    const double lambda = options.ridge * top * top;
    Vector filter(sv.size());
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        const double denom = sv(i) * sv(i) + lambda;
        filter(i) = denom > 0.0 ? sv(i) / denom : 0.0;
    }
    const Matrix c = svd.matrixV() * filter.asDiagonal() * (svd.matrixU().transpose() * y);
    pred.coefficients = c.transpose();

    if (sv.size() > 0 && top > 0.0 && sv(sv.size() - 1) <= std::sqrt(options.ridge) * top) {
        std::ostringstream msg;
        msg << "RankDeficientRegression: sigma_min / sigma_max = " << sv(sv.size() - 1) / top
            << "; ridge " << options.ridge << " regularises the solve";
        pred.warnings.push_back(msg.str());
    }

    const Matrix residual = y - x * c;
    const double denom = static_cast<double>(count) * m;
    pred.samples = static_cast<std::size_t>(count);
    pred.training_residual = std::sqrt(residual.squaredNorm() / denom);
    pred.target_rms = std::sqrt(y.squaredNorm() / denom);
    return pred;
}

Trajectory predictor_rollout(const FiniteMemoryPredictor& pred, const HistorySegment& initial_history,
                             double duration, double dt) {
    if (initial_history.dim() != pred.m) throw Error(ErrorCode::InvalidArgument, "history dimension mismatch");
    if (!initial_history.covers(pred.h))
        throw Error(ErrorCode::InsufficientHistory, "initial history does not cover the predictor horizon");
    const FunctionalRhs rhs = [&pred](double t, const DelayedLookup& y) { return pred.predict(t, y); };
    return integrate_functional(rhs, initial_history, duration, dt);
}

} // namespace obsdyn
