#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "obsdyn/history.hpp"
#include "obsdyn/linalg.hpp"
#include "obsdyn/ode_engine.hpp"

namespace obsdyn {

/// Linear map from history samples y(t + theta_j), theta_j in [-h, 0], to y'(t).
struct FiniteMemoryPredictor {
    double h = 0.0;
    int m = 0;
    std::vector<double> grid;  // ascending, grid.back() == 0
    Matrix coefficients;       // m x m * grid.size(), block j multiplies y(t + grid[j])
    double training_residual = 0.0;  // RMS of y' - prediction over the training set
    double target_rms = 0.0;         // RMS of y' over the training set
    std::size_t samples = 0;
    std::vector<std::string> warnings;

    [[nodiscard]] double relative_residual() const {
        return target_rms > 0.0 ? training_residual / target_rms : training_residual;
    }
    [[nodiscard]] Vector predict(const HistorySegment& history) const;
    [[nodiscard]] Vector predict(double t, const DelayedLookup& y) const;
};

struct FiniteMemoryOptions {
    int n_traj = 20;
    double dt = 0.01;
    double history_dt = 0.05;  // grid spacing, a multiple of dt
    double span = 5.0;         // harvesting window after the warm-up of length h
    int stride = 5;            // steps between harvested anchors
    double ridge = 1e-8;       // relative to the largest squared singular value
};

/// Fits a ridge-regularised linear surrogate of the finite-memory closure
/// L_h from trajectories started uniformly in the system box. Targets are the
/// exact Lie derivatives at each harvested anchor.
[[nodiscard]] FiniteMemoryPredictor fit_finite_memory(const NonlinearSystem& sys, double h, std::uint64_t seed,
                                                      const FiniteMemoryOptions& options = {});

/// Method-of-steps rollout of y' = L_h(y_{t,h}).
[[nodiscard]] Trajectory predictor_rollout(const FiniteMemoryPredictor& pred, const HistorySegment& initial_history,
                                           double duration, double dt);

} // namespace obsdyn
