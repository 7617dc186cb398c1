#pragma once

#include <functional>
#include <string>
#include <vector>

#include "obsdyn/delay_representation.hpp"
#include "obsdyn/history.hpp"
#include "obsdyn/krylov_closure.hpp"
#include "obsdyn/linalg.hpp"

namespace obsdyn {

/// Axis-aligned box standing in for the compact regime of interest K.
struct Box {
    Vector lower;
    Vector upper;

    [[nodiscard]] bool contains(const Vector& u) const;
    [[nodiscard]] Vector width() const { return upper - lower; }
};

/// Uniformly sampled trajectory. `states` is empty for observable-only
/// trajectories (DDE propagation, predictor rollouts).
struct Trajectory {
    double t0 = 0.0;
    double dt = 0.0;
    std::vector<Vector> states;
    std::vector<Vector> observables;
    bool exited_region = false;

    [[nodiscard]] std::size_t size() const noexcept { return observables.size(); }
    [[nodiscard]] double time(std::size_t i) const noexcept { return t0 + static_cast<double>(i) * dt; }
    [[nodiscard]] double t1() const noexcept { return size() == 0 ? t0 : time(size() - 1); }

    /// Samples y on [t(i) - h, t(i)] at the trajectory's own grid.
    [[nodiscard]] HistorySegment history(std::size_t i, double h) const;
};

/// du/dt = field(u), y = observable(u). `jacobian` (Db) is optional; when
/// empty the Lie derivative falls back to finite differences.
struct NonlinearSystem {
    std::string name;
    int n = 0;
    int m = 0;
    std::function<Vector(const Vector&)> field;
    std::function<Vector(const Vector&)> observable;
    std::function<Matrix(const Vector&)> jacobian;
    Box region;
    bool smooth_observable = true;
};

/// Number of uniform steps of size dt covering [t0, t1].
[[nodiscard]] std::size_t step_count(double t0, double t1, double dt);

/// Exact propagation with the one-step map exp(A dt), computed once.
[[nodiscard]] Trajectory simulate_linear(const LinearObservableSystem& sys, const Vector& u0, double t0,
                                         double t1, double dt);

/// y^{(k)}(t_i) = B A^k u(t_i) along a simulated linear trajectory.
[[nodiscard]] std::vector<Vector> observable_derivatives(const LinearObservableSystem& sys,
                                                         const Trajectory& traj, int k);

/// y(t) = B exp(A (t - t0)) u0 evaluated directly (no stepping).
[[nodiscard]] Vector linear_observable_at(const LinearObservableSystem& sys, const Vector& u0, double t);

/// Classical fixed-step RK4. Sets exited_region when any sample leaves the
/// system's box; throws NonFiniteState on overflow.
[[nodiscard]] Trajectory simulate_nonlinear(const NonlinearSystem& sys, const Vector& u0, double t0, double t1,
                                            double dt);

/// Db(u) A(u). Smooth observables without an analytic Jacobian use central
/// differences with step eps^{1/3} max(1, |u|); observables flagged
/// non-smooth use the forward difference (b(u + s A(u)) - b(u)) / s, which is
/// the one-sided rate dy/dt(0+).
[[nodiscard]] Vector lie_derivative(const NonlinearSystem& sys, const Vector& u);

/// Wraps a linear system as a NonlinearSystem with the given box.
[[nodiscard]] NonlinearSystem as_nonlinear(const LinearObservableSystem& sys, Box region,
                                           std::string name = "linear");

/// Right-hand side of a retarded functional equation: receives the stage
/// time and a lookup returning y at any earlier time.
using DelayedLookup = std::function<Vector(double)>;
using FunctionalRhs = std::function<Vector(double t, const DelayedLookup& y)>;

/// Method of steps with RK4 for dy/dt = rhs(t, y(.)), started from a history
/// ending at its anchor. Delayed values come from a cubic Hermite interpolant
/// over the history and the accumulated solution (with stored slopes).
/// Returns y on [anchor, anchor + duration].
[[nodiscard]] Trajectory integrate_functional(const FunctionalRhs& rhs, const HistorySegment& initial,
                                              double duration, double dt);

/// Propagates y'(t) = sum_k W_k y(t - tau_k). Requires the initial history
/// to cover the model horizon with grid spacing no coarser than ~dt.
[[nodiscard]] Trajectory propagate_dde(const DelayModel& dm, const HistorySegment& initial_history,
                                       double duration, double dt);

} // namespace obsdyn
