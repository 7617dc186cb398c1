#include "obsdyn/ode_engine.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "obsdyn/errors.hpp"
#include "obsdyn/expm.hpp"

namespace obsdyn {

bool Box::contains(const Vector& u) const {
    if (u.size() != lower.size()) return false;
    return (u.array() >= lower.array()).all() && (u.array() <= upper.array()).all();
}

HistorySegment Trajectory::history(std::size_t i, double h) const {
    if (i >= size()) throw Error(ErrorCode::InvalidArgument, "history anchor outside trajectory");
    const auto count = static_cast<std::size_t>(std::llround(h / dt));
    if (count > i) throw Error(ErrorCode::InsufficientHistory, "trajectory does not reach back far enough");
    std::vector<double> offsets;
    std::vector<Vector> values;
    for (std::size_t j = i - count; j <= i; ++j) {
        offsets.push_back(-static_cast<double>(i - j) * dt);
        values.push_back(observables[j]);
    }
    return HistorySegment(time(i), std::move(offsets), std::move(values));
}

std::size_t step_count(double t0, double t1, double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorCode::InvalidArgument, "dt must be positive");
    if (!(t1 >= t0)) throw Error(ErrorCode::InvalidArgument, "time span must satisfy t1 >= t0");
    return static_cast<std::size_t>(std::llround((t1 - t0) / dt));
}

Trajectory simulate_linear(const LinearObservableSystem& sys, const Vector& u0, double t0, double t1, double dt) {
    if (u0.size() != sys.n()) throw Error(ErrorCode::InvalidArgument, "initial state has wrong dimension");
    const std::size_t steps = step_count(t0, t1, dt);
    const Matrix step = expm(sys.A() * dt);

    Trajectory traj;
    traj.t0 = t0;
    traj.dt = dt;
    traj.states.reserve(steps + 1);
    traj.observables.reserve(steps + 1);
    Vector u = u0;
    for (std::size_t i = 0; i <= steps; ++i) {
        if (i > 0) u = step * u;
        traj.observables.push_back(sys.B() * u);
        traj.states.push_back(u);
    }
    return traj;
}

std::vector<Vector> observable_derivatives(const LinearObservableSystem& sys, const Trajectory& traj, int k) {
    if (k < 0) throw Error(ErrorCode::InvalidArgument, "derivative order must be nonnegative");
    Matrix g = sys.B();
    for (int j = 0; j < k; ++j) g = g * sys.A();
    std::vector<Vector> out;
    out.reserve(traj.states.size());
    for (const auto& u : traj.states) out.push_back(g * u);
    return out;
}

Vector linear_observable_at(const LinearObservableSystem& sys, const Vector& u0, double t) {
    return sys.B() * (expm(sys.A() * t) * u0);
}

Trajectory simulate_nonlinear(const NonlinearSystem& sys, const Vector& u0, double t0, double t1, double dt) {
    if (u0.size() != sys.n) throw Error(ErrorCode::InvalidArgument, "initial state has wrong dimension");
    const std::size_t steps = step_count(t0, t1, dt);

    Trajectory traj;
    traj.t0 = t0;
    traj.dt = dt;
    traj.states.reserve(steps + 1);
    traj.observables.reserve(steps + 1);
    Vector u = u0;
    for (std::size_t i = 0; i <= steps; ++i) {
        if (i > 0) {
            const Vector k1 = sys.field(u);
            const Vector k2 = sys.field(u + 0.5 * dt * k1);
            const Vector k3 = sys.field(u + 0.5 * dt * k2);
            const Vector k4 = sys.field(u + dt * k3);
            u += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        if (!u.allFinite()) {
            std::ostringstream msg;
            msg << sys.name << ": state became non-finite at t = " << traj.t0 + static_cast<double>(i) * dt;
            throw Error(ErrorCode::NonFiniteState, msg.str());
        }
        if (!sys.region.contains(u)) traj.exited_region = true;
        traj.observables.push_back(sys.observable(u));
        traj.states.push_back(u);
    }
    return traj;
}

Vector lie_derivative(const NonlinearSystem& sys, const Vector& u) {
    const Vector v = sys.field(u);
    if (sys.jacobian) return sys.jacobian(u) * v;

    const double eps = std::numeric_limits<double>::epsilon();
    const double scale = std::max(1.0, u.norm());
    if (!sys.smooth_observable) {
        const double s = std::sqrt(eps) * scale / std::max(1.0, v.norm());
        return (sys.observable(u + s * v) - sys.observable(u)) / s;
    }
    const double step = std::cbrt(eps) * scale;
    Matrix jac(sys.m, sys.n);
    Vector probe = u;
    for (int j = 0; j < sys.n; ++j) {
        probe(j) = u(j) + step;
        const Vector plus = sys.observable(probe);
        probe(j) = u(j) - step;
        const Vector minus = sys.observable(probe);
        probe(j) = u(j);
        jac.col(j) = (plus - minus) / (2.0 * step);
    }
    return jac * v;
}

NonlinearSystem as_nonlinear(const LinearObservableSystem& sys, Box region, std::string name) {
    NonlinearSystem out;
    out.name = std::move(name);
    out.n = sys.n();
    out.m = sys.m();
    const Matrix a = sys.A();
    const Matrix b = sys.B();
    out.field = [a](const Vector& u) -> Vector { return a * u; };
    out.observable = [b](const Vector& u) -> Vector { return b * u; };
    out.jacobian = [b](const Vector&) -> Matrix { return b; };
    out.region = std::move(region);
    return out;
}

Trajectory integrate_functional(const FunctionalRhs& rhs, const HistorySegment& initial, double duration,
                                double dt) {
    const std::size_t steps = step_count(0.0, duration, dt);
    const double anchor = initial.anchor();

    CubicHermite curve;
    for (std::size_t j = 0; j < initial.offsets().size(); ++j)
        curve.append(anchor + initial.offsets()[j], initial.values()[j], initial.slopes()[j]);
    const double start = curve.front_time();
    const double slack = 1e-9 * dt;

    // Evaluates rhs at stage time ts with stage value ys. Lookups at ts return
    // ys; lookups inside the current step extend the last accepted cubic.
    auto evaluate = [&](double ts, const Vector& ys) -> Vector {
        const DelayedLookup lookup = [&](double s) -> Vector {
            if (std::abs(s - ts) <= slack) return ys;
            if (s < start - slack) {
                std::ostringstream msg;
                msg << "delayed time " << s << " precedes the available history start " << start;
                throw Error(ErrorCode::InsufficientHistory, msg.str());
            }
            return curve(s);
        };
        return rhs(ts, lookup);
    };

    Trajectory traj;
    traj.t0 = anchor;
    traj.dt = dt;
    traj.observables.reserve(steps + 1);
    Vector y = initial.values().back();
    traj.observables.push_back(y);
    Vector f = evaluate(anchor, y);
    for (std::size_t i = 0; i < steps; ++i) {
        const double t = anchor + static_cast<double>(i) * dt;
        const Vector k1 = f;
        const Vector k2 = evaluate(t + 0.5 * dt, y + 0.5 * dt * k1);
        const Vector k3 = evaluate(t + 0.5 * dt, y + 0.5 * dt * k2);
        const Vector k4 = evaluate(t + dt, y + dt * k3);
        y += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!y.allFinite()) throw Error(ErrorCode::NonFiniteState, "functional integration diverged");
        const double t_next = anchor + static_cast<double>(i + 1) * dt;
        f = evaluate(t_next, y);
        curve.append(t_next, y, f);
        traj.observables.push_back(y);
    }
    return traj;
}

Trajectory propagate_dde(const DelayModel& dm, const HistorySegment& initial_history, double duration, double dt) {
    if (initial_history.dim() != dm.m) throw Error(ErrorCode::InvalidArgument, "history dimension mismatch");
    if (!initial_history.covers(dm.horizon()))
        throw Error(ErrorCode::InsufficientHistory, "initial history does not cover the delay horizon");
    const FunctionalRhs rhs = [&dm](double t, const DelayedLookup& y) -> Vector {
        Vector sum = Vector::Zero(dm.m);
        for (std::size_t k = 0; k < dm.delays.size(); ++k) sum += dm.weights[k] * y(t - dm.delays[k]);
        return sum;
    };
    return integrate_functional(rhs, initial_history, duration, dt);
}

} // namespace obsdyn
