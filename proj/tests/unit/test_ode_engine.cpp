#include <doctest.h>

#include <cmath>
#include <numbers>

#include <obsdyn/delay_representation.hpp>
#include <obsdyn/errors.hpp>
#include <obsdyn/expm.hpp>
#include <obsdyn/history.hpp>
#include <obsdyn/interpolation.hpp>
#include <obsdyn/ode_engine.hpp>

#include "support.hpp"

using namespace obsdyn;
using std::numbers::pi;

namespace {

Vector scalar(double v) { return Vector::Constant(1, v); }

Box unit_box(int n) { return Box{Vector::Constant(n, -1.0), Vector::Constant(n, 1.0)}; }

NonlinearSystem field_only(int n, std::function<Vector(const Vector&)> f) {
    NonlinearSystem sys;
    sys.name = "test";
    sys.n = n;
    sys.m = n;
    sys.field = std::move(f);
    sys.observable = [](const Vector& u) -> Vector { return u; };
    sys.region = unit_box(n);
    return sys;
}

DelayModel oscillator_model(std::vector<double> delays) {
    const auto comp = companion_system(ClosureModel{1, {Matrix::Constant(1, 1, -1.0), Matrix::Zero(1, 1)}, 0.0});
    return delay_weights(comp, delays);
}

} // namespace

TEST_CASE("cubic Hermite reproduces cubics exactly") {
    const auto p = [](double t) { return 1.0 - 2.0 * t + 0.5 * t * t + 0.25 * t * t * t; };
    const auto dp = [](double t) { return -2.0 + t + 0.75 * t * t; };
    CubicHermite curve;
    for (const double t : {-1.0, -0.4, 0.3, 1.0}) curve.append(t, scalar(p(t)), scalar(dp(t)));
    for (const double t : {-1.0, -0.7, 0.0, 0.31, 0.99, 1.2}) CHECK(curve(t)(0) == doctest::Approx(p(t)).epsilon(1e-13));
    CHECK_THROWS_AS(curve.append(0.5, scalar(0), scalar(0)), Error);
}

TEST_CASE("Fornberg weights") {
    // Central three-point first derivative: (-1/2, 0, 1/2).
    const std::vector<double> nodes{-1.0, 0.0, 1.0};
    const auto w = derivative_weights(0.0, nodes);
    CHECK(w[0] == doctest::Approx(-0.5));
    CHECK(std::abs(w[1]) <= 1e-15);
    CHECK(w[2] == doctest::Approx(0.5));
    // One-sided five-point stencil: (-25, 48, -36, 16, -3) / 12.
    const std::vector<double> five{0, 1, 2, 3, 4};
    const auto v = derivative_weights(0.0, five);
    const double want[] = {-25.0 / 12, 4.0, -3.0, 4.0 / 3, -0.25};
    for (int i = 0; i < 5; ++i) CHECK(v[static_cast<std::size_t>(i)] == doctest::Approx(want[i]).epsilon(1e-13));
}

TEST_CASE("estimated slopes are fourth order") {
    auto max_error = [](double step) {
        std::vector<double> t;
        std::vector<Vector> y;
        for (int i = 0; i <= static_cast<int>(std::lround(1.0 / step)); ++i) {
            t.push_back(i * step);
            y.push_back(scalar(std::sin(3.0 * i * step)));
        }
        const auto d = estimate_slopes(t, y);
        double worst = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) worst = std::max(worst, std::abs(d[i](0) - 3.0 * std::cos(3.0 * t[i])));
        return worst;
    };
    const double coarse = max_error(0.02);
    const double fine = max_error(0.01);
    CHECK(coarse / fine > 12.0);
}

TEST_CASE("history segment contract") {
    SUBCASE("sampling and lookup") {
        const auto h = HistorySegment::sample(2.0, 1.0, 0.01, [](double t) { return scalar(std::exp(t)); });
        CHECK(h.anchor() == 2.0);
        CHECK(h.horizon() == doctest::Approx(1.0));
        CHECK(h.offsets().back() == 0.0);
        CHECK(h.at(0.0)(0) == doctest::Approx(std::exp(2.0)).epsilon(1e-15));
        CHECK(h.at(-0.555)(0) == doctest::Approx(std::exp(1.445)).epsilon(1e-10));
        CHECK(h.covers(1.0));
        CHECK_FALSE(h.covers(1.01));
    }
    SUBCASE("out-of-range queries") {
        const auto h = HistorySegment::sample(0.0, 1.0, 0.1, [](double t) { return scalar(t); });
        try {
            (void)h.at(-1.5);
            FAIL("expected InsufficientHistory");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::InsufficientHistory);
        }
        CHECK_THROWS_AS((void)h.at(0.1), Error);
    }
    SUBCASE("invalid grids and values") {
        CHECK_THROWS_AS(HistorySegment(0.0, {-1.0, -0.5}, {scalar(0), scalar(0)}), Error);
        CHECK_THROWS_AS(HistorySegment(0.0, {-0.5, -1.0, 0.0}, {scalar(0), scalar(0), scalar(0)}), Error);
        CHECK_THROWS_AS(HistorySegment(0.0, {-1.0, 0.0}, {scalar(0), scalar(NAN)}), Error);
    }
}

TEST_CASE("simulate_linear examples") {
    SUBCASE("A = 0 keeps the state") {
        const LinearObservableSystem sys(Matrix::Zero(2, 2), testing::row({1, 2}));
        Vector u0(2);
        u0 << 0.3, -0.1;
        const auto traj = simulate_linear(sys, u0, 0.0, 1.0, 0.1);
        CHECK(traj.size() == 11);
        for (const auto& y : traj.observables) CHECK(y(0) == doctest::Approx(0.1));
    }
    SUBCASE("rotation observed through u1 is cos t") {
        const LinearObservableSystem sys(testing::rotation_generator(), testing::row({1, 0}));
        Vector u0(2);
        u0 << 1.0, 0.0;
        const auto traj = simulate_linear(sys, u0, 0.0, 10.0, 0.01);
        double worst = 0.0;
        for (std::size_t i = 0; i < traj.size(); ++i) worst = std::max(worst, std::abs(traj.observables[i](0) - std::cos(traj.time(i))));
        CHECK(worst <= 1e-12);
    }
    SUBCASE("scalar decay") {
        const LinearObservableSystem sys(Matrix::Constant(1, 1, -1.0), Matrix::Constant(1, 1, 2.0));
        const auto traj = simulate_linear(sys, Vector::Ones(1), 0.0, 3.0, 0.5);
        for (std::size_t i = 0; i < traj.size(); ++i)
            CHECK(traj.observables[i](0) == doctest::Approx(2.0 * std::exp(-traj.time(i))).epsilon(1e-13));
    }
    SUBCASE("states follow the exponential and composition stays exact") {
        std::mt19937_64 rng(1);
        const auto sys = testing::random_system(rng, 4, 2);
        const Vector u0 = testing::normal_vector(rng, 4);
        const double dt = 0.05;
        const auto traj = simulate_linear(sys, u0, 0.0, 2.0, dt);
        const std::size_t k = traj.size() - 1;
        const Vector direct = expm(sys.A() * (dt * static_cast<double>(k))) * u0;
        CHECK((traj.states.back() - direct).norm() <= 1e-12 * static_cast<double>(k) * direct.norm());
        const auto d2 = observable_derivatives(sys, traj, 2);
        CHECK((d2[3] - sys.B() * sys.A() * sys.A() * traj.states[3]).norm() <= 1e-13 * d2[3].norm() + 1e-15);
    }
    SUBCASE("bad step") {
        const LinearObservableSystem sys(Matrix::Zero(1, 1), Matrix::Ones(1, 1));
        CHECK_THROWS_AS((void)simulate_linear(sys, Vector::Ones(1), 0.0, 1.0, 0.0), Error);
    }
}

TEST_CASE("finite-difference derivative of y converges at second order") {
    std::mt19937_64 rng(2);
    const auto sys = testing::random_system(rng, 3, 1);
    const Vector u0 = testing::normal_vector(rng, 3);
    auto error_at = [&](double dt) {
        const auto traj = simulate_linear(sys, u0, 0.0, 1.0, dt);
        const auto dy = observable_derivatives(sys, traj, 1);
        double worst = 0.0;
        for (std::size_t i = 1; i + 1 < traj.size(); ++i) {
            const Vector fd = (traj.observables[i + 1] - traj.observables[i - 1]) / (2 * dt);
            worst = std::max(worst, (fd - dy[i]).norm());
        }
        return worst;
    };
    const double ratio = error_at(0.02) / error_at(0.01);
    CHECK(ratio == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("simulate_nonlinear") {
    SUBCASE("zero field") {
        const auto sys = field_only(2, [](const Vector& u) -> Vector { return Vector::Zero(u.size()); });
        Vector u0(2);
        u0 << 0.2, 0.4;
        const auto traj = simulate_nonlinear(sys, u0, 0.0, 1.0, 0.1);
        CHECK(traj.states.back() == u0);
        CHECK_FALSE(traj.exited_region);
    }
    SUBCASE("linear field agrees with the exponential at O(dt^4)") {
        std::mt19937_64 rng(3);
        const Matrix a = testing::normal_matrix(rng, 3, 3);
        const auto sys = field_only(3, [a](const Vector& u) -> Vector { return a * u; });
        const Vector u0 = testing::normal_vector(rng, 3) * 0.3;
        const double dt = 0.01;
        const auto traj = simulate_nonlinear(sys, u0, 0.0, 1.0, dt);
        const double norm_a = a.norm();
        for (std::size_t i = 0; i < traj.size(); ++i) {
            const double t = traj.time(i);
            const double err = (traj.states[i] - expm(a * t) * u0).norm();
            CHECK(err <= 10 * std::pow(dt, 4) * std::pow(norm_a, 5) * u0.norm() * t + 1e-15);
        }
    }
    SUBCASE("exit flag for an expanding field") {
        const auto sys = field_only(2, [](const Vector& u) -> Vector { return u; });
        Vector u0(2);
        u0 << 1.0, 0.5;
        CHECK(simulate_nonlinear(sys, u0, 0.0, 0.1, 0.01).exited_region);
    }
    SUBCASE("blow-up is reported") {
        const auto sys = field_only(1, [](const Vector& u) -> Vector { return u.array().square() * 1e3; });
        try {
            (void)simulate_nonlinear(sys, Vector::Constant(1, 10.0), 0.0, 10.0, 0.1);
            FAIL("expected NonFiniteState");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::NonFiniteState);
        }
    }
}

TEST_CASE("lie derivative") {
    std::mt19937_64 rng(4);
    const Matrix a = testing::normal_matrix(rng, 3, 3);
    Vector u(3);
    u << 0.4, -0.2, 0.7;
    SUBCASE("identity observable gives the field") {
        const auto sys = field_only(3, [a](const Vector& x) -> Vector { return a * x; });
        CHECK((lie_derivative(sys, u) - a * u).norm() <= 1e-9);
    }
    SUBCASE("squared norm observable: 2 u^T A u") {
        auto sys = field_only(3, [a](const Vector& x) -> Vector { return a * x; });
        sys.m = 1;
        sys.observable = [](const Vector& x) -> Vector { return Vector::Constant(1, x.squaredNorm()); };
        CHECK(lie_derivative(sys, u)(0) == doctest::Approx(2.0 * u.dot(a * u)).epsilon(1e-9));
        sys.jacobian = [](const Vector& x) -> Matrix { return 2.0 * x.transpose(); };
        CHECK(lie_derivative(sys, u)(0) == doctest::Approx(2.0 * u.dot(a * u)).epsilon(1e-14));
    }
    SUBCASE("linear observable gives B A u") {
        const LinearObservableSystem lin(a, testing::normal_matrix(rng, 2, 3));
        const auto sys = as_nonlinear(lin, unit_box(3));
        CHECK((lie_derivative(sys, u) - lin.B() * a * u).norm() <= 1e-13);
    }
    SUBCASE("non-smooth observable uses the one-sided rate") {
        // y = |u1| at u1 = 0 moving with u1' = 1: the right derivative is +1.
        NonlinearSystem sys;
        sys.n = 1;
        sys.m = 1;
        sys.field = [](const Vector&) -> Vector { return Vector::Ones(1); };
        sys.observable = [](const Vector& x) -> Vector { return x.cwiseAbs(); };
        sys.region = unit_box(1);
        sys.smooth_observable = false;
        CHECK(lie_derivative(sys, Vector::Zero(1))(0) == doctest::Approx(1.0).epsilon(1e-7));
    }
}

TEST_CASE("propagate_dde examples") {
    SUBCASE("oscillator DDE y' = -y(t - pi/2) with cosine history") {
        const auto dm = oscillator_model({0.0, pi / 2});
        const double dt = pi / 2 / 200;
        const auto hist = HistorySegment::sample(0.0, pi / 2, dt, [](double t) { return scalar(std::cos(t)); });
        const auto traj = propagate_dde(dm, hist, 20.0, dt);
        CHECK(traj.t1() == doctest::Approx(20.0).epsilon(dt));
        double worst = 0.0;
        for (std::size_t i = 0; i < traj.size(); ++i)
            worst = std::max(worst, std::abs(traj.observables[i](0) - std::cos(traj.time(i))));
        CHECK(worst <= 1e-6);
    }
    SUBCASE("zero history stays zero") {
        const auto dm = oscillator_model({0.3, 1.2});
        const auto hist = HistorySegment::sample(0.0, 1.2, 0.01, [](double) { return scalar(0.0); });
        const auto traj = propagate_dde(dm, hist, 5.0, 0.01);
        for (const auto& y : traj.observables) CHECK(y(0) == 0.0);
    }
    SUBCASE("r = 0 with a zero delay is the plain ODE") {
        const auto comp = companion_system(ClosureModel{0, {Matrix::Constant(1, 1, -0.8)}, 0.0});
        const std::vector<double> delays{0.0};
        const auto dm = delay_weights(comp, delays);
        const HistorySegment hist(0.0, {0.0}, {scalar(1.5)});
        const double dt = 0.01;
        const auto traj = propagate_dde(dm, hist, 2.0, dt);
        CHECK(traj.observables.back()(0) == doctest::Approx(1.5 * std::exp(-1.6)).epsilon(1e-9));
    }
    SUBCASE("short history is rejected") {
        const auto dm = oscillator_model({0.0, pi / 2});
        const auto hist = HistorySegment::sample(0.0, 1.0, 0.01, [](double t) { return scalar(std::cos(t)); });
        try {
            (void)propagate_dde(dm, hist, 1.0, 0.01);
            FAIL("expected InsufficientHistory");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::InsufficientHistory);
        }
    }
}

TEST_CASE("method of steps is fourth order") {
    const auto dm = oscillator_model({0.4, 1.7});
    auto error_at = [&](int steps) {
        const double dt = 1.7 / steps;
        const auto hist = HistorySegment::sample(0.0, 1.7, dt, [](double t) { return scalar(std::sin(t + 0.3)); });
        const auto traj = propagate_dde(dm, hist, 17.0, dt);
        double worst = 0.0;
        for (std::size_t i = 0; i < traj.size(); ++i)
            worst = std::max(worst, std::abs(traj.observables[i](0) - std::sin(traj.time(i) + 0.3)));
        return worst;
    };
    const double ratio = error_at(20) / error_at(40);
    CHECK(ratio > 12.0);
    CHECK(ratio < 20.0);
}

TEST_CASE("trajectory history extraction") {
    const LinearObservableSystem sys(testing::rotation_generator(), testing::row({1, 0}));
    Vector u0(2);
    u0 << 1.0, 0.0;
    const auto traj = simulate_linear(sys, u0, 0.0, 3.0, 0.01);
    const auto hist = traj.history(200, 1.0);
    CHECK(hist.anchor() == doctest::Approx(2.0));
    CHECK(hist.at(-0.5)(0) == doctest::Approx(std::cos(1.5)).epsilon(1e-9));
    CHECK_THROWS_AS((void)traj.history(50, 1.0), Error);
}
