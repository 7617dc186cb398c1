#include <doctest.h>

#include <cmath>

#include <obsdyn/errors.hpp>
#include <obsdyn/expm.hpp>
#include <obsdyn/krylov_closure.hpp>

#include "support.hpp"

using namespace obsdyn;

namespace {

LinearObservableSystem oscillator() { return LinearObservableSystem(testing::rotation_generator(), testing::row({1, 0})); }

ClosureModel minimal_closure(const LinearObservableSystem& sys) { return closure_matrices(sys, krylov_ladder(sys)); }

Matrix power_block(const LinearObservableSystem& sys, int k) {
    Matrix g = sys.B();
    for (int j = 0; j < k; ++j) g = g * sys.A();
    return g;
}

// Least-squares residual of B A^{k+1} against {B A^0 .. B A^k}, by QR.
double qr_fit_residual(const LinearObservableSystem& sys, int k) {
    const auto m = sys.m();
    Matrix s(m * (k + 1), sys.n());
    for (int j = 0; j <= k; ++j) s.middleRows(j * m, m) = power_block(sys, j);
    const Matrix target = power_block(sys, k + 1);
    const Matrix coeffs = s.transpose().colPivHouseholderQr().solve(target.transpose());
    return (s.transpose() * coeffs - target.transpose()).norm() / target.norm();
}

} // namespace

TEST_CASE("system validation") {
    SUBCASE("non-square A") {
        CHECK_THROWS_AS(LinearObservableSystem(Matrix::Zero(2, 3), Matrix::Ones(1, 3)), Error);
    }
    SUBCASE("B column mismatch") {
        CHECK_THROWS_AS(LinearObservableSystem(Matrix::Identity(2, 2), Matrix::Ones(1, 3)), Error);
    }
    SUBCASE("m > n is degenerate") {
        try {
            LinearObservableSystem(Matrix::Identity(2, 2), Matrix::Identity(3, 2).eval());
            FAIL("expected DegenerateSystem");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::DegenerateSystem);
        }
    }
    SUBCASE("rank-deficient B is degenerate") {
        Matrix b(2, 2);
        b << 1, 0, 1, 0;
        try {
            LinearObservableSystem(testing::rotation_generator(), b);
            FAIL("expected DegenerateSystem");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::DegenerateSystem);
        }
    }
    SUBCASE("non-finite entries") {
        Matrix a = Matrix::Identity(2, 2);
        a(0, 1) = std::nan("");
        CHECK_THROWS_AS(LinearObservableSystem(a, testing::row({1, 0})), Error);
    }
    SUBCASE("singular A is accepted with a warning") {
        const LinearObservableSystem sys(Matrix::Zero(2, 2), testing::row({1, 0}));
        CHECK(sys.warnings().size() == 1);
        const auto model = minimal_closure(sys);
        CHECK(model.r == 0);
        CHECK(model.C[0](0, 0) == 0.0);
    }
}

TEST_CASE("ladder for B = I stabilises immediately") {
    std::mt19937_64 rng(1);
    for (const int n : {1, 3, 6}) {
        const LinearObservableSystem sys(testing::normal_matrix(rng, n, n), Matrix::Identity(n, n));
        const auto ladder = krylov_ladder(sys);
        CHECK(ladder.r == 0);
        CHECK(ladder.dims == std::vector<int>{n, n});
    }
}

TEST_CASE("ladder for the oscillator") {
    const auto ladder = krylov_ladder(oscillator());
    CHECK(ladder.dims == std::vector<int>{1, 2, 2});
    CHECK(ladder.r == 1);
    CHECK(testing::max_abs(ladder.basis.transpose() * ladder.basis - Matrix::Identity(2, 2)) <= 1e-14);
}

TEST_CASE("ladder for a diagonal A observed through a coordinate") {
    Matrix a = Matrix::Zero(4, 4);
    a.diagonal() << 1.0, -2.0, 3.0, 0.5;
    const LinearObservableSystem sys(a, testing::row({0, 0, 1, 0}));
    const auto ladder = krylov_ladder(sys);
    CHECK(ladder.dims == std::vector<int>{1, 1});
    CHECK(ladder.r == 0);
    const auto model = closure_matrices(sys, ladder);
    CHECK(model.C[0](0, 0) == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("closure for B = I is A itself") {
    std::mt19937_64 rng(2);
    const Matrix a = testing::normal_matrix(rng, 4, 4);
    const auto model = minimal_closure(LinearObservableSystem(a, Matrix::Identity(4, 4)));
    REQUIRE(model.C.size() == 1);
    CHECK(testing::max_abs(model.C[0] - a) <= 1e-13);
}

TEST_CASE("closure for the oscillator: B A^2 = -B") {
    const auto model = minimal_closure(oscillator());
    REQUIRE(model.r == 1);
    CHECK(model.C[0](0, 0) == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(std::abs(model.C[1](0, 0)) <= 1e-14);
    CHECK(model.residual <= 1e-14);
}

TEST_CASE("scalar closure ignores the scaling of B") {
    const LinearObservableSystem sys(Matrix::Constant(1, 1, 2.0), Matrix::Constant(1, 1, 3.0));
    const auto model = minimal_closure(sys);
    CHECK(model.r == 0);
    CHECK(model.C[0](0, 0) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("misestimated order raises ClosureResidualExceeded") {
    const auto sys = oscillator();
    KrylovLadder wrong;
    wrong.dims = {1, 1};
    wrong.r = 0;
    wrong.basis = Matrix::Identity(2, 1);
    try {
        (void)closure_matrices(sys, wrong);
        FAIL("expected ClosureResidualExceeded");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ClosureResidualExceeded);
    }
}

TEST_CASE("verify_annihilation") {
    SUBCASE("oscillator model is annihilated") { CHECK(verify_annihilation(oscillator(), minimal_closure(oscillator())) == 0.0); }
    SUBCASE("B = I with C0 = A") {
        std::mt19937_64 rng(3);
        const Matrix a = testing::normal_matrix(rng, 3, 3);
        ClosureModel model{0, {a}, 0.0};
        CHECK(verify_annihilation(LinearObservableSystem(a, Matrix::Identity(3, 3)), model) <= 1e-15);
    }
    SUBCASE("perturbing C0 grows the residual with slope |B|_F") {
        std::mt19937_64 rng(4);
        const Matrix a = testing::normal_matrix(rng, 3, 3);
        const Matrix b = testing::normal_matrix(rng, 3, 3);
        const LinearObservableSystem sys(a, b);
        const auto model = minimal_closure(sys);
        REQUIRE(model.r == 0);
        for (const double eps : {1e-6, 1e-3, 0.1}) {
            ClosureModel bumped = model;
            bumped.C[0] += eps * Matrix::Identity(3, 3);
            CHECK(verify_annihilation(sys, bumped) == doctest::Approx(eps * b.norm()).epsilon(1e-6));
        }
    }
    SUBCASE("agrees with the stored residual") {
        std::mt19937_64 rng(5);
        const auto sys = testing::random_system(rng, 6, 2);
        const auto model = minimal_closure(sys);
        const double scale = power_block(sys, model.r + 1).norm();
        CHECK(std::abs(verify_annihilation(sys, model) - model.residual) <= 1e-12 * scale);
    }
}

TEST_CASE("Cayley-Hamilton fallback") {
    SUBCASE("rotation: lambda^2 + 1") {
        const auto model = cayley_hamilton_fallback(LinearObservableSystem(testing::rotation_generator(), Matrix::Identity(2, 2)));
        REQUIRE(model.r == 1);
        CHECK(testing::max_abs(model.C[0] + Matrix::Identity(2, 2)) <= 1e-15);
        CHECK(testing::max_abs(model.C[1]) <= 1e-15);
    }
    SUBCASE("n = 1") {
        const auto model = cayley_hamilton_fallback(LinearObservableSystem(Matrix::Constant(1, 1, -0.7), Matrix::Ones(1, 1)));
        REQUIRE(model.r == 0);
        CHECK(model.C[0](0, 0) == doctest::Approx(-0.7).epsilon(1e-15));
    }
    SUBCASE("random 4x4 systems are annihilated") {
        std::mt19937_64 rng(6);
        for (int trial = 0; trial < 20; ++trial) {
            const Matrix a = testing::normal_matrix(rng, 4, 4);
            const Matrix b = testing::normal_matrix(rng, 2, 4);
            const LinearObservableSystem sys(a, b);
            const auto model = cayley_hamilton_fallback(sys);
            CHECK(verify_annihilation(sys, model) <= 1e-10 * (a * a * a * a).norm() * b.norm());
        }
    }
    SUBCASE("coefficients match the characteristic polynomial from eigenvalues") {
        Matrix a = Matrix::Zero(3, 3);
        a.diagonal() << 1.0, 2.0, 3.0;
        a(0, 2) = 5.0;  // triangular: eigenvalues stay on the diagonal
        // (l-1)(l-2)(l-3) = l^3 - 6 l^2 + 11 l - 6
        const auto model = cayley_hamilton_fallback(LinearObservableSystem(a, testing::row({1, 1, 1})));
        CHECK(model.C[0](0, 0) == doctest::Approx(6.0).epsilon(1e-13));
        CHECK(model.C[1](0, 0) == doctest::Approx(-11.0).epsilon(1e-13));
        CHECK(model.C[2](0, 0) == doctest::Approx(6.0).epsilon(1e-13));
    }
}

TEST_CASE("ladder invariants on random systems") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 60; ++trial) {
        const int n = 2 + trial % 9;
        const int m = 1 + (trial / 9) % std::min(3, n);
        const auto sys = testing::random_system(rng, n, m);
        const auto ladder = krylov_ladder(sys);
        const auto& d = ladder.dims;
        REQUIRE(d.size() >= 2);
        CHECK(d[d.size() - 1] == d[d.size() - 2]);
        CHECK(ladder.r == static_cast<int>(d.size()) - 2);
        CHECK(ladder.r <= n - 1);
        CHECK(d.front() == m);
        for (std::size_t k = 0; k < d.size(); ++k) {
            CHECK(d[k] <= n);
            CHECK(d[k] <= m * static_cast<int>(k + 1));
            if (k > 0 && k + 1 < d.size()) CHECK(d[k] > d[k - 1]);
        }
        // Generic systems are observable: V_r is all of R^n.
        CHECK(d.back() == n);
    }
}

TEST_CASE("minimality residuals match an independent QR fit") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 3 + trial % 6;
        const int m = 1 + trial % 2;
        const auto sys = testing::random_system(rng, n, m);
        const auto ladder = krylov_ladder(sys);
        const auto res = minimality_residuals(sys, ladder);
        REQUIRE(static_cast<int>(res.size()) == ladder.r);
        for (int k = 0; k < ladder.r; ++k) {
            const double oracle = qr_fit_residual(sys, k);
            CHECK(res[static_cast<std::size_t>(k)] == doctest::Approx(oracle).epsilon(1e-6));
            CHECK(res[static_cast<std::size_t>(k)] > 10 * kDefaultClosureTol);
        }
    }
}

TEST_CASE("closure identity holds along exact trajectories") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 10; ++trial) {
        const auto sys = testing::random_system(rng, 5, 1 + trial % 3);
        const auto model = minimal_closure(sys);
        const Vector u0 = testing::normal_vector(rng, 5);
        for (const double t : {0.0, 0.3, 1.1}) {
            const Vector u = expm(sys.A() * t) * u0;
            Vector lhs = power_block(sys, model.r + 1) * u;
            Vector rhs = Vector::Zero(sys.m());
            for (int k = 0; k <= model.r; ++k) rhs += model.C[static_cast<std::size_t>(k)] * (power_block(sys, k) * u);
            CHECK((lhs - rhs).norm() <= 1e-10 * std::max(1.0, lhs.norm()));
        }
    }
}

TEST_CASE("fallback and minimal closure both annihilate") {
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 10; ++trial) {
        const auto sys = testing::random_system(rng, 5, 2);
        const double scale = power_block(sys, 5).norm();
        CHECK(verify_annihilation(sys, cayley_hamilton_fallback(sys)) <= 1e-9 * scale);
        const auto model = minimal_closure(sys);
        CHECK(verify_annihilation(sys, model) <= 1e-10 * power_block(sys, model.r + 1).norm());
    }
}

TEST_CASE("scale equivariance under B -> G B") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 4 + trial % 4;
        const auto sys = testing::random_system(rng, n, 2);
        const Matrix g = testing::normal_matrix(rng, 2, 2) + 3.0 * Matrix::Identity(2, 2);
        const LinearObservableSystem scaled(sys.A(), g * sys.B());
        const auto base = minimal_closure(sys);
        const auto model = minimal_closure(scaled);
        CHECK(model.r == base.r);
        ClosureModel mapped = base;
        for (auto& c : mapped.C) c = g * c * g.inverse();
        CHECK(verify_annihilation(scaled, mapped) <= 1e-9 * power_block(scaled, base.r + 1).norm());
    }
}

TEST_CASE("observation powers use right multiplication") {
    const auto sys = oscillator();
    const auto g = observation_powers(sys, 4);
    REQUIRE(g.size() == 4);
    CHECK(g[0] == testing::row({1, 0}));
    CHECK(g[1] == testing::row({0, 1}));
    CHECK(g[2] == testing::row({-1, 0}));
    CHECK(g[3] == testing::row({0, -1}));
}
