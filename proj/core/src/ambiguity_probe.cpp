#include "obsdyn/ambiguity_probe.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <random>
#include <sstream>

#include "obsdyn/errors.hpp"

namespace obsdyn {
namespace {

constexpr double kRejected = -std::numeric_limits<double>::infinity();

std::mt19937_64 task_rng(std::uint64_t seed, std::uint64_t task) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(task), static_cast<std::uint32_t>(task >> 32)};
    return std::mt19937_64(seq);
}

Vector uniform_in(const Box& box, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Vector u(box.lower.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = box.lower(i) + unit(rng) * (box.upper(i) - box.lower(i));
    return u;
}

struct Objective {
    const NonlinearSystem& sys;
    double T;
    double dt;
    double penalty;

    double operator()(const Vector& x) const {
        try {
            const auto e = evaluate_pair(sys, T, x.head(sys.n), x.tail(sys.n), dt);
            return e.gap * e.gap - penalty * e.match_residual;
        } catch (const Error& err) {
            if (err.code() == ErrorCode::NonFiniteState) return kRejected;
            throw;
        }
    }
};

struct StartResult {
    Vector x;
    double objective = kRejected;
};

// Compass search with opportunistic polling; the step halves after a sweep
// without improvement. Coordinates are clamped to the box.
StartResult pattern_search(const NonlinearSystem& sys, double T, Vector x, const PairSearchOptions& opt) {
    const Eigen::Index dim = x.size();
    Vector lower(dim), upper(dim);
    lower << sys.region.lower, sys.region.lower;
    upper << sys.region.upper, sys.region.upper;
    const Vector width = upper - lower;

    double value = kRejected;
    for (int round = 0; round < opt.rounds; ++round) {
        const double penalty = opt.penalty * std::pow(opt.penalty_factor, round);
        const Objective objective{sys, T, opt.dt, penalty};
        value = objective(x);
        double scale = opt.initial_step;
        int polls = 0;
        while (scale >= opt.min_step && polls < opt.iters) {
            bool improved = false;
            for (Eigen::Index i = 0; i < dim && polls < opt.iters; ++i) {
                for (const double sign : {1.0, -1.0}) {
                    Vector trial = x;
                    trial(i) = std::clamp(x(i) + sign * scale * width(i), lower(i), upper(i));
                    if (trial(i) == x(i)) continue;
                    ++polls;
                    const double v = objective(trial);
                    if (v > value) {
                        x = std::move(trial);
                        value = v;
                        improved = true;
                        break;
                    }
                }
            }
            if (!improved) scale *= 0.5;
        }
    }
    return {std::move(x), value};
}

} // namespace

PairEvaluation evaluate_pair(const NonlinearSystem& sys, double T, const Vector& u1, const Vector& u2, double dt) {
    if (!(T > 0.0)) throw Error(ErrorCode::InvalidArgument, "history length T must be positive");
    const Trajectory a = simulate_nonlinear(sys, u1, -T, 0.0, dt);
    const Trajectory b = simulate_nonlinear(sys, u2, -T, 0.0, dt);

    PairEvaluation out;
    const std::size_t count = a.size();
    double integral = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        const double w = (i == 0 || i + 1 == count) ? 0.5 : 1.0;
        integral += w * (a.observables[i] - b.observables[i]).squaredNorm();
    }
    out.match_residual = integral * a.dt;
    out.gap = (lie_derivative(sys, a.states.back()) - lie_derivative(sys, b.states.back())).norm();
    out.left_region = a.exited_region || b.exited_region;
    return out;
}

PairSearchResult matched_pair_search(const NonlinearSystem& sys, double T, std::uint64_t seed,
                                     const PairSearchOptions& options) {
    if (!(T > 0.0)) throw Error(ErrorCode::InvalidArgument, "history length T must be positive");
    if (options.starts <= 0 || options.rounds <= 0 || options.iters <= 0)
        throw Error(ErrorCode::InvalidArgument, "search needs positive starts, rounds and iters");
    if (!(options.penalty > 0.0) || !(options.penalty_factor >= 1.0))
        throw Error(ErrorCode::InvalidArgument, "penalty must be positive and non-decreasing");

    const int n = sys.n;
    std::vector<Vector> starting_points;
    for (int s = 0; s < options.starts; ++s) {
        auto rng = task_rng(seed, static_cast<std::uint64_t>(s));
        Vector x(2 * n);
        x.head(n) = uniform_in(sys.region, rng);
        if (s % 2 == 0) {
            x.tail(n) = uniform_in(sys.region, rng);
        } else {
            // Near-diagonal start: a small perturbation of the first state.
            std::normal_distribution<double> normal(0.0, 0.05);
            Vector u2 = x.head(n);
            for (int i = 0; i < n; ++i) u2(i) += normal(rng) * sys.region.width()(i);
            x.tail(n) = u2.cwiseMax(sys.region.lower).cwiseMin(sys.region.upper);
        }
        starting_points.push_back(std::move(x));
    }

    std::vector<StartResult> results(starting_points.size());
    const int threads = std::max(1, options.threads);
    if (threads == 1) {
        for (std::size_t s = 0; s < starting_points.size(); ++s)
            results[s] = pattern_search(sys, T, starting_points[s], options);
    } else {
        std::vector<std::future<StartResult>> pending;
        for (std::size_t s = 0; s < starting_points.size(); ++s)
            pending.push_back(std::async(std::launch::async, pattern_search, std::cref(sys), T,
                                         starting_points[s], std::cref(options)));
        for (std::size_t s = 0; s < pending.size(); ++s) results[s] = pending[s].get();
    }

    // Best objective wins; ties go to the lowest start index.
    std::size_t best = 0;
    for (std::size_t s = 1; s < results.size(); ++s)
        if (results[s].objective > results[best].objective) best = s;

    PairSearchResult out;
    out.u1_init = results[best].x.head(n);
    out.u2_init = results[best].x.tail(n);
    out.objective = results[best].objective;
    out.match_tol = options.match_tol > 0.0 ? options.match_tol : kDefaultMatchTolPerT * T;
    const auto eval = evaluate_pair(sys, T, out.u1_init, out.u2_init, options.dt);
    out.gap = eval.gap;
    out.match_residual = eval.match_residual;
    out.valid = out.match_residual <= out.match_tol;
    return out;
}

std::string verdict_label(Verdict v) {
    switch (v) {
    case Verdict::DeterministicAtTolerance: return "deterministic at tolerance";
    case Verdict::EvidenceForDA: return "evidence for DA";
    case Verdict::DAViolated: return "DA violated";
    case Verdict::Inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

LogLinearFit fit_log_linear(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw Error(ErrorCode::InvalidArgument, "log-linear fit needs at least two points");
    const auto count = static_cast<double>(x.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(y[i] > 0.0)) throw Error(ErrorCode::InvalidArgument, "log-linear fit needs positive values");
        mx += x[i];
        my += std::log(y[i]);
    }
    mx /= count;
    my /= count;
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = std::log(y[i]) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0) throw Error(ErrorCode::InvalidArgument, "log-linear fit needs distinct abscissae");
    LogLinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
    return fit;
}

AmbiguityEstimate estimate_decay(const NonlinearSystem& sys, const std::vector<double>& horizons,
                                 std::uint64_t seed, const ProbeOptions& options) {
    if (horizons.empty()) throw Error(ErrorCode::InvalidArgument, "horizons must be non-empty");
    for (std::size_t i = 0; i < horizons.size(); ++i) {
        if (!(horizons[i] > 0.0)) throw Error(ErrorCode::InvalidArgument, "horizons must be positive");
        if (i > 0 && !(horizons[i] > horizons[i - 1]))
            throw Error(ErrorCode::InvalidArgument, "horizons must be strictly increasing");
    }

    AmbiguityEstimate est;
    est.horizons = horizons;
    for (std::size_t j = 0; j < horizons.size(); ++j) {
        PairSearchOptions search = options.search;
        search.match_tol = options.match_tol_per_T * horizons[j];
        auto result = matched_pair_search(sys, horizons[j], seed + 7919 * static_cast<std::uint64_t>(j), search);
        est.gaps.push_back(result.gap);
        est.match_residuals.push_back(result.match_residual);
        est.valid.push_back(result.valid);
        est.witnesses.push_back(std::move(result));
    }

    const bool all_valid = std::all_of(est.valid.begin(), est.valid.end(), [](bool v) { return v; });
    std::vector<double> fit_t;
    std::vector<double> fit_g;
    bool any_valid = false;
    for (std::size_t j = 0; j < horizons.size(); ++j) {
        if (!est.valid[j]) continue;
        any_valid = true;
        if (est.gaps[j] > options.gap_floor) {
            fit_t.push_back(horizons[j]);
            fit_g.push_back(est.gaps[j]);
        }
    }

    std::ostringstream note;
    if (!any_valid) {
        est.verdict = Verdict::Inconclusive;
        note << "no horizon produced a pair within the match tolerance";
    } else if (fit_t.empty()) {
        est.verdict = all_valid ? Verdict::DeterministicAtTolerance : Verdict::Inconclusive;
        note << "all matched gaps are below the floor " << options.gap_floor;
        if (!all_valid) note << " but some searches failed to match";
    } else if (fit_t.size() < 2) {
        est.verdict = Verdict::Inconclusive;
        note << "a single gap above the floor; alpha cannot be fitted";
    } else {
        const auto fit = fit_log_linear(fit_t, fit_g);
        est.fit_r2 = fit.r2;
        const double alpha = -fit.slope;
        if (!all_valid) {
            est.verdict = Verdict::Inconclusive;
            note << "fit withheld: some searches failed to match";
        } else if (fit.r2 < options.fit_min) {
            est.verdict = Verdict::Inconclusive;
            note << "log-linear fit r2 = " << fit.r2 << " below " << options.fit_min;
        } else {
            est.alpha = alpha;
            est.C = std::exp(fit.intercept);
            if (alpha > 0.0) {
                est.verdict = Verdict::EvidenceForDA;
                note << "gaps decay exponentially in T";
            } else {
                est.verdict = Verdict::DAViolated;
                const auto worst = std::max_element(fit_g.begin(), fit_g.end()) - fit_g.begin();
                note << "gaps do not decay; witness pair at T = " << fit_t[static_cast<std::size_t>(worst)];
            }
        }
    }
    est.note = note.str();
    return est;
}

} // namespace obsdyn
