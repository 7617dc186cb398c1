#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "obsdyn/linalg.hpp"
#include "obsdyn/ode_engine.hpp"

namespace obsdyn {

inline constexpr double kDefaultMatchTolPerT = 1e-10;
inline constexpr double kDefaultGapFloor = 1e-7;
inline constexpr double kDefaultFitMin = 0.9;

/// Settings for the penalised search over initial pairs (u1(-T), u2(-T)) in K x K.
struct PairSearchOptions {
    double dt = 0.01;
    int starts = 8;
    int iters = 4000;              // polls per penalty round and start
    double penalty = 1.0;          // initial penalty
    double penalty_factor = 10.0;  // geometric continuation
    int rounds = 4;
    double match_tol = -1.0;       // absolute; <= 0 means kDefaultMatchTolPerT * T
    double initial_step = 0.25;    // fraction of the box width
    double min_step = 1e-10;       // fraction of the box width
    int threads = 1;
};

struct PairEvaluation {
    double gap = 0.0;             // |l(u1(0)) - l(u2(0))|
    double match_residual = 0.0;  // trapezoid integral of |y1 - y2|^2 over [-T, 0]
    bool left_region = false;
};

struct PairSearchResult {
    Vector u1_init;
    Vector u2_init;
    double gap = 0.0;
    double match_residual = 0.0;
    double objective = 0.0;
    double match_tol = 0.0;
    bool valid = false;  // match_residual <= match_tol
};

/// Simulates the pair over [-T, 0] and measures derivative gap and history mismatch.
[[nodiscard]] PairEvaluation evaluate_pair(const NonlinearSystem& sys, double T, const Vector& u1,
                                           const Vector& u2, double dt);

/// Maximises |l(u1(0)) - l(u2(0))|^2 - penalty * mismatch by compass pattern
/// search from seeded multi-starts, raising the penalty geometrically between
/// rounds. Returns the best pair; valid is false (search failed) when its
/// mismatch exceeds the match tolerance.
[[nodiscard]] PairSearchResult matched_pair_search(const NonlinearSystem& sys, double T, std::uint64_t seed,
                                                   const PairSearchOptions& options = {});

enum class Verdict {
    DeterministicAtTolerance,
    EvidenceForDA,
    DAViolated,
    Inconclusive,
};

[[nodiscard]] std::string verdict_label(Verdict v);

struct ProbeOptions {
    PairSearchOptions search;
    double match_tol_per_T = kDefaultMatchTolPerT;
    double gap_floor = kDefaultGapFloor;
    double fit_min = kDefaultFitMin;
};

struct AmbiguityEstimate {
    std::vector<double> horizons;
    std::vector<double> gaps;
    std::vector<double> match_residuals;
    std::vector<bool> valid;
    std::vector<PairSearchResult> witnesses;
    std::optional<double> alpha;
    std::optional<double> C;
    std::optional<double> fit_r2;
    Verdict verdict = Verdict::Inconclusive;
    std::string note;
};

/// Runs matched_pair_search per horizon and fits log g(T) = log C - alpha T
/// over valid gaps above the floor. alpha and C are reported only when every
/// search matched and the fit reaches fit_min.
[[nodiscard]] AmbiguityEstimate estimate_decay(const NonlinearSystem& sys, const std::vector<double>& horizons,
                                               std::uint64_t seed, const ProbeOptions& options = {});

struct LogLinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

/// Least-squares line through (x, log y).
[[nodiscard]] LogLinearFit fit_log_linear(const std::vector<double>& x, const std::vector<double>& y);

} // namespace obsdyn
