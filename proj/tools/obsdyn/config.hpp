#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <obsdyn/registry.hpp>

namespace obsdyn::cli {

inline constexpr const char* kConfigSchema = "obsdyn.config/1";

struct SystemSource {
    std::optional<std::filesystem::path> matrix_file;  // resolved against the config directory
    std::optional<std::string> registry;
    ParameterMap params;
    double box = 1.0;  // half-width of K for matrix systems used by the probes
};

struct Tolerances {
    double rank_tol = 1e-10;
    double closure_tol = 1e-8;
    double cond_max = 1e8;
    double match_tol_per_T = 1e-10;
    double gap_floor = 1e-7;
    double fit_min = 0.9;
    double verify_tol = 1e-5;  // closed-loop DDE relative error
};

struct DelaySettings {
    std::string method = "random";  // random | greedy
    double h_max = 2.0;
    int max_attempts = 100;
    int grid_points = 256;
    std::vector<double> delays;  // explicit tuple; overrides sampling
    std::vector<double> u0;      // verification initial state; empty = ones
    double horizons = 10.0;      // verification length in units of h
    int steps_per_horizon = 200;
};

struct ProbeSettings {
    std::vector<double> horizons;
    double dt = 0.01;
    int starts = 8;
    int iters = 4000;
    double penalty = 1.0;
    double penalty_factor = 10.0;
    int rounds = 4;
    int threads = 1;
};

struct FmlSettings {
    std::vector<double> h_list;
    int n_traj = 20;
    double dt = 0.01;
    double history_dt = 0.05;
    double span = 5.0;
    int stride = 5;
    double ridge = 1e-8;
    double rollout = 1.0;  // rollout length after the history, in units of h
};

struct ExperimentConfig {
    std::filesystem::path base_dir;
    SystemSource system;
    Tolerances tolerances;
    std::uint64_t seed = 0;
    std::filesystem::path output = "out";
    DelaySettings delays;
    ProbeSettings probe;
    FmlSettings fml;
};

/// Parses and validates a config document. Unknown keys, wrong types and
/// non-positive tolerances throw Error(ConfigError).
[[nodiscard]] ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir);
[[nodiscard]] ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical JSON of the effective configuration (after overrides); hashed
/// into output provenance.
[[nodiscard]] std::string canonical_json(const ExperimentConfig& config);

/// 64-bit FNV-1a.
[[nodiscard]] std::uint64_t fnv1a(const std::string& bytes);

} // namespace obsdyn::cli
