#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "obsdyn/ambiguity_probe.hpp"
#include "obsdyn/delay_representation.hpp"
#include "obsdyn/finite_memory.hpp"
#include "obsdyn/krylov_closure.hpp"
#include "obsdyn/ode_engine.hpp"

namespace obsdyn {

struct MatrixPair {
    Matrix A;
    Matrix B;
};

/// Plain-text system format: a line "n m", then n rows of A and m rows of B,
/// whitespace-separated decimal numbers. Lines starting with '#' are ignored.
[[nodiscard]] MatrixPair parse_matrix_text(std::string_view text);
[[nodiscard]] MatrixPair read_matrix_file(const std::filesystem::path& path);
[[nodiscard]] std::string format_matrix_text(const Matrix& a, const Matrix& b);

/// Shortest round-trip decimal representation ('.' separator, locale independent).
[[nodiscard]] std::string format_double(double value);

// Structured-text (JSON) documents.
[[nodiscard]] std::string to_json(const ClosureModel& model);
[[nodiscard]] ClosureModel closure_from_json(std::string_view text);
[[nodiscard]] std::string to_json(const DelayModel& model);
[[nodiscard]] DelayModel delay_model_from_json(std::string_view text);
[[nodiscard]] std::string to_json(const FiniteMemoryPredictor& pred);
[[nodiscard]] FiniteMemoryPredictor predictor_from_json(std::string_view text);
/// {alpha, C, fit_r2, verdict, note}; absent constants are null.
[[nodiscard]] std::string summary_to_json(const AmbiguityEstimate& est);

// CSV tables with '\n'-terminated rows.
/// Header t,u1..un,y1..ym; state columns are omitted for observable-only trajectories.
[[nodiscard]] std::string trajectory_csv(const Trajectory& traj);
/// Header T,gap,match_residual,valid.
[[nodiscard]] std::string probe_csv(const AmbiguityEstimate& est);

} // namespace obsdyn
