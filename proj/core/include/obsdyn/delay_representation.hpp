#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "obsdyn/history.hpp"
#include "obsdyn/krylov_closure.hpp"
#include "obsdyn/linalg.hpp"

namespace obsdyn {

inline constexpr double kDefaultCondMax = 1e8;

/// First-order lift of a closure onto the stacked derivatives
/// Y = (y, y', ..., y^{(r)}): dY/dt = calA Y, y = P0 Y, y' = P1 Y.
struct CompanionSystem {
    int m = 0;
    int r = 0;
    Matrix calA;               // m(r+1) x m(r+1)
    Matrix P0;                 // m x m(r+1)
    std::optional<Matrix> P1;  // absent when r = 0 (no derivative block)

    [[nodiscard]] int dim() const noexcept { return m * (r + 1); }
    /// Maps Y to y'; equals P1 when r >= 1 and P0 calA in every case.
    [[nodiscard]] Matrix derivative_selector() const { return P0 * calA; }
};

struct Atom {
    double location;  // delay tau_k >= 0
    Matrix mass;      // m x m weight W_k
};

/// Signed matrix-valued atomic measure mu = sum_k W_k delta_{tau_k}.
class AtomicMeasure {
public:
    explicit AtomicMeasure(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {}

    [[nodiscard]] const std::vector<Atom>& atoms() const noexcept { return atoms_; }
    [[nodiscard]] double support_end() const;
    /// integral_0^h dmu(s) y(t - s) for the segment anchored at t.
    [[nodiscard]] Vector integrate(const HistorySegment& history) const;

private:
    std::vector<Atom> atoms_;
};

/// Discrete delay representation y'(t) = sum_k W_k y(t - tau_k).
struct DelayModel {
    int m = 0;
    int r = 0;
    std::vector<double> delays;   // strictly increasing, delays[0] >= 0
    std::vector<Matrix> weights;  // W_1 ... W_{r+1}
    double cond_M = 0.0;

    [[nodiscard]] double horizon() const { return delays.empty() ? 0.0 : delays.back(); }
    [[nodiscard]] AtomicMeasure measure() const;
};

[[nodiscard]] CompanionSystem companion_system(const ClosureModel& model);

/// F(tau) = P0 exp(-calA tau).
[[nodiscard]] Matrix evaluation_block(const CompanionSystem& comp, double tau);

/// Stacked M = [F(tau_1); ...; F(tau_{r+1})].
[[nodiscard]] Matrix evaluation_matrix(const CompanionSystem& comp, std::span<const double> delays);

/// Solves W M = P0 calA for the block row W = [W_1 ... W_{r+1}].
/// Throws SingularEvaluationMatrix when cond(M) > cond_max.
[[nodiscard]] DelayModel delay_weights(const CompanionSystem& comp, std::span<const double> delays,
                                       double cond_max = kDefaultCondMax);

struct DelaySearchOptions {
    double h_max = 1.0;
    std::uint64_t seed = 0;
    int max_attempts = 100;
    double cond_max = kDefaultCondMax;
};

/// Rejection sampling of r+1 distinct sorted delays, uniform on [0, h_max],
/// until cond(M) <= cond_max. Deterministic for a given seed; the first
/// admissible attempt wins. Throws NoAdmissibleDelays after max_attempts.
[[nodiscard]] std::vector<double> find_generic_delays(const CompanionSystem& comp,
                                                      const DelaySearchOptions& options);

/// Greedy construction: start at tau = 0 and repeatedly add the grid point in
/// [0, h_max] whose block F(tau) maximises the smallest singular value of the
/// growing stack. Throws NoAdmissibleDelays if the final cond(M) > cond_max.
[[nodiscard]] std::vector<double> greedy_delays(const CompanionSystem& comp, double h_max,
                                                int grid_points = 256,
                                                double cond_max = kDefaultCondMax);

/// sum_k W_k y(t - tau_k), reading the delayed values off the history
/// interpolant. Throws InsufficientHistory if the segment is shorter than
/// the largest delay.
[[nodiscard]] Vector apply_delay_model(const DelayModel& dm, const HistorySegment& history);

} // namespace obsdyn
