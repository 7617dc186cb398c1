#include "obsdyn/delay_representation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "obsdyn/errors.hpp"
#include "obsdyn/expm.hpp"

namespace obsdyn {
namespace {

double condition_number(const Matrix& m) {
    const Vector sv = Eigen::JacobiSVD<Matrix>(m).singularValues();
    const double smin = sv(sv.size() - 1);
    if (smin == 0.0) return std::numeric_limits<double>::infinity();
    return sv(0) / smin;
}

void check_delays(const CompanionSystem& comp, std::span<const double> delays) {
    if (static_cast<int>(delays.size()) != comp.r + 1) {
        std::ostringstream msg;
        msg << "expected " << comp.r + 1 << " delays, got " << delays.size();
        throw Error(ErrorCode::InvalidArgument, msg.str());
    }
    for (std::size_t k = 0; k < delays.size(); ++k) {
        if (!std::isfinite(delays[k]) || delays[k] < 0.0)
            throw Error(ErrorCode::InvalidArgument, "delays must be finite and nonnegative");
        if (k > 0 && !(delays[k] > delays[k - 1]))
            throw Error(ErrorCode::InvalidArgument, "delays must be strictly increasing");
    }
}

} // namespace

double AtomicMeasure::support_end() const {
    double end = 0.0;
    for (const auto& atom : atoms_) end = std::max(end, atom.location);
    return end;
}

Vector AtomicMeasure::integrate(const HistorySegment& history) const {
    if (!history.covers(support_end()))
        throw Error(ErrorCode::InsufficientHistory, "history shorter than the delay horizon");
    Vector sum = Vector::Zero(history.dim());
    for (const auto& atom : atoms_) sum += atom.mass * history.at(-atom.location);
    return sum;
}

AtomicMeasure DelayModel::measure() const {
    std::vector<Atom> atoms;
    for (std::size_t k = 0; k < delays.size(); ++k) atoms.push_back({delays[k], weights[k]});
    return AtomicMeasure(std::move(atoms));
}

CompanionSystem companion_system(const ClosureModel& model) {
    if (model.C.empty() || static_cast<int>(model.C.size()) != model.r + 1)
        throw Error(ErrorCode::InvalidArgument, "closure model must carry r+1 matrices");
    CompanionSystem comp;
    comp.m = model.m();
    comp.r = model.r;
    const int m = comp.m;
    const int dim = comp.dim();
    comp.calA = Matrix::Zero(dim, dim);
    for (int k = 0; k < model.r; ++k) comp.calA.block(k * m, (k + 1) * m, m, m).setIdentity();
    for (int k = 0; k <= model.r; ++k) comp.calA.block(model.r * m, k * m, m, m) = model.C[static_cast<std::size_t>(k)];
    comp.P0 = Matrix::Zero(m, dim);
    comp.P0.leftCols(m).setIdentity();
    if (model.r >= 1) {
        Matrix p1 = Matrix::Zero(m, dim);
        p1.middleCols(m, m).setIdentity();
        comp.P1 = std::move(p1);
    }
    return comp;
}

Matrix evaluation_block(const CompanionSystem& comp, double tau) {
    if (!(tau >= 0.0)) throw Error(ErrorCode::InvalidArgument, "tau must be nonnegative");
    if (tau == 0.0) return comp.P0;
    return expm(-tau * comp.calA).topRows(comp.m);
}

Matrix evaluation_matrix(const CompanionSystem& comp, std::span<const double> delays) {
    Matrix stacked(comp.m * static_cast<Eigen::Index>(delays.size()), comp.dim());
    for (std::size_t k = 0; k < delays.size(); ++k)
        stacked.middleRows(static_cast<Eigen::Index>(k) * comp.m, comp.m) = evaluation_block(comp, delays[k]);
    return stacked;
}

DelayModel delay_weights(const CompanionSystem& comp, std::span<const double> delays, double cond_max) {
    check_delays(comp, delays);
    const Matrix stacked = evaluation_matrix(comp, delays);
    const double cond = condition_number(stacked);
    if (!(cond <= cond_max)) {
        std::ostringstream msg;
        msg << "cond(M) = " << cond << " exceeds " << cond_max << "; resample the delays";
        throw Error(ErrorCode::SingularEvaluationMatrix, msg.str());
    }

    // W M = P0 calA  <=>  M^T W^T = (P0 calA)^T
    const Matrix w = stacked.transpose().fullPivLu().solve(comp.derivative_selector().transpose()).transpose();

    DelayModel dm;
    dm.m = comp.m;
    dm.r = comp.r;
    dm.delays.assign(delays.begin(), delays.end());
    dm.cond_M = cond;
    for (int k = 0; k <= comp.r; ++k) dm.weights.push_back(w.middleCols(k * comp.m, comp.m));
    return dm;
}

std::vector<double> find_generic_delays(const CompanionSystem& comp, const DelaySearchOptions& options) {
    if (!(options.h_max > 0.0) || options.max_attempts <= 0) {
        throw Error(ErrorCode::NoAdmissibleDelays,
                    "delay window [0, h_max] must have positive length and attempts must be positive");
    }
    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> unit(0.0, options.h_max);
    const auto count = static_cast<std::size_t>(comp.r) + 1;
    std::vector<double> delays(count);
    for (int attempt = 0; attempt < options.max_attempts; ++attempt) {
        for (auto& tau : delays) tau = unit(rng);
        std::sort(delays.begin(), delays.end());
        if (std::adjacent_find(delays.begin(), delays.end()) != delays.end()) continue;
        const double cond = condition_number(evaluation_matrix(comp, delays));
        if (cond <= options.cond_max) return delays;
    }
    std::ostringstream msg;
    msg << "no admissible delay tuple in " << options.max_attempts << " attempts on [0, " << options.h_max
        << "]; h_max is likely too small for the dynamics' time scale";
    throw Error(ErrorCode::NoAdmissibleDelays, msg.str());
}

std::vector<double> greedy_delays(const CompanionSystem& comp, double h_max, int grid_points, double cond_max) {
    if (!(h_max > 0.0) || grid_points < comp.r + 1)
        throw Error(ErrorCode::NoAdmissibleDelays, "greedy delay grid is empty or too coarse");

    std::vector<double> grid(static_cast<std::size_t>(grid_points));
    std::vector<Matrix> blocks;
    for (int i = 0; i < grid_points; ++i) {
        grid[static_cast<std::size_t>(i)] = h_max * i / (grid_points - 1);
        blocks.push_back(evaluation_block(comp, grid[static_cast<std::size_t>(i)]));
    }

    std::vector<bool> used(grid.size(), false);
    std::vector<double> chosen{0.0};
    used[0] = true;
    Matrix stack = blocks[0];
    for (int step = 1; step <= comp.r; ++step) {
        double best_sigma = -1.0;
        std::size_t best = 0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (used[i]) continue;
            Matrix trial(stack.rows() + comp.m, stack.cols());
            trial << stack, blocks[i];
            const Vector sv = Eigen::JacobiSVD<Matrix>(trial).singularValues();
            const double sigma = sv(sv.size() - 1);
            if (sigma > best_sigma) {
                best_sigma = sigma;
                best = i;
            }
        }
        used[best] = true;
        chosen.push_back(grid[best]);
        Matrix grown(stack.rows() + comp.m, stack.cols());
        grown << stack, blocks[best];
        stack = std::move(grown);
    }
    std::sort(chosen.begin(), chosen.end());
    const double cond = condition_number(evaluation_matrix(comp, chosen));
    if (!(cond <= cond_max)) {
        std::ostringstream msg;
        msg << "greedy delays reach cond(M) = " << cond << " > " << cond_max;
        throw Error(ErrorCode::NoAdmissibleDelays, msg.str());
    }
    return chosen;
}

Vector apply_delay_model(const DelayModel& dm, const HistorySegment& history) {
    if (history.dim() != dm.m) throw Error(ErrorCode::InvalidArgument, "history dimension does not match model");
    if (!history.covers(dm.horizon()))
        throw Error(ErrorCode::InsufficientHistory, "history shorter than the delay horizon");
    Vector sum = Vector::Zero(dm.m);
    for (std::size_t k = 0; k < dm.delays.size(); ++k) sum += dm.weights[k] * history.at(-dm.delays[k]);
    return sum;
}

} // namespace obsdyn
