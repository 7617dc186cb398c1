#include "commands.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <random>

#include <json.hpp>

#include <obsdyn/ambiguity_probe.hpp>
#include <obsdyn/delay_representation.hpp>
#include <obsdyn/finite_memory.hpp>
#include <obsdyn/io.hpp>
#include <obsdyn/krylov_closure.hpp>
#include <obsdyn/ode_engine.hpp>
#include <obsdyn/registry.hpp>

#ifndef OBSDYN_VERSION
#define OBSDYN_VERSION "unknown"
#endif

namespace obsdyn::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string hex64(std::uint64_t v) {
    std::array<char, 17> buf{};
    std::snprintf(buf.data(), buf.size(), "%016llx", static_cast<unsigned long long>(v));
    return buf.data();
}

json matrix_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

LinearObservableSystem linear_system(const ExperimentConfig& cfg) {
    if (!cfg.system.matrix_file)
        throw Error(ErrorCode::ConfigError, "this command needs 'system.matrix_file' (a linear system)");
    auto pair = read_matrix_file(*cfg.system.matrix_file);
    return LinearObservableSystem(std::move(pair.A), std::move(pair.B), cfg.tolerances.rank_tol);
}

NonlinearSystem probe_system(const ExperimentConfig& cfg) {
    if (cfg.system.registry) return make_registry_system(*cfg.system.registry, cfg.system.params);
    if (cfg.system.matrix_file) {
        const auto lin = linear_system(cfg);
        const double b = cfg.system.box;
        Box box{Vector::Constant(lin.n(), -b), Vector::Constant(lin.n(), b)};
        return as_nonlinear(lin, std::move(box), cfg.system.matrix_file->filename().string());
    }
    throw Error(ErrorCode::ConfigError, "config has no 'system'");
}

void report_warnings(const std::vector<std::string>& warnings, std::ostream& out) {
    for (const auto& w : warnings) out << "warning: " << w << "\n";
}

double relative_to(double value, double scale) { return scale > 0.0 ? value / scale : value; }

} // namespace

void write_atomic(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw Error(ErrorCode::ConfigError, "write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

OutputDir::OutputDir(fs::path dir, const ExperimentConfig& config) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Error(ErrorCode::ConfigError, "cannot create output directory " + dir_.string());
    provenance_ = "# obsdyn " OBSDYN_VERSION "\n# config fnv1a64:" + hex64(fnv1a(canonical_json(config))) +
                  "\n# seed " + std::to_string(config.seed) + "\n";
}

void OutputDir::write_csv(const std::string& name, const std::string& table) const {
    write_atomic(dir_ / name, provenance_ + table);
}

void OutputDir::write_text(const std::string& name, const std::string& content) const {
    write_atomic(dir_ / name, content);
}

int exit_code_for(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::DegenerateSystem:
    case ErrorCode::ParseError:
    case ErrorCode::ConfigError:
        return kInputError;
    case ErrorCode::ClosureResidualExceeded:
    case ErrorCode::SingularEvaluationMatrix:
    case ErrorCode::NoAdmissibleDelays:
    case ErrorCode::InsufficientHistory:
    case ErrorCode::NonFiniteState:
        return kInvariantFailure;
    }
    return kInvariantFailure;
}

int cmd_closure(const ExperimentConfig& cfg, std::ostream& out) {
    const auto sys = linear_system(cfg);
    report_warnings(sys.warnings(), out);
    const auto ladder = krylov_ladder(sys, cfg.tolerances.rank_tol);
    report_warnings(ladder.warnings, out);
    const auto model = closure_matrices(sys, ladder, cfg.tolerances.closure_tol);
    const double annihilation = verify_annihilation(sys, model);
    const double scale = observation_powers(sys, model.r + 2).back().norm();
    const auto minimality = minimality_residuals(sys, ladder);

    const OutputDir dir(cfg.output, cfg);
    std::string ladder_csv = "k,dim\n";
    for (std::size_t k = 0; k < ladder.dims.size(); ++k)
        ladder_csv += std::to_string(k) + "," + std::to_string(ladder.dims[k]) + "\n";
    dir.write_csv("ladder.csv", ladder_csv);
    std::string min_csv = "k,relative_residual\n";
    for (std::size_t k = 0; k < minimality.size(); ++k)
        min_csv += std::to_string(k) + "," + format_double(minimality[k]) + "\n";
    dir.write_csv("minimality.csv", min_csv);

    json report;
    report["dims"] = ladder.dims;
    report["r"] = model.r;
    json cs = json::array();
    for (const auto& c : model.C) cs.push_back(matrix_json(c));
    report["C"] = std::move(cs);
    report["fit_residual"] = model.residual;
    report["annihilation_residual"] = annihilation;
    report["annihilation_relative"] = relative_to(annihilation, scale);
    report["minimality_residuals"] = minimality;
    report["warnings"] = ladder.warnings;
    dir.write_text("closure.json", report.dump(2) + "\n");

    out << "r = " << model.r << ", dims =";
    for (const int d : ladder.dims) out << " " << d;
    out << "\nannihilation residual " << format_double(annihilation) << " (relative "
        << format_double(relative_to(annihilation, scale)) << ")\n";
    if (!(annihilation <= cfg.tolerances.closure_tol * std::max(scale, 1e-300))) {
        out << "error: annihilation residual exceeds closure_tol\n";
        return kInvariantFailure;
    }
    return kSuccess;
}

int cmd_delays(const ExperimentConfig& cfg, std::ostream& out) {
    const auto sys = linear_system(cfg);
    report_warnings(sys.warnings(), out);
    const auto ladder = krylov_ladder(sys, cfg.tolerances.rank_tol);
    const auto model = closure_matrices(sys, ladder, cfg.tolerances.closure_tol);
    const auto comp = companion_system(model);
    const auto& ds = cfg.delays;

    std::vector<double> delays = ds.delays;
    if (delays.empty()) {
        if (ds.method == "greedy")
            delays = greedy_delays(comp, ds.h_max, ds.grid_points, cfg.tolerances.cond_max);
        else
            delays = find_generic_delays(comp, {ds.h_max, cfg.seed, ds.max_attempts, cfg.tolerances.cond_max});
    }
    const DelayModel dm = delay_weights(comp, delays, cfg.tolerances.cond_max);

    Vector u0 = Vector::Ones(sys.n());
    if (!ds.u0.empty()) {
        if (static_cast<int>(ds.u0.size()) != sys.n())
            throw Error(ErrorCode::ConfigError, "'delays.u0' must have n entries");
        u0 = Eigen::Map<const Vector>(ds.u0.data(), sys.n());
    }
    // With a single zero delay the DDE is an ODE; verify over a unit horizon.
    const double h = dm.horizon() > 0.0 ? dm.horizon() : 1.0;
    const double dt = h / ds.steps_per_horizon;
    const auto truth = [&](double t) { return linear_observable_at(sys, u0, t); };
    const auto history = HistorySegment::sample(0.0, h, dt, truth);
    const auto traj = propagate_dde(dm, history, ds.horizons * h, dt);

    std::string table = "t";
    for (int i = 1; i <= dm.m; ++i) table += ",y" + std::to_string(i);
    for (int i = 1; i <= dm.m; ++i) table += ",dde" + std::to_string(i);
    table += ",error\n";
    double max_err = 0.0;
    double max_y = 0.0;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const Vector y = truth(traj.time(i));
        const double err = (y - traj.observables[i]).norm();
        max_err = std::max(max_err, err);
        max_y = std::max(max_y, y.norm());
        table += format_double(traj.time(i));
        for (Eigen::Index k = 0; k < y.size(); ++k) table += "," + format_double(y(k));
        for (Eigen::Index k = 0; k < y.size(); ++k) table += "," + format_double(traj.observables[i](k));
        table += "," + format_double(err) + "\n";
    }
    const double rel = relative_to(max_err, max_y);

    const OutputDir dir(cfg.output, cfg);
    dir.write_text("delay_model.json", to_json(dm));
    dir.write_csv("verification.csv", table);
    dir.write_csv("summary.csv", "r,h,cond_M,max_abs_error,max_rel_error\n" + std::to_string(dm.r) + "," +
                                     format_double(dm.horizon()) + "," + format_double(dm.cond_M) + "," +
                                     format_double(max_err) + "," + format_double(rel) + "\n");

    out << "delays:";
    for (const double tau : dm.delays) out << " " << format_double(tau);
    out << "\ncond_M " << format_double(dm.cond_M) << "\nclosed-loop max error " << format_double(max_err)
        << " (relative " << format_double(rel) << ") over " << format_double(ds.horizons) << " horizons\n";
    if (!(rel <= cfg.tolerances.verify_tol)) {
        out << "error: closed-loop error exceeds verify_tol\n";
        return kInvariantFailure;
    }
    return kSuccess;
}

int cmd_da_probe(const ExperimentConfig& cfg, std::ostream& out) {
    if (cfg.probe.horizons.empty()) throw Error(ErrorCode::ConfigError, "'probe.horizons' must be non-empty");
    const auto sys = probe_system(cfg);
    ProbeOptions options;
    options.search.dt = cfg.probe.dt;
    options.search.starts = cfg.probe.starts;
    options.search.iters = cfg.probe.iters;
    options.search.penalty = cfg.probe.penalty;
    options.search.penalty_factor = cfg.probe.penalty_factor;
    options.search.rounds = cfg.probe.rounds;
    options.search.threads = cfg.probe.threads;
    options.match_tol_per_T = cfg.tolerances.match_tol_per_T;
    options.gap_floor = cfg.tolerances.gap_floor;
    options.fit_min = cfg.tolerances.fit_min;
    const auto est = estimate_decay(sys, cfg.probe.horizons, cfg.seed, options);

    const OutputDir dir(cfg.output, cfg);
    dir.write_csv("probe.csv", probe_csv(est));
    json summary = json::parse(summary_to_json(est));
    json witnesses = json::array();
    for (const auto& w : est.witnesses) {
        witnesses.push_back({{"u1", std::vector<double>(w.u1_init.data(), w.u1_init.data() + w.u1_init.size())},
                             {"u2", std::vector<double>(w.u2_init.data(), w.u2_init.data() + w.u2_init.size())},
                             {"match_tol", w.match_tol}});
    }
    summary["witnesses"] = std::move(witnesses);
    dir.write_text("summary.json", summary.dump(2) + "\n");

    for (std::size_t j = 0; j < est.horizons.size(); ++j) {
        out << "T = " << format_double(est.horizons[j]) << "  gap " << format_double(est.gaps[j]) << "  mismatch "
            << format_double(est.match_residuals[j]) << (est.valid[j] ? "" : "  (search failed)") << "\n";
    }
    out << "verdict: " << verdict_label(est.verdict) << " (" << est.note << ")\n";
    if (est.alpha) out << "alpha " << format_double(*est.alpha) << ", C " << format_double(*est.C) << "\n";
    return kSuccess;
}

int cmd_fml_fit(const ExperimentConfig& cfg, std::ostream& out) {
    if (cfg.fml.h_list.empty()) throw Error(ErrorCode::ConfigError, "'fml.h_list' must be non-empty");
    const auto sys = probe_system(cfg);
    FiniteMemoryOptions options;
    options.n_traj = cfg.fml.n_traj;
    options.dt = cfg.fml.dt;
    options.history_dt = cfg.fml.history_dt;
    options.span = cfg.fml.span;
    options.stride = cfg.fml.stride;
    options.ridge = cfg.fml.ridge;

    // One held-out trajectory per run for the rollout comparison.
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Vector u0(sys.n);
    for (int k = 0; k < sys.n; ++k)
        u0(k) = sys.region.lower(k) + unit(rng) * (sys.region.upper(k) - sys.region.lower(k));

    const OutputDir dir(cfg.output, cfg);
    std::string table = "h,training_residual,target_rms,relative_residual,rollout_error,samples\n";
    for (const double h : cfg.fml.h_list) {
        const auto pred = fit_finite_memory(sys, h, cfg.seed, options);
        report_warnings(pred.warnings, out);

        const double span = cfg.fml.rollout * pred.h;
        const auto truth = simulate_nonlinear(sys, u0, 0.0, pred.h + span, options.dt);
        const auto anchor = static_cast<std::size_t>(std::llround(pred.h / options.dt));
        const auto rollout = predictor_rollout(pred, truth.history(anchor, pred.h), span, options.dt);
        double max_err = 0.0;
        double max_y = 0.0;
        for (std::size_t i = 0; i < rollout.size() && anchor + i < truth.size(); ++i) {
            max_err = std::max(max_err, (rollout.observables[i] - truth.observables[anchor + i]).norm());
            max_y = std::max(max_y, truth.observables[anchor + i].norm());
        }
        const double rollout_error = relative_to(max_err, max_y);

        table += format_double(pred.h) + "," + format_double(pred.training_residual) + "," +
                 format_double(pred.target_rms) + "," + format_double(pred.relative_residual()) + "," +
                 format_double(rollout_error) + "," + std::to_string(pred.samples) + "\n";
        dir.write_text("predictor_h" + format_double(pred.h) + ".json", to_json(pred));
        out << "h = " << format_double(pred.h) << "  residual " << format_double(pred.training_residual)
            << "  (relative " << format_double(pred.relative_residual()) << ")  rollout error "
            << format_double(rollout_error) << "\n";
    }
    dir.write_csv("fml.csv", table);
    return kSuccess;
}

} // namespace obsdyn::cli
