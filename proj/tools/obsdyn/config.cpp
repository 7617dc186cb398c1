#include "config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include <obsdyn/errors.hpp>

namespace obsdyn::cli {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); }

// Reads typed fields out of one JSON object and rejects keys nobody asked for.
class Section {
public:
    Section(const json& doc, std::string path) : doc_(doc), path_(std::move(path)) {
        if (!doc_.is_object()) fail(where() + " must be an object");
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return doc_.contains(key);
    }

    template <typename T>
    void read(const std::string& key, T& out) {
        if (!has(key)) return;
        try {
            out = doc_.at(key).get<T>();
        } catch (const json::exception&) {
            fail(where(key) + " has the wrong type");
        }
    }

    void positive(const std::string& key, double& out) {
        read(key, out);
        if (!(out > 0.0) || !std::isfinite(out)) fail(where(key) + " must be positive and finite");
    }

    void positive(const std::string& key, int& out) {
        read(key, out);
        if (out <= 0) fail(where(key) + " must be a positive integer");
    }

    const json& child(const std::string& key) {
        seen_.insert(key);
        return doc_.at(key);
    }

    void finish() const {
        for (const auto& item : doc_.items()) {
            if (!seen_.count(item.key())) fail("unknown key " + where(item.key()));
        }
    }

    std::string where(const std::string& key = "") const {
        if (key.empty()) return path_.empty() ? "config" : path_;
        return path_.empty() ? "'" + key + "'" : "'" + path_ + "." + key + "'";
    }

private:
    const json& doc_;
    std::string path_;
    std::set<std::string> seen_;
};

void require_increasing(const std::vector<double>& values, const std::string& name) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!(values[i] > 0.0) || !std::isfinite(values[i])) fail(name + " entries must be positive");
        if (i > 0 && !(values[i] > values[i - 1])) fail(name + " must be strictly increasing");
    }
}

void parse_system(Section& top, ExperimentConfig& cfg) {
    if (!top.has("system")) return;
    Section s(top.child("system"), "system");
    std::string file;
    s.read("matrix_file", file);
    if (!file.empty()) cfg.system.matrix_file = file;
    std::string name;
    s.read("registry", name);
    if (!name.empty()) cfg.system.registry = name;
    if (s.has("params")) {
        Section p(s.child("params"), "system.params");
        for (const auto& item : s.child("params").items()) {
            double v = 0.0;
            p.read(item.key(), v);
        }
        p.finish();
        cfg.system.params = s.child("params").get<ParameterMap>();
    }
    if (s.has("box")) s.positive("box", cfg.system.box);
    s.finish();
    if (cfg.system.matrix_file && cfg.system.registry)
        fail("system takes either 'matrix_file' or 'registry', not both");
}

void parse_tolerances(Section& top, Tolerances& tol) {
    if (!top.has("tolerances")) return;
    Section t(top.child("tolerances"), "tolerances");
    t.positive("rank_tol", tol.rank_tol);
    t.positive("closure_tol", tol.closure_tol);
    t.positive("cond_max", tol.cond_max);
    t.positive("match_tol_per_T", tol.match_tol_per_T);
    t.positive("gap_floor", tol.gap_floor);
    t.positive("fit_min", tol.fit_min);
    t.positive("verify_tol", tol.verify_tol);
    t.finish();
}

void parse_delays(Section& top, DelaySettings& d) {
    if (!top.has("delays")) return;
    Section s(top.child("delays"), "delays");
    s.read("method", d.method);
    if (d.method != "random" && d.method != "greedy") fail("'delays.method' must be \"random\" or \"greedy\"");
    s.positive("h_max", d.h_max);
    s.positive("max_attempts", d.max_attempts);
    s.positive("grid_points", d.grid_points);
    s.read("delays", d.delays);
    s.read("u0", d.u0);
    s.positive("horizons", d.horizons);
    s.positive("steps_per_horizon", d.steps_per_horizon);
    s.finish();
}

void parse_probe(Section& top, ProbeSettings& p) {
    if (!top.has("probe")) return;
    Section s(top.child("probe"), "probe");
    s.read("horizons", p.horizons);
    s.positive("dt", p.dt);
    s.positive("starts", p.starts);
    s.positive("iters", p.iters);
    s.positive("penalty", p.penalty);
    s.positive("penalty_factor", p.penalty_factor);
    s.positive("rounds", p.rounds);
    s.positive("threads", p.threads);
    s.finish();
    require_increasing(p.horizons, "'probe.horizons'");
}

void parse_fml(Section& top, FmlSettings& f) {
    if (!top.has("fml")) return;
    Section s(top.child("fml"), "fml");
    s.read("h_list", f.h_list);
    s.positive("n_traj", f.n_traj);
    s.positive("dt", f.dt);
    s.positive("history_dt", f.history_dt);
    s.positive("span", f.span);
    s.positive("stride", f.stride);
    s.read("ridge", f.ridge);
    if (!(f.ridge >= 0.0)) fail("'fml.ridge' must be nonnegative");
    s.positive("rollout", f.rollout);
    s.finish();
    require_increasing(f.h_list, "'fml.h_list'");
}

} // namespace

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        fail(std::string("config is not valid JSON: ") + e.what());
    }
    ExperimentConfig cfg;
    cfg.base_dir = base_dir;
    Section top(doc, "");
    std::string schema;
    top.read("schema", schema);
    if (schema != kConfigSchema) fail("config 'schema' must be \"" + std::string(kConfigSchema) + "\"");
    top.read("seed", cfg.seed);
    std::string output;
    top.read("output", output);
    if (!output.empty()) cfg.output = output;
    parse_system(top, cfg);
    parse_tolerances(top, cfg.tolerances);
    parse_delays(top, cfg.delays);
    parse_probe(top, cfg.probe);
    parse_fml(top, cfg.fml);
    top.finish();

    if (cfg.system.matrix_file) {
        auto path = *cfg.system.matrix_file;
        if (path.is_relative()) path = base_dir / path;
        if (!std::filesystem::exists(path)) fail("matrix file not found: " + path.string());
        cfg.system.matrix_file = path;
    }
    if (cfg.output.is_relative()) cfg.output = base_dir / cfg.output;
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open config " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str(), path.parent_path().empty() ? "." : path.parent_path());
}

std::string canonical_json(const ExperimentConfig& cfg) {
    json doc;
    doc["schema"] = kConfigSchema;
    doc["seed"] = cfg.seed;
    json sys;
    if (cfg.system.matrix_file) {
        // Content, not location, determines the experiment.
        std::ifstream in(*cfg.system.matrix_file, std::ios::binary);
        std::ostringstream buffer;
        buffer << in.rdbuf();
        sys["matrix_fnv1a"] = fnv1a(buffer.str());
    }
    if (cfg.system.registry) sys["registry"] = *cfg.system.registry;
    sys["params"] = cfg.system.params;
    sys["box"] = cfg.system.box;
    doc["system"] = sys;
    const auto& t = cfg.tolerances;
    doc["tolerances"] = {{"rank_tol", t.rank_tol},       {"closure_tol", t.closure_tol},
                         {"cond_max", t.cond_max},       {"match_tol_per_T", t.match_tol_per_T},
                         {"gap_floor", t.gap_floor},     {"fit_min", t.fit_min},
                         {"verify_tol", t.verify_tol}};
    const auto& d = cfg.delays;
    doc["delays"] = {{"method", d.method},       {"h_max", d.h_max},
                     {"max_attempts", d.max_attempts}, {"grid_points", d.grid_points},
                     {"delays", d.delays},       {"u0", d.u0},
                     {"horizons", d.horizons},   {"steps_per_horizon", d.steps_per_horizon}};
    const auto& p = cfg.probe;
    doc["probe"] = {{"horizons", p.horizons}, {"dt", p.dt},         {"starts", p.starts},
                    {"iters", p.iters},       {"penalty", p.penalty}, {"penalty_factor", p.penalty_factor},
                    {"rounds", p.rounds}};
    const auto& f = cfg.fml;
    doc["fml"] = {{"h_list", f.h_list}, {"n_traj", f.n_traj}, {"dt", f.dt},       {"history_dt", f.history_dt},
                  {"span", f.span},     {"stride", f.stride}, {"ridge", f.ridge}, {"rollout", f.rollout}};
    return doc.dump();
}

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t hash = 14695981039346656037ull;
    for (const unsigned char c : bytes) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    return hash;
}

} // namespace obsdyn::cli
