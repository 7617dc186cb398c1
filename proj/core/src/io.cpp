#include "obsdyn/io.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "obsdyn/errors.hpp"

namespace obsdyn {
namespace {

using nlohmann::json;

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const json& rows) {
    if (!rows.is_array() || rows.empty()) throw Error(ErrorCode::ParseError, "matrix must be a non-empty array");
    const auto r = static_cast<Eigen::Index>(rows.size());
    const auto c = static_cast<Eigen::Index>(rows.front().size());
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i) {
        const auto& row = rows[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != c)
            throw Error(ErrorCode::ParseError, "matrix rows must have equal length");
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = row[static_cast<std::size_t>(j)].get<double>();
    }
    return m;
}

json parse_document(std::string_view text) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, e.what());
    }
}

template <typename F>
auto with_parse_errors(F&& f) {
    try {
        return f();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, e.what());
    }
}

} // namespace

MatrixPair parse_matrix_text(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    std::vector<double> numbers;
    while (std::getline(in, line)) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream fields(line);
        std::string token;
        while (fields >> token) {
            double value = 0.0;
            const auto* begin = token.data();
            const auto* end = token.data() + token.size();
            if (*begin == '+') ++begin;
            const auto [ptr, ec] = std::from_chars(begin, end, value);
            if (ec != std::errc() || ptr != end) throw Error(ErrorCode::ParseError, "not a number: '" + token + "'");
            numbers.push_back(value);
        }
    }
    if (numbers.size() < 2) throw Error(ErrorCode::ParseError, "missing 'n m' header");
    const double nd = numbers[0];
    const double md = numbers[1];
    if (nd < 1 || md < 1 || nd != static_cast<double>(static_cast<long>(nd)) ||
        md != static_cast<double>(static_cast<long>(md)))
        throw Error(ErrorCode::ParseError, "header must hold two positive integers n m");
    const auto n = static_cast<Eigen::Index>(nd);
    const auto m = static_cast<Eigen::Index>(md);
    const auto expected = static_cast<std::size_t>(2 + n * n + m * n);
    if (numbers.size() != expected) {
        std::ostringstream msg;
        msg << "expected " << expected - 2 << " matrix entries for n = " << n << ", m = " << m << ", got "
            << numbers.size() - 2;
        throw Error(ErrorCode::ParseError, msg.str());
    }
    MatrixPair out{Matrix(n, n), Matrix(m, n)};
    std::size_t k = 2;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) out.A(i, j) = numbers[k++];
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < n; ++j) out.B(i, j) = numbers[k++];
    return out;
}

MatrixPair read_matrix_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ParseError, "cannot open matrix file " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_matrix_text(buffer.str());
}

std::string format_double(double value) {
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    if (ec != std::errc()) return "nan";
    return std::string(buf.data(), ptr);
}

std::string format_matrix_text(const Matrix& a, const Matrix& b) {
    std::string out = std::to_string(a.rows()) + " " + std::to_string(b.rows()) + "\n";
    auto emit = [&out](const Matrix& m) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            for (Eigen::Index j = 0; j < m.cols(); ++j) {
                if (j > 0) out += ' ';
                out += format_double(m(i, j));
            }
            out += '\n';
        }
    };
    emit(a);
    emit(b);
    return out;
}

std::string to_json(const ClosureModel& model) {
    json doc;
    doc["r"] = model.r;
    json cs = json::array();
    for (const auto& c : model.C) cs.push_back(matrix_to_json(c));
    doc["C"] = std::move(cs);
    doc["residual"] = model.residual;
    return doc.dump(2) + "\n";
}

ClosureModel closure_from_json(std::string_view text) {
    const json doc = parse_document(text);
    return with_parse_errors([&] {
        ClosureModel model;
        model.r = doc.at("r").get<int>();
        for (const auto& c : doc.at("C")) model.C.push_back(matrix_from_json(c));
        model.residual = doc.at("residual").get<double>();
        if (static_cast<int>(model.C.size()) != model.r + 1)
            throw Error(ErrorCode::ParseError, "closure document needs r+1 matrices");
        return model;
    });
}

std::string to_json(const DelayModel& model) {
    json doc;
    doc["m"] = model.m;
    doc["r"] = model.r;
    doc["delays"] = model.delays;
    json ws = json::array();
    for (const auto& w : model.weights) ws.push_back(matrix_to_json(w));
    doc["weights"] = std::move(ws);
    doc["cond_M"] = model.cond_M;
    doc["h"] = model.horizon();
    return doc.dump(2) + "\n";
}

DelayModel delay_model_from_json(std::string_view text) {
    const json doc = parse_document(text);
    return with_parse_errors([&] {
        DelayModel model;
        model.m = doc.at("m").get<int>();
        model.r = doc.at("r").get<int>();
        model.delays = doc.at("delays").get<std::vector<double>>();
        for (const auto& w : doc.at("weights")) model.weights.push_back(matrix_from_json(w));
        model.cond_M = doc.at("cond_M").get<double>();
        if (model.delays.size() != static_cast<std::size_t>(model.r) + 1 || model.weights.size() != model.delays.size())
            throw Error(ErrorCode::ParseError, "delay document needs r+1 delays and weights");
        return model;
    });
}

std::string to_json(const FiniteMemoryPredictor& pred) {
    json doc;
    doc["h"] = pred.h;
    doc["m"] = pred.m;
    doc["grid"] = pred.grid;
    doc["coefficients"] = matrix_to_json(pred.coefficients);
    doc["training_residual"] = pred.training_residual;
    doc["target_rms"] = pred.target_rms;
    return doc.dump(2) + "\n";
}

FiniteMemoryPredictor predictor_from_json(std::string_view text) {
    const json doc = parse_document(text);
    return with_parse_errors([&] {
        FiniteMemoryPredictor pred;
        pred.h = doc.at("h").get<double>();
        pred.m = doc.at("m").get<int>();
        pred.grid = doc.at("grid").get<std::vector<double>>();
        pred.coefficients = matrix_from_json(doc.at("coefficients"));
        pred.training_residual = doc.value("training_residual", 0.0);
        pred.target_rms = doc.value("target_rms", 0.0);
        if (pred.coefficients.cols() != static_cast<Eigen::Index>(pred.grid.size()) * pred.m)
            throw Error(ErrorCode::ParseError, "predictor coefficients do not match grid");
        return pred;
    });
}

std::string summary_to_json(const AmbiguityEstimate& est) {
    json doc;
    doc["alpha"] = est.alpha ? json(*est.alpha) : json(nullptr);
    doc["C"] = est.C ? json(*est.C) : json(nullptr);
    doc["fit_r2"] = est.fit_r2 ? json(*est.fit_r2) : json(nullptr);
    doc["verdict"] = verdict_label(est.verdict);
    doc["note"] = est.note;
    return doc.dump(2) + "\n";
}

std::string trajectory_csv(const Trajectory& traj) {
    const bool with_states = !traj.states.empty();
    const auto n = with_states ? traj.states.front().size() : 0;
    const auto m = traj.size() > 0 ? traj.observables.front().size() : 0;
    std::string out = "t";
    for (Eigen::Index i = 1; i <= n; ++i) out += ",u" + std::to_string(i);
    for (Eigen::Index i = 1; i <= m; ++i) out += ",y" + std::to_string(i);
    out += '\n';
    for (std::size_t i = 0; i < traj.size(); ++i) {
        out += format_double(traj.time(i));
        if (with_states)
            for (Eigen::Index k = 0; k < n; ++k) out += "," + format_double(traj.states[i](k));
        for (Eigen::Index k = 0; k < m; ++k) out += "," + format_double(traj.observables[i](k));
        out += '\n';
    }
    return out;
}

std::string probe_csv(const AmbiguityEstimate& est) {
    std::string out = "T,gap,match_residual,valid\n";
    for (std::size_t j = 0; j < est.horizons.size(); ++j) {
        out += format_double(est.horizons[j]) + "," + format_double(est.gaps[j]) + "," +
               format_double(est.match_residuals[j]) + "," + (est.valid[j] ? "1" : "0") + "\n";
    }
    return out;
}

} // namespace obsdyn
