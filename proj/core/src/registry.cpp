#include "obsdyn/registry.hpp"

#include <algorithm>
#include <cmath>

#include "obsdyn/errors.hpp"

namespace obsdyn {
namespace {

Box unit_box(int n, double half_width) {
    return Box{Vector::Constant(n, -half_width), Vector::Constant(n, half_width)};
}

ParameterMap resolve(const RegistryEntry& entry, const ParameterMap& params) {
    ParameterMap out = entry.defaults;
    for (const auto& [key, value] : params) {
        if (!out.contains(key))
            throw Error(ErrorCode::ConfigError, "system '" + entry.name + "' has no parameter '" + key + "'");
        if (!std::isfinite(value))
            throw Error(ErrorCode::ConfigError, "parameter '" + key + "' must be finite");
        out[key] = value;
    }
    return out;
}

NonlinearSystem make_linear2d(const ParameterMap& p) {
    const double omega = p.at("omega");
    const double zeta = p.at("zeta");
    Matrix a(2, 2);
    a << 0.0, 1.0, -omega * omega, -2.0 * zeta * omega;
    Matrix b(1, 2);
    b << 1.0, 0.0;
    return as_nonlinear(LinearObservableSystem(a, b), unit_box(2, p.at("box")), "linear2d");
}

NonlinearSystem make_decoupled2d(const ParameterMap& p) {
    Matrix a(2, 2);
    a << -p.at("a"), 0.0, 0.0, -p.at("c");
    Matrix b(1, 2);
    b << 1.0, 0.0;
    return as_nonlinear(LinearObservableSystem(a, b), unit_box(2, p.at("box")), "decoupled2d");
}

std::function<Vector(const Vector&)> contract_field(double eps) {
    return [eps](const Vector& u) -> Vector {
        Vector du(2);
        du(0) = -u(0) + eps * std::sin(u(1));
        du(1) = -u(1) + eps * u(0) * u(0);
        return du;
    };
}

NonlinearSystem make_contract2d(const ParameterMap& p) {
    NonlinearSystem sys;
    sys.name = "contract2d";
    sys.n = 2;
    sys.m = 1;
    sys.field = contract_field(p.at("epsilon"));
    sys.observable = [](const Vector& u) -> Vector { return u.head(1); };
    sys.jacobian = [](const Vector&) -> Matrix {
        Matrix db(1, 2);
        db << 1.0, 0.0;
        return db;
    };
    sys.region = unit_box(2, p.at("box"));
    return sys;
}

std::function<Vector(const Vector&)> spiral_field(double decay) {
    return [decay](const Vector& u) -> Vector {
        Vector du(2);
        du(0) = -decay * u(0) + u(1);
        du(1) = -u(0) - decay * u(1);
        return du;
    };
}

NonlinearSystem make_normsq2d(const ParameterMap& p) {
    NonlinearSystem sys;
    sys.name = "normsq2d";
    sys.n = 2;
    sys.m = 1;
    sys.field = spiral_field(p.at("decay"));
    sys.observable = [](const Vector& u) -> Vector { return Vector::Constant(1, u.squaredNorm()); };
    sys.jacobian = [](const Vector& u) -> Matrix { return 2.0 * u.transpose(); };
    sys.region = unit_box(2, p.at("box"));
    return sys;
}

NonlinearSystem make_maxnorm2d(const ParameterMap& p) {
    NonlinearSystem sys;
    sys.name = "maxnorm2d";
    sys.n = 2;
    sys.m = 1;
    sys.field = spiral_field(p.at("decay"));
    sys.observable = [](const Vector& u) -> Vector { return Vector::Constant(1, u.cwiseAbs().maxCoeff()); };
    sys.smooth_observable = false;
    sys.region = unit_box(2, p.at("box"));
    return sys;
}

NonlinearSystem make_constant2d(const ParameterMap& p) {
    NonlinearSystem sys;
    sys.name = "constant2d";
    sys.n = 2;
    sys.m = 1;
    sys.field = contract_field(p.at("epsilon"));
    sys.observable = [](const Vector&) -> Vector { return Vector::Ones(1); };
    sys.region = unit_box(2, p.at("box"));
    return sys;
}

} // namespace

const std::vector<RegistryEntry>& registry_entries() {
    static const std::vector<RegistryEntry> entries = {
        {"linear2d", "damped oscillator u1' = u2, u2' = -omega^2 u1 - 2 zeta omega u2; y = u1",
         {{"omega", 1.0}, {"zeta", 0.25}, {"box", 1.0}}, true},
        {"decoupled2d", "u1' = -a u1, u2' = -c u2; y = u1", {{"a", 1.0}, {"c", 2.0}, {"box", 1.0}}, true},
        {"contract2d", "u1' = -u1 + eps sin(u2), u2' = -u2 + eps u1^2; y = u1",
         {{"epsilon", 0.5}, {"box", 1.0}}, false},
        {"normsq2d", "u' = [[-d, 1], [-1, -d]] u; y = |u|^2", {{"decay", 0.1}, {"box", 1.0}}, false},
        {"maxnorm2d", "u' = [[-d, 1], [-1, -d]] u; y = max_k |u_k|", {{"decay", 0.1}, {"box", 1.0}}, false},
        {"constant2d", "contract2d flow; y = 1", {{"epsilon", 0.5}, {"box", 1.0}}, false},
    };
    return entries;
}

bool is_linear_registry_system(const std::string& name) {
    const auto& entries = registry_entries();
    const auto it = std::find_if(entries.begin(), entries.end(), [&](const auto& e) { return e.name == name; });
    return it != entries.end() && it->linear;
}

NonlinearSystem make_registry_system(const std::string& name, const ParameterMap& params) {
    const auto& entries = registry_entries();
    const auto it = std::find_if(entries.begin(), entries.end(), [&](const auto& e) { return e.name == name; });
    if (it == entries.end()) throw Error(ErrorCode::ConfigError, "unknown registry system '" + name + "'");
    const ParameterMap p = resolve(*it, params);
    if (!(p.at("box") > 0.0)) throw Error(ErrorCode::ConfigError, "box half-width must be positive");
    if (name == "linear2d") return make_linear2d(p);
    if (name == "decoupled2d") return make_decoupled2d(p);
    if (name == "contract2d") return make_contract2d(p);
    if (name == "normsq2d") return make_normsq2d(p);
    if (name == "maxnorm2d") return make_maxnorm2d(p);
    return make_constant2d(p);
}

} // namespace obsdyn
