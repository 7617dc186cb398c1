#pragma once

#include <map>
#include <string>
#include <vector>

#include "obsdyn/ode_engine.hpp"

namespace obsdyn {

using ParameterMap = std::map<std::string, double>;

struct RegistryEntry {
    std::string name;
    std::string description;
    ParameterMap defaults;
    bool linear = false;  // vector field and observable are both linear
};

/// Built-in systems, addressable by name from experiment configs:
///   linear2d     damped oscillator, y = u1 (linear)
///   decoupled2d  u1' = -a u1, u2' = -c u2, y = u1 (observable already closed)
///   contract2d   u1' = -u1 + eps sin(u2), u2' = -u2 + eps u1^2, y = u1
///   normsq2d     linear rotation-with-decay observed through y = |u|^2
///   maxnorm2d    same flow observed through y = max_k |u_k| (non-smooth)
///   constant2d   contract2d flow with the constant observable y = 1
[[nodiscard]] const std::vector<RegistryEntry>& registry_entries();

/// Instantiates a registry system. Unknown names or parameter keys throw
/// Error(ConfigError).
[[nodiscard]] NonlinearSystem make_registry_system(const std::string& name, const ParameterMap& params = {});

[[nodiscard]] bool is_linear_registry_system(const std::string& name);

} // namespace obsdyn
