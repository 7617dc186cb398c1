#include <exception>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <obsdyn/errors.hpp>

#include "commands.hpp"
#include "config.hpp"

namespace {

using namespace obsdyn;
using namespace obsdyn::cli;

struct Invocation {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::vector<double> list;  // --delays / --horizons / --h-list
};

CLI::App* add_command(CLI::App& app, const std::string& name, const std::string& help, Invocation& inv) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", inv.config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", inv.seed, "override the config seed");
    sub->add_option("--out", inv.out, "override the output directory");
    return sub;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"obsdyn: closures, delay representations and ambiguity probes for observable dynamics"};
    app.require_subcommand(1);
    Invocation inv;

    auto* closure = add_command(app, "closure", "minimal-order closure of a linear observable system", inv);
    auto* delays = add_command(app, "delays", "discrete delay representation with closed-loop verification", inv);
    delays->add_option("--delays", inv.list, "explicit delays, comma separated")->delimiter(',');
    auto* probe = add_command(app, "da-probe", "matched-history derivative gaps and decay fit", inv);
    probe->add_option("--horizons", inv.list, "history lengths T, comma separated")->delimiter(',');
    auto* fml = add_command(app, "fml-fit", "finite-memory predictor residuals over h", inv);
    fml->add_option("--h-list", inv.list, "memory lengths h, comma separated")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kSuccess : kInputError;
    }

    try {
        ExperimentConfig cfg = load_config(inv.config_path);
        if (inv.seed) cfg.seed = *inv.seed;
        if (inv.out) cfg.output = *inv.out;

        std::function<int(const ExperimentConfig&, std::ostream&)> run;
        if (closure->parsed()) {
            run = cmd_closure;
        } else if (delays->parsed()) {
            if (!inv.list.empty()) cfg.delays.delays = inv.list;
            run = cmd_delays;
        } else if (probe->parsed()) {
            if (!inv.list.empty()) cfg.probe.horizons = inv.list;
            run = cmd_da_probe;
        } else {
            if (!inv.list.empty()) cfg.fml.h_list = inv.list;
            run = cmd_fml_fit;
        }
        return run(cfg, std::cout);
    } catch (const Error& e) {
        std::cerr << "obsdyn: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "obsdyn: " << e.what() << "\n";
        return kInvariantFailure;
    }
}
