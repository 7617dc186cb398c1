#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include <obsdyn/errors.hpp>

#include "config.hpp"

namespace obsdyn::cli {

enum ExitCode : int {
    kSuccess = 0,
    kInvariantFailure = 1,
    kInputError = 2,
};

/// Writes files into one output directory. Every file goes through a
/// temporary sibling and a rename, so readers never see partial output.
class OutputDir {
public:
    OutputDir(std::filesystem::path dir, const ExperimentConfig& config);

    /// CSV with '#' provenance lines ahead of the header row.
    void write_csv(const std::string& name, const std::string& table) const;
    void write_text(const std::string& name, const std::string& content) const;

    [[nodiscard]] const std::string& provenance() const noexcept { return provenance_; }
    [[nodiscard]] const std::filesystem::path& path() const noexcept { return dir_; }

private:
    std::filesystem::path dir_;
    std::string provenance_;
};

void write_atomic(const std::filesystem::path& path, const std::string& content);

int cmd_closure(const ExperimentConfig& config, std::ostream& out);
int cmd_delays(const ExperimentConfig& config, std::ostream& out);
int cmd_da_probe(const ExperimentConfig& config, std::ostream& out);
int cmd_fml_fit(const ExperimentConfig& config, std::ostream& out);

/// Exit code for a library error: 2 for bad input, 1 for numerical failures.
[[nodiscard]] int exit_code_for(ErrorCode code) noexcept;

} // namespace obsdyn::cli
