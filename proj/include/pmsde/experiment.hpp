#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace pmsde {

/// One experiment = one subcommand + one config document + one output
/// directory. Returns a process exit code: 0 success, 2 validation error,
/// 3 numerical failure.
struct ExperimentOptions {
    std::string command;
    std::filesystem::path config_path;
    std::filesystem::path out_dir = "out";
    std::optional<std::uint64_t> seed_override;
    int workers = 0;
};

int run_experiment(const ExperimentOptions& options);

} // namespace pmsde
