#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace affectrep::cli {

// Exit codes, one per failure class.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRepresentation = 3;
inline constexpr int kExitTraining = 4;
inline constexpr int kExitReporting = 5;

struct CommonOptions {
    std::optional<unsigned long long> seed;
    unsigned jobs = 1;
};

int cmd_synth(const std::filesystem::path& config, const std::filesystem::path& out, const CommonOptions& opts);
int cmd_represent(const std::filesystem::path& manifest, const std::string& tag, const std::filesystem::path& out,
                  const CommonOptions& opts);
/// `target` is "mu", "sigma" or "both".
int cmd_train_eval(const std::filesystem::path& manifest, const std::string& tag, const std::string& target,
                   const std::filesystem::path& out, const CommonOptions& opts);
int cmd_report(const std::vector<std::filesystem::path>& result_dirs, const std::filesystem::path& out);

/// Entry point shared by the executable and the tests.
int run(int argc, char** argv);

}  // namespace affectrep::cli
