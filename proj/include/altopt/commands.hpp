#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace altopt {

enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,
    kExitUsage = 2,      // bad flags, malformed config, refused overwrite
    kExitDiverged = 3,   // every evaluated point diverged
};

inline constexpr const char* kOutputRootEnv = "ALTOPT_OUTPUT_ROOT";

struct RunManifest {
    std::string command;
    std::filesystem::path config_path;
    std::filesystem::path output_dir;
    std::optional<std::uint64_t> seed;
    unsigned parallelism = 1;
    bool overwrite = false;
};

/// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int cmd_tune(const RunManifest& manifest, std::ostream& out);
int cmd_trial(const RunManifest& manifest, std::ostream& out);
int cmd_robustness(const RunManifest& manifest, std::ostream& out);
int cmd_scan(const RunManifest& manifest, std::ostream& out);
int cmd_train_toy(const RunManifest& manifest, std::ostream& out);

}  // namespace altopt
