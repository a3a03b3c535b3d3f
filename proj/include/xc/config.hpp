#pragma once

#include <string>
#include <vector>

#include "xc/encoder.hpp"
#include "xc/recdata.hpp"
#include "xc/training.hpp"
#include "xc/xcross.hpp"

namespace xc {

/// Merged run configuration: config file < CLI overrides; every field has
/// a default so an empty config is a valid desk-scale run.
struct RunConfig {
    std::uint64_t seed = 0;      // propagated to gen.seed / train.seed unless set
    GeneratorConfig gen;
    EncoderConfig enc;           // enc.V derived from gen when 0
    TrainingConfig train;
    double beta = 0.5;
    double gamma = 0.4;
    std::size_t n_sources = 2;
    std::size_t integrate_top = 3;  // top-k layers carry integrators

    XCrossConfig xcross_config() const;
    EncoderConfig encoder_config() const;  // with V resolved
};

/// path may be empty (defaults only). Overrides are dotted key=value
/// pairs, e.g. "gen.domains=4" or "train.lr=1e-3".
RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides);

std::string run_config_json(const RunConfig& cfg);

/// Creates the run directory and echoes the effective config into it.
/// Refuses an existing directory unless force is set.
void prepare_run_dir(const std::string& dir, const RunConfig& cfg, bool force);

/// Process exit codes shared by the CLI subcommands.
enum ExitCode : int {
    kOk = 0,
    kConfigError = 2,
    kMissingInput = 3,
    kCheckFailed = 4,
};

}  // namespace xc
