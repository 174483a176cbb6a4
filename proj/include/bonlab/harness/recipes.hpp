#pragma once

#include <filesystem>
#include <string>

#include "bonlab/harness/config.hpp"
#include "bonlab/harness/manifest.hpp"

namespace bonlab::harness {

/// Runs `config.command`, writing its outputs plus config.json and
/// manifest.json into `out_dir` (created if missing). Every output except
/// manifest.json is a pure function of the effective configuration.
RunManifest run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                           const std::string& tool_version);

}  // namespace bonlab::harness
