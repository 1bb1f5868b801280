#pragma once

#include <memory>
#include <string>

#include "maxmin/formation_env.hpp"
#include "maxmin/harness.hpp"

namespace maxmin {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct LoadedExperiment {
  ExperimentConfig config;
  std::unique_ptr<FormationEnvironment> environment;
};

/// Parses and validates an experiment config (JSON, sections per module).
/// Errors carry the file, line and JSON path of the offending entry.
LoadedExperiment load_experiment_file(const std::string& path);
LoadedExperiment load_experiment_text(const std::string& text,
                                      const std::string& origin = "<string>");

/// The documented schema, printable via the CLI.
std::string config_schema_help();

}  // namespace maxmin
