#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "hsprior/engine.hpp"

namespace hsprior {

/// Everything one CLI restoration run needs: the job plus file paths.
struct RunConfig {
  TaskConfig job;
  std::string input;
  std::string output;
  std::string mask;
  std::string reference;
  std::string history;
  bool history_timing = false;
  std::string preview;
  std::array<std::size_t, 3> preview_bands{0, 0, 0};
  bool preview_bands_set = false;
};

/// Applies `key = value` lines (blank lines and `#` comments ignored) on top of
/// `base`. Unknown keys, malformed values and a `task` that disagrees with
/// base.job.task raise ConfigError.
RunConfig parse_run_config(std::string_view text, RunConfig base);

/// Checks paths and task-specific fields after config and flags are merged:
/// input and output are set, mask is set exactly for inpainting and
/// sr_factor exactly for superres.
void validate_run_config(const RunConfig& config);

Task parse_task(std::string_view name);
Variant parse_variant(std::string_view name);

}  // namespace hsprior
