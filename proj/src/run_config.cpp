#include "hsprior/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <locale>
#include <map>
#include <sstream>
#include <vector>

#include "hsprior/error.hpp"

namespace hsprior {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::uint64_t to_unsigned(const std::string& key, const std::string& text) {
  std::uint64_t value = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + text + "'");
  }
  return value;
}

double to_real(const std::string& key, const std::string& text) {
  std::istringstream in(text);
  in.imbue(std::locale::classic());
  double value = 0.0;
  in >> value;
  if (in.fail() || !in.eof() || !std::isfinite(value)) {
    throw ConfigError(key + ": expected a number, got '" + text + "'");
  }
  return value;
}

bool to_bool(const std::string& key, const std::string& text) {
  if (text == "1" || text == "true" || text == "yes" || text == "on") return true;
  if (text == "0" || text == "false" || text == "no" || text == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + text + "'");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::size_t end = comma == std::string::npos ? text.size() : comma;
    parts.push_back(trim(std::string_view(text).substr(start, end - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return parts;
}

const std::vector<std::string_view> kKeys = {
    "task",        "input",          "output",        "mask",       "reference",       "history",
    "history_timing", "preview",     "preview_bands", "arch",       "levels",          "channels",
    "kernel_size", "skip",           "skip_channels", "upsample",   "leaky_slope",     "spectral_downsampling",
    "iters",       "lr",             "beta1",         "beta2",      "eps",             "seed",
    "input_noise", "perturb_sigma",  "sr_factor",     "stop",       "patience_window", "patience_min_delta",
};

}  // namespace

Task parse_task(std::string_view name) {
  if (name == "denoise") return Task::denoise;
  if (name == "inpaint") return Task::inpaint;
  if (name == "superres" || name == "sr") return Task::superres;
  throw ConfigError("unknown task '" + std::string(name) + "'");
}

Variant parse_variant(std::string_view name) {
  if (name == "2d") return Variant::conv2d;
  if (name == "3d") return Variant::conv3d;
  throw ConfigError("arch must be 2d or 3d, got '" + std::string(name) + "'");
}

RunConfig parse_run_config(std::string_view text, RunConfig base) {
  std::map<std::string, std::string> entries;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end()) {
      throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    if (entries.contains(key)) throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    entries[key] = trim(line.substr(eq + 1));
  }

  RunConfig out = std::move(base);
  TaskConfig& job = out.job;
  const auto take = [&](const char* key) -> const std::string* {
    const auto it = entries.find(key);
    return it == entries.end() ? nullptr : &it->second;
  };

  if (const auto* v = take("task"); v && parse_task(*v) != job.task) {
    throw ConfigError("task: config says '" + *v + "' but the command runs " + task_name(job.task));
  }
  // The variant picks the default widths, so it is applied before the rest.
  if (const auto* v = take("arch")) {
    const Variant variant = parse_variant(*v);
    if (variant != job.arch.variant) {
      const CubeShape shape = job.arch.input_shape;
      job.arch = ArchSpec::defaults(variant, shape);
    }
  }
  if (const auto* v = take("levels")) {
    job.arch.levels = to_unsigned("levels", *v);
    job.arch.skip.assign(job.arch.levels, true);
  }
  if (const auto* v = take("channels")) {
    job.arch.channels.clear();
    for (const std::string& part : split_list(*v)) job.arch.channels.push_back(to_unsigned("channels", part));
  }
  if (const auto* v = take("skip")) {
    const auto parts = split_list(*v);
    job.arch.skip.clear();
    if (parts.size() == 1) {
      job.arch.skip.assign(job.arch.levels, to_bool("skip", parts[0]));
    } else {
      for (const std::string& part : parts) job.arch.skip.push_back(to_bool("skip", part));
    }
  }
  if (const auto* v = take("kernel_size")) job.arch.kernel_size = to_unsigned("kernel_size", *v);
  if (const auto* v = take("skip_channels")) job.arch.skip_channels = to_unsigned("skip_channels", *v);
  if (const auto* v = take("upsample")) {
    if (*v == "nearest") {
      job.arch.upsample_mode = UpsampleMode::nearest;
    } else if (*v == "linear" || *v == "bilinear" || *v == "trilinear") {
      job.arch.upsample_mode = UpsampleMode::linear;
    } else {
      throw ConfigError("upsample must be nearest or linear, got '" + *v + "'");
    }
  }
  if (const auto* v = take("leaky_slope")) job.arch.leaky_slope = to_real("leaky_slope", *v);
  if (const auto* v = take("spectral_downsampling")) {
    if (*v == "adaptive") {
      job.arch.spectral_downsampling = SpectralDownsampling::adaptive;
    } else if (*v == "always") {
      job.arch.spectral_downsampling = SpectralDownsampling::always;
    } else if (*v == "never") {
      job.arch.spectral_downsampling = SpectralDownsampling::never;
    } else {
      throw ConfigError("spectral_downsampling must be adaptive, always or never, got '" + *v + "'");
    }
  }
  if (const auto* v = take("iters")) job.iters = to_unsigned("iters", *v);
  if (const auto* v = take("lr")) job.adam.lr = to_real("lr", *v);
  if (const auto* v = take("beta1")) job.adam.beta1 = to_real("beta1", *v);
  if (const auto* v = take("beta2")) job.adam.beta2 = to_real("beta2", *v);
  if (const auto* v = take("eps")) job.adam.eps = to_real("eps", *v);
  if (const auto* v = take("seed")) job.seed = to_unsigned("seed", *v);
  if (const auto* v = take("input_noise")) job.input_noise_range = to_real("input_noise", *v);
  if (const auto* v = take("perturb_sigma")) job.perturb_sigma = to_real("perturb_sigma", *v);
  if (const auto* v = take("sr_factor")) job.sr_factor = to_unsigned("sr_factor", *v);
  if (const auto* v = take("stop")) {
    if (*v == "fixed") {
      job.stop.kind = StopPolicy::Kind::fixed_iters;
    } else if (*v == "patience") {
      job.stop.kind = StopPolicy::Kind::patience;
    } else {
      throw ConfigError("stop must be fixed or patience, got '" + *v + "'");
    }
  }
  if (const auto* v = take("patience_window")) job.stop.window = to_unsigned("patience_window", *v);
  if (const auto* v = take("patience_min_delta")) job.stop.min_delta = to_real("patience_min_delta", *v);

  if (const auto* v = take("input")) out.input = *v;
  if (const auto* v = take("output")) out.output = *v;
  if (const auto* v = take("mask")) out.mask = *v;
  if (const auto* v = take("reference")) out.reference = *v;
  if (const auto* v = take("history")) out.history = *v;
  if (const auto* v = take("history_timing")) out.history_timing = to_bool("history_timing", *v);
  if (const auto* v = take("preview")) out.preview = *v;
  if (const auto* v = take("preview_bands")) {
    const auto parts = split_list(*v);
    if (parts.size() != 3) throw ConfigError("preview_bands: expected three band indices");
    for (int i = 0; i < 3; ++i) out.preview_bands[i] = to_unsigned("preview_bands", parts[i]);
    out.preview_bands_set = true;
  }
  return out;
}

void validate_run_config(const RunConfig& config) {
  if (config.input.empty()) throw ConfigError("missing input path (--input or 'input =')");
  if (config.output.empty()) throw ConfigError("missing output path (--output or 'output =')");
  const Task task = config.job.task;
  if (task == Task::inpaint && config.mask.empty()) throw ConfigError("inpaint needs a mask (--mask or 'mask =')");
  if (task != Task::inpaint && !config.mask.empty()) {
    throw ConfigError(std::string("a mask is only accepted for inpaint, not ") + task_name(task));
  }
  config.job.validate();
}

}  // namespace hsprior
