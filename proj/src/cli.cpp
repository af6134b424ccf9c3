#include "hsprior/cli.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "hsprior/corruption.hpp"
#include "hsprior/cube_io.hpp"
#include "hsprior/engine.hpp"
#include "hsprior/error.hpp"
#include "hsprior/metrics.hpp"
#include "hsprior/run_config.hpp"

namespace hsprior {

namespace {

/// Usage problems detected after parsing; reported with exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

struct RestoreFlags {
  std::string input, output, mask, reference, config, history, arch, preview;
  std::size_t iters = 0, sr_factor = 0, progress = 0;
  double lr = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> preview_bands;
  bool history_timing = false;
};

struct CorruptFlags {
  std::string input, output, kind, mask, bands, preview;
  double sigma = 0.0, sigma255 = 0.0;
  std::size_t stripe_count = 0, stripe_width = 1, alpha = 2;
  std::vector<std::size_t> columns;
  std::uint64_t seed = 0;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open config '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
}

void add_restore_options(CLI::App* cmd, RestoreFlags& f) {
  cmd->add_option("--input", f.input, "Corrupted cube");
  cmd->add_option("--output", f.output, "Restored cube");
  cmd->add_option("--mask", f.mask, "Mask cube (inpaint only)");
  cmd->add_option("--reference", f.reference, "Clean cube for quality metrics");
  cmd->add_option("--config", f.config, "key = value run configuration");
  cmd->add_option("--iters", f.iters, "Iteration budget");
  cmd->add_option("--lr", f.lr, "ADAM learning rate");
  cmd->add_option("--seed", f.seed, "Master seed");
  cmd->add_option("--arch", f.arch, "Network variant")->check(CLI::IsMember({"2d", "3d"}));
  cmd->add_option("--sr-factor", f.sr_factor, "Spatial upscaling factor (sr only)");
  cmd->add_option("--history", f.history, "Write the per-iteration history as CSV");
  cmd->add_flag("--history-timing", f.history_timing, "Include wall-clock millis in the history");
  cmd->add_option("--preview", f.preview, "Write a false-color PPM of the result");
  cmd->add_option("--preview-bands", f.preview_bands, "Three bands for the preview")->delimiter(',')->expected(3);
  cmd->add_option("--progress", f.progress, "Report every N iterations on stderr");
}

std::array<std::size_t, 3> default_preview_bands(std::size_t bands) {
  return {bands * 3 / 4, bands / 2, bands / 4};
}

int run_restore(Task task, CLI::App* cmd, const RestoreFlags& f, std::ostream& out, std::ostream& err) {
  RunConfig config;
  config.job = TaskConfig::defaults(task);
  if (!f.config.empty()) {
    const std::string text = slurp(f.config);
    try {
      config = parse_run_config(text, std::move(config));
    } catch (const ConfigError& e) {
      throw UsageError(f.config + ": " + e.what());
    }
  }

  if (cmd->count("--arch") > 0) {
    const Variant variant = parse_variant(f.arch);
    if (variant != config.job.arch.variant) config.job.arch = ArchSpec::defaults(variant);
  }
  if (cmd->count("--input") > 0) config.input = f.input;
  if (cmd->count("--output") > 0) config.output = f.output;
  if (cmd->count("--mask") > 0) config.mask = f.mask;
  if (cmd->count("--reference") > 0) config.reference = f.reference;
  if (cmd->count("--history") > 0) config.history = f.history;
  if (f.history_timing) config.history_timing = true;
  if (cmd->count("--preview") > 0) config.preview = f.preview;
  if (cmd->count("--preview-bands") > 0) {
    std::copy(f.preview_bands.begin(), f.preview_bands.end(), config.preview_bands.begin());
    config.preview_bands_set = true;
  }
  if (cmd->count("--iters") > 0) config.job.iters = f.iters;
  if (cmd->count("--lr") > 0) config.job.adam.lr = f.lr;
  if (cmd->count("--seed") > 0) config.job.seed = f.seed;
  if (cmd->count("--sr-factor") > 0) {
    if (task != Task::superres) throw UsageError("--sr-factor is only accepted by sr");
    config.job.sr_factor = f.sr_factor;
  }
  try {
    validate_run_config(config);
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }

  const LoadedCube observed = read_cube(config.input);
  std::optional<Mask> mask;
  if (task == Task::inpaint) mask = read_mask(config.mask);
  std::optional<HyperCube> reference;
  if (!config.reference.empty()) reference = read_cube(config.reference).cube;

  ProgressFn progress;
  if (f.progress > 0) {
    progress = [&err, every = f.progress](std::size_t it, double energy) {
      if (it % every == 0) err << "iteration " << it << " energy " << energy << '\n';
    };
  }
  const RestoreResult result = restore(config.job, observed.cube, mask ? &*mask : nullptr,
                                       reference ? &*reference : nullptr, progress);

  write_cube(config.output, result.restored, observed.range);
  if (!config.history.empty()) write_text(config.history, history_csv(result.history, config.history_timing));
  if (!config.preview.empty()) {
    const auto bands =
        config.preview_bands_set ? config.preview_bands : default_preview_bands(result.restored.bands());
    export_falsecolor(result.restored, bands, config.preview);
  }
  out << "best energy " << result.history.energy[result.history.best_iteration] << " at iteration "
      << result.history.best_iteration << " of " << result.history.size() << '\n';
  if (reference) out << format_report(evaluate_metrics(result.restored, *reference));
  return 0;
}

BandRange parse_band_range(const std::string& text, std::size_t bands) {
  if (text.empty()) return {0, bands};
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw UsageError("--bands expects first:last, got '" + text + "'");
  try {
    return {std::stoul(text.substr(0, colon)), std::stoul(text.substr(colon + 1))};
  } catch (const std::exception&) {
    throw UsageError("--bands expects first:last, got '" + text + "'");
  }
}

int run_corrupt(CLI::App* cmd, const CorruptFlags& f, std::ostream& out) {
  if (f.input.empty() || f.output.empty()) throw UsageError("corrupt needs --input and --output");
  const LoadedCube loaded = read_cube(f.input);
  const HyperCube& x = loaded.cube;
  HyperCube corrupted;
  if (f.kind == "noise") {
    if (cmd->count("--sigma") > 0 && cmd->count("--sigma255") > 0) {
      throw UsageError("give either --sigma or --sigma255, not both");
    }
    const double sigma = cmd->count("--sigma255") > 0 ? sigma_from_8bit(f.sigma255) : f.sigma;
    corrupted = add_gaussian_noise(x, sigma, f.seed);
  } else if (f.kind == "stripes") {
    if (f.mask.empty()) throw UsageError("stripes need --mask for the mask output path");
    const BandRange range = parse_band_range(f.bands, x.bands());
    const Mask m = cmd->count("--columns") > 0
                       ? make_stripe_mask(x.rows(), x.cols(), x.bands(), f.columns, f.stripe_width, range)
                       : make_stripe_mask(x.rows(), x.cols(), x.bands(), f.stripe_count, f.stripe_width, range, f.seed);
    corrupted = apply_mask(x, m);
    write_mask(f.mask, m);
    out << "masked " << x.size() - m.observed_count() << " of " << x.size() << " values\n";
  } else if (f.kind == "downsample") {
    corrupted = downsample_observation(x, f.alpha);
  } else {
    throw UsageError("--kind must be noise, stripes or downsample");
  }
  write_cube(f.output, corrupted, loaded.range);
  if (!f.preview.empty()) export_falsecolor(corrupted, default_preview_bands(corrupted.bands()), f.preview);
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Single-image hyperspectral restoration with an untrained convolutional prior", "hsprior"};
  app.require_subcommand(1);

  RestoreFlags denoise_flags, inpaint_flags, sr_flags;
  CLI::App* denoise = app.add_subcommand("denoise", "Remove noise from a cube");
  CLI::App* inpaint = app.add_subcommand("inpaint", "Fill masked-out values of a cube");
  CLI::App* sr = app.add_subcommand("sr", "Spatially upscale a cube");
  add_restore_options(denoise, denoise_flags);
  add_restore_options(inpaint, inpaint_flags);
  add_restore_options(sr, sr_flags);

  std::string metric_input, metric_reference, metric_csv;
  CLI::App* metrics = app.add_subcommand("metrics", "Compare a cube with a reference");
  metrics->add_option("--input", metric_input, "Cube to score")->required();
  metrics->add_option("--reference", metric_reference, "Reference cube")->required();
  metrics->add_option("--csv", metric_csv, "Also write the report as CSV");

  CorruptFlags cf;
  CLI::App* corrupt = app.add_subcommand("corrupt", "Synthesize a degraded observation");
  corrupt->add_option("--input", cf.input, "Clean cube");
  corrupt->add_option("--output", cf.output, "Corrupted cube");
  corrupt->add_option("--kind", cf.kind, "noise, stripes or downsample")->required();
  corrupt->add_option("--sigma", cf.sigma, "Noise standard deviation on the [0,1] scale");
  corrupt->add_option("--sigma255", cf.sigma255, "Noise standard deviation on the 0-255 scale");
  corrupt->add_option("--stripe-count", cf.stripe_count, "Number of random stripes");
  corrupt->add_option("--stripe-width", cf.stripe_width, "Stripe width in columns");
  corrupt->add_option("--columns", cf.columns, "Explicit stripe start columns")->delimiter(',');
  corrupt->add_option("--bands", cf.bands, "Affected bands first:last (half-open)");
  corrupt->add_option("--mask", cf.mask, "Where to write the stripe mask");
  corrupt->add_option("--alpha", cf.alpha, "Downsampling factor");
  corrupt->add_option("--seed", cf.seed, "Seed");
  corrupt->add_option("--preview", cf.preview, "Write a false-color PPM of the result");

  std::vector<std::string> argv_storage{"hsprior"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (std::string& a : argv_storage) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (denoise->parsed()) return run_restore(Task::denoise, denoise, denoise_flags, out, err);
    if (inpaint->parsed()) return run_restore(Task::inpaint, inpaint, inpaint_flags, out, err);
    if (sr->parsed()) return run_restore(Task::superres, sr, sr_flags, out, err);
    if (metrics->parsed()) {
      const HyperCube x = read_cube(metric_input).cube;
      const HyperCube ref = read_cube(metric_reference).cube;
      const MetricReport report = evaluate_metrics(x, ref);
      out << format_report(report);
      if (!metric_csv.empty()) write_text(metric_csv, format_report_csv(report));
      return 0;
    }
    if (corrupt->parsed()) return run_corrupt(corrupt, cf, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace hsprior
