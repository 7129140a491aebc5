#include "modalkit/cli.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "modalkit/bandwidth.hpp"
#include "modalkit/csv.hpp"
#include "modalkit/datagen.hpp"
#include "modalkit/metrics.hpp"
#include "modalkit/modes.hpp"
#include "modalkit/rng.hpp"
#include "modalkit/serialize.hpp"
#include "modalkit/uncertainty.hpp"

namespace modalkit::cli {

namespace {

struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class LogLevel { off = 0, error = 1, warn = 2, info = 3, debug = 4 };

LogLevel g_log_level = LogLevel::warn;

void init_log_level() {
  const char* env = std::getenv("MODALKIT_LOG");
  if (env == nullptr) return;
  const std::string value = env;
  if (value == "off") g_log_level = LogLevel::off;
  else if (value == "error") g_log_level = LogLevel::error;
  else if (value == "warn") g_log_level = LogLevel::warn;
  else if (value == "info") g_log_level = LogLevel::info;
  else if (value == "debug") g_log_level = LogLevel::debug;
  else std::fprintf(stderr, "modalkit: ignoring unknown MODALKIT_LOG=%s\n", env);
}

void log(LogLevel level, const std::string& message) {
  if (static_cast<int>(level) > static_cast<int>(g_log_level)) return;
  std::fprintf(stderr, "modalkit: %s\n", message.c_str());
}

struct Options {
  std::string input;
  std::string output;
  std::string format = "json";
  std::string variant = "standard";
  std::string kernel_x = "gaussian";
  std::string kernel_y = "gaussian";
  double h1 = std::numeric_limits<double>::quiet_NaN();
  double h2 = std::numeric_limits<double>::quiet_NaN();
  std::string bw_method = "fixed";
  std::string grid_spec;
  double level = 0.9;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string error_dist = "laplace";
  double error_scale = std::numeric_limits<double>::quiet_NaN();
  bool unimodal = false;
  // bandwidth selection
  std::string h1_grid;
  std::string h2_grid;
  int folds = 5;
  int replicates = 20;
  int n_boot = 50;
  // band
  std::string band_type = "prediction";
  std::string holdout;
  // simulate
  std::string fixture = "three-branch";
  std::string mixture_file;
  int n = 500;
  double censor_rate = std::numeric_limits<double>::quiet_NaN();
  std::string truth_output;
  // eval
  std::string truth;
};

std::vector<double> parse_linear_grid(const std::string& spec) {
  double lo = 0.0, hi = 0.0;
  int count = 0;
  if (std::sscanf(spec.c_str(), "%lf:%lf:%d", &lo, &hi, &count) != 3 ||
      count < 1 || !(hi >= lo)) {
    throw config_error("bad grid spec '" + spec + "', expected min:max:count");
  }
  std::vector<double> grid(static_cast<std::size_t>(count));
  if (count == 1) {
    grid[0] = 0.5 * (lo + hi);
    return grid;
  }
  for (int i = 0; i < count; ++i) {
    grid[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (count - 1);
  }
  return grid;
}

std::vector<double> parse_log_grid(const std::string& spec) {
  double lo = 0.0, hi = 0.0;
  int count = 0;
  if (std::sscanf(spec.c_str(), "%lf:%lf:%d", &lo, &hi, &count) != 3) {
    throw config_error("bad candidate spec '" + spec + "', expected lo:hi:count");
  }
  try {
    return bandwidth::log_spaced(lo, hi, count);
  } catch (const std::invalid_argument& e) {
    throw config_error(e.what());
  }
}

std::vector<double> default_grid(std::span<const double> covariates) {
  const auto [mn, mx] = std::minmax_element(covariates.begin(), covariates.end());
  const double range = *mx - *mn;
  if (!(range > 0.0)) {
    throw config_error("covariates carry no spread; pass --grid explicitly");
  }
  const double lo = *mn + 0.025 * range;
  const double hi = *mx - 0.025 * range;
  std::vector<double> grid(50);
  for (int i = 0; i < 50; ++i) {
    grid[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / 49.0;
  }
  return grid;
}

kernels::Kernel parse_kernel(const std::string& name) {
  try {
    return kernels::Kernel(kernels::kernel_family_from_name(name));
  } catch (const std::invalid_argument& e) {
    throw config_error(e.what());
  }
}

kernels::ErrorDistribution parse_error_dist(const Options& opt) {
  if (std::isnan(opt.error_scale)) {
    throw config_error("--error-scale is required for the deconvolution variant");
  }
  if (!(opt.error_scale > 0.0)) {
    throw config_error("--error-scale must be positive");
  }
  try {
    return kernels::ErrorDistribution(
        kernels::error_family_from_name(opt.error_dist), opt.error_scale);
  } catch (const std::invalid_argument& e) {
    throw config_error(e.what());
  }
}

void write_output(const Options& opt, const std::string& content) {
  if (opt.output.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream out(opt.output);
  if (!out) {
    throw io::data_error("cannot open output file: " + opt.output);
  }
  out << content;
  if (!out) {
    throw io::data_error("failed to write output file: " + opt.output);
  }
}

bandwidth::CvConfig make_cv_config(const Options& opt,
                                   const density::Sample* sample,
                                   std::span<const double> responses) {
  bandwidth::CvConfig cfg;
  cfg.kernel_x = parse_kernel(opt.kernel_x);
  cfg.kernel_y = parse_kernel(opt.kernel_y);
  if (!opt.h1_grid.empty()) {
    cfg.h1_candidates = parse_log_grid(opt.h1_grid);
  } else if (sample != nullptr) {
    const double c = bandwidth::silverman_rule(sample->x);
    cfg.h1_candidates = bandwidth::log_spaced(c / 4.0, c * 4.0, 9);
  } else {
    const double c = bandwidth::silverman_rule(responses) * 0.5;
    cfg.h1_candidates = bandwidth::log_spaced(c / 6.0, c * 3.0, 15);
  }
  if (!opt.h2_grid.empty()) {
    cfg.h2_candidates = parse_log_grid(opt.h2_grid);
  } else {
    const double c = bandwidth::silverman_rule(responses);
    cfg.h2_candidates = bandwidth::log_spaced(c / 4.0, c * 4.0, 9);
  }
  return cfg;
}

// fit ------------------------------------------------------------------

int run_fit(const Options& opt) {
  const kernels::Kernel kx = parse_kernel(opt.kernel_x);
  const kernels::Kernel ky = parse_kernel(opt.kernel_y);
  if (ky.family() != kernels::KernelFamily::gaussian) {
    throw config_error("fit requires --kernel-y gaussian");
  }

  const io::Table table = io::read_table(opt.input);

  double h1 = opt.h1;
  double h2 = opt.h2;
  std::string bw_method = opt.bw_method;
  std::optional<density::JointDensityModel> model;
  std::vector<double> covariates;

  if (opt.variant == "standard") {
    const density::Sample sample = io::read_sample(table);
    covariates = sample.x;
    if (bw_method == "cv" || bw_method == "predband" || bw_method == "modalcv") {
      const auto cfg = make_cv_config(opt, &sample, sample.y);
      bandwidth::BandwidthChoice choice;
      if (bw_method == "cv") {
        choice = bandwidth::cv_conditional_density(sample, cfg);
      } else {
        const auto grid = opt.grid_spec.empty()
                              ? default_grid(sample.x)
                              : parse_linear_grid(opt.grid_spec);
        modes::MeanshiftConfig ms;
        ms.threads = opt.threads;
        choice = bw_method == "predband"
                     ? bandwidth::prediction_band_cv(sample, cfg, grid, opt.level,
                                                     opt.folds, opt.seed, ms)
                     : bandwidth::modal_cv_bootstrap(sample, cfg, grid,
                                                     opt.n_boot, opt.seed, ms);
      }
      h1 = choice.h1;
      h2 = choice.h2;
      log(LogLevel::info, "selected h1=" + io::format_double(h1) +
                              " h2=" + io::format_double(h2) + " by " + bw_method);
    } else if (bw_method != "fixed") {
      throw config_error("--bw-method '" + bw_method +
                         "' is not available for the standard variant");
    }
    if (std::isnan(h1) || std::isnan(h2)) {
      throw config_error("--h1 and --h2 are required with --bw-method fixed");
    }
    model = density::JointDensityModel::standard(sample, kx, ky, h1, h2);
  } else if (opt.variant == "censored") {
    if (bw_method != "fixed") {
      throw config_error("the censored variant supports --bw-method fixed only");
    }
    if (std::isnan(h1) || std::isnan(h2)) {
      throw config_error("--h1 and --h2 are required with --bw-method fixed");
    }
    const density::CensoredSample sample = io::read_censored(table);
    covariates = sample.x;
    model = density::JointDensityModel::censored(sample, kx, ky, h1, h2);
  } else if (opt.variant == "deconv") {
    const auto error = parse_error_dist(opt);
    if (error.family() == kernels::ErrorFamily::laplace &&
        kx.family() != kernels::KernelFamily::gaussian) {
      throw config_error("laplace-error deconvolution requires --kernel-x gaussian");
    }
    if (error.family() == kernels::ErrorFamily::gaussian &&
        kx.family() != kernels::KernelFamily::fourier) {
      throw config_error("gaussian-error deconvolution requires --kernel-x fourier");
    }
    const density::ContaminatedSample sample = io::read_contaminated(table, error);
    covariates = sample.w;
    if (bw_method == "simex") {
      const auto cfg = make_cv_config(opt, nullptr, sample.y);
      const auto choice = bandwidth::cv_simex(sample, cfg, opt.replicates, opt.seed);
      h1 = choice.h1;
      h2 = choice.h2;
      log(LogLevel::info, "selected h1=" + io::format_double(h1) +
                              " h2=" + io::format_double(h2) + " by simex");
    } else if (bw_method != "fixed") {
      throw config_error("the deconvolution variant supports fixed or simex only");
    }
    if (std::isnan(h1) || std::isnan(h2)) {
      throw config_error("--h1 and --h2 are required with --bw-method fixed");
    }
    model = density::JointDensityModel::deconvolution(sample, kx, ky, h1, h2);
  } else {
    throw config_error("unknown variant '" + opt.variant + "'");
  }

  const auto grid = opt.grid_spec.empty() ? default_grid(covariates)
                                          : parse_linear_grid(opt.grid_spec);
  modes::MeanshiftConfig ms;
  ms.threads = opt.threads;
  const modes::ModalCurve curve = modes::fit_multimodal(*model, grid, ms);
  std::optional<modes::ModalCurve> uni;
  if (opt.unimodal) {
    uni = modes::fit_unimodal(*model, grid, ms);
  }

  int flagged = 0;
  for (const auto& set : curve.sets) flagged += set.flagged ? 1 : 0;
  if (flagged > 0) {
    log(LogLevel::warn, std::to_string(flagged) + " grid points have no modes");
  }

  if (opt.format == "csv") {
    write_output(opt, io::to_csv(io::curve_table(curve, uni ? &*uni : nullptr)));
  } else {
    io::json doc{{"command", "fit"},
                 {"variant", opt.variant},
                 {"kernel_x", opt.kernel_x},
                 {"kernel_y", opt.kernel_y},
                 {"bw_method", bw_method},
                 {"h1", h1},
                 {"h2", h2},
                 {"seed", opt.seed},
                 {"grid", curve.grid},
                 {"curve", io::to_json(curve)}};
    if (uni) doc["unimodal"] = io::to_json(*uni);
    write_output(opt, io::dump_json(doc));
  }
  return 0;
}

// bandwidth ------------------------------------------------------------

int run_bandwidth(const Options& opt) {
  const io::Table table = io::read_table(opt.input);
  bandwidth::BandwidthChoice choice;

  if (opt.bw_method == "simex") {
    const auto error = parse_error_dist(opt);
    const auto sample = io::read_contaminated(table, error);
    const auto cfg = make_cv_config(opt, nullptr, sample.y);
    choice = bandwidth::cv_simex(sample, cfg, opt.replicates, opt.seed);
  } else {
    const density::Sample sample = io::read_sample(table);
    const auto cfg = make_cv_config(opt, &sample, sample.y);
    if (opt.bw_method == "cv") {
      choice = bandwidth::cv_conditional_density(sample, cfg);
    } else if (opt.bw_method == "predband" || opt.bw_method == "modalcv") {
      const auto grid = opt.grid_spec.empty() ? default_grid(sample.x)
                                              : parse_linear_grid(opt.grid_spec);
      modes::MeanshiftConfig ms;
      ms.threads = opt.threads;
      choice = opt.bw_method == "predband"
                   ? bandwidth::prediction_band_cv(sample, cfg, grid, opt.level,
                                                   opt.folds, opt.seed, ms)
                   : bandwidth::modal_cv_bootstrap(sample, cfg, grid, opt.n_boot,
                                                   opt.seed, ms);
    } else {
      throw config_error("--bw-method must be cv, simex, predband, or modalcv");
    }
  }
  if (choice.boundary_minimizer) {
    log(LogLevel::warn, "criterion minimizer sits on the candidate-grid edge");
  }

  if (opt.format == "csv") {
    io::Table out;
    out.columns = {"h1", "h2", "criterion"};
    for (const auto& t : choice.trace) {
      out.rows.push_back({t.h1, t.h2, t.criterion});
    }
    write_output(opt, io::to_csv(out));
  } else {
    io::json doc{{"command", "bandwidth"}, {"seed", opt.seed}};
    doc.update(io::to_json(choice));
    write_output(opt, io::dump_json(doc));
  }
  return 0;
}

// band -----------------------------------------------------------------

int run_band(const Options& opt) {
  if (std::isnan(opt.h1) || std::isnan(opt.h2)) {
    throw config_error("band requires --h1 and --h2");
  }
  const kernels::Kernel kx = parse_kernel(opt.kernel_x);
  const kernels::Kernel ky = parse_kernel(opt.kernel_y);
  if (ky.family() != kernels::KernelFamily::gaussian) {
    throw config_error("band requires --kernel-y gaussian");
  }
  const density::Sample sample = io::read_sample(io::read_table(opt.input));
  const auto grid = opt.grid_spec.empty() ? default_grid(sample.x)
                                          : parse_linear_grid(opt.grid_spec);
  modes::MeanshiftConfig ms;
  ms.threads = opt.threads;

  io::json doc{{"command", "band"},
               {"level", opt.level},
               {"h1", opt.h1},
               {"h2", opt.h2},
               {"seed", opt.seed}};
  std::vector<std::vector<uncertainty::Interval>> intervals;

  if (opt.band_type == "prediction") {
    if (opt.holdout.empty()) {
      throw config_error("prediction bands require --holdout");
    }
    const auto holdout = io::read_sample(io::read_table(opt.holdout));
    const auto model =
        density::JointDensityModel::standard(sample, kx, ky, opt.h1, opt.h2);
    const auto curve = opt.unimodal ? modes::fit_unimodal(model, grid, ms)
                                    : modes::fit_multimodal(model, grid, ms);
    const auto band = uncertainty::prediction_band(curve, holdout, opt.level);
    doc.update(io::to_json(band));
    intervals = band.intervals;
  } else if (opt.band_type == "confidence") {
    modes::FitConfig fit{kx, ky, opt.h1, opt.h2, ms};
    const auto band = uncertainty::bootstrap_confidence_band(
        sample, fit, grid, opt.n_boot, opt.level, opt.seed);
    doc.update(io::to_json(band));
    intervals = band.intervals;
  } else {
    throw config_error("--band-type must be prediction or confidence");
  }

  if (opt.format == "csv") {
    io::Table out;
    out.columns = {"x", "lo", "hi"};
    for (std::size_t g = 0; g < grid.size(); ++g) {
      for (const auto& iv : intervals[g]) {
        out.rows.push_back({grid[g], iv.lo, iv.hi});
      }
    }
    write_output(opt, io::to_csv(out));
  } else {
    write_output(opt, io::dump_json(doc));
  }
  return 0;
}

// simulate --------------------------------------------------------------

std::function<double(double)> parse_fn(const io::json& node, const char* what) {
  if (node.is_number()) {
    const double c = node.get<double>();
    return [c](double) { return c; };
  }
  if (!node.is_object() || !node.contains("type")) {
    throw config_error(std::string("mixture ") + what +
                       " must be a number or an object with a type");
  }
  const std::string type = node["type"].get<std::string>();
  const double a = node.value("a", 0.0);
  const double b = node.value("b", 0.0);
  const double c = node.value("c", 0.0);
  if (type == "const") return [a](double) { return a; };
  if (type == "linear") return [a, b](double x) { return a + b * x; };
  if (type == "sin") return [a, b, c](double x) { return a * std::sin(b * x) + c; };
  throw config_error("unknown mixture function type '" + type + "'");
}

datagen::MixtureSpec load_mixture(const Options& opt) {
  if (!opt.mixture_file.empty()) {
    std::ifstream in(opt.mixture_file);
    if (!in) {
      throw io::data_error("cannot open mixture file: " + opt.mixture_file);
    }
    io::json doc;
    try {
      doc = io::json::parse(in);
    } catch (const std::exception& e) {
      throw io::data_error("mixture file is not valid JSON: " +
                           std::string(e.what()));
    }
    datagen::MixtureSpec spec;
    spec.x_min = doc.value("x_min", 0.0);
    spec.x_max = doc.value("x_max", 1.0);
    if (!doc.contains("components") || !doc["components"].is_array()) {
      throw config_error("mixture file needs a components array");
    }
    for (const auto& comp : doc["components"]) {
      datagen::MixtureComponent component;
      component.weight = parse_fn(comp.at("weight"), "weight");
      component.mean = parse_fn(comp.at("mean"), "mean");
      component.sd = parse_fn(comp.at("sd"), "sd");
      spec.components.push_back(std::move(component));
    }
    try {
      spec.validate();
    } catch (const std::invalid_argument& e) {
      throw config_error(e.what());
    }
    return spec;
  }
  if (opt.fixture == "three-branch") return datagen::three_branch_fixture();
  if (opt.fixture == "three-level") return datagen::three_level_fixture();
  throw config_error("unknown fixture '" + opt.fixture +
                     "' (use three-branch, three-level, or --mixture-file)");
}

int run_simulate(const Options& opt) {
  if (opt.n < 1) {
    throw config_error("-n must be positive");
  }
  const auto spec = load_mixture(opt);
  const auto sample = datagen::generate(spec, static_cast<std::size_t>(opt.n),
                                        opt.seed);

  io::Table table;
  table.columns = {"x", "y"};
  std::vector<double> ys = sample.y;
  std::vector<std::uint8_t> event;
  if (!std::isnan(opt.censor_rate)) {
    if (!(opt.censor_rate > 0.0)) {
      throw config_error("--censor-rate must be positive");
    }
    datagen::CensoringSpec censoring;
    censoring.kind = datagen::CensoringSpec::Kind::exponential;
    censoring.a = opt.censor_rate;
    const auto censored =
        datagen::censor(sample, censoring, detail::derive_seed(opt.seed, 2));
    ys = censored.time;
    event = censored.event;
    table.columns.push_back("delta");
  }
  std::vector<double> w;
  if (!std::isnan(opt.error_scale)) {
    const auto error = parse_error_dist(opt);
    const auto contaminated =
        datagen::contaminate(sample, error, detail::derive_seed(opt.seed, 1));
    w = contaminated.w;
    table.columns.push_back("w");
  }

  for (std::size_t i = 0; i < sample.size(); ++i) {
    std::vector<double> row{sample.x[i], ys[i]};
    if (!event.empty()) row.push_back(static_cast<double>(event[i]));
    if (!w.empty()) row.push_back(w[i]);
    table.rows.push_back(std::move(row));
  }
  write_output(opt, io::to_csv(table));

  if (!opt.truth_output.empty()) {
    const auto grid = opt.grid_spec.empty()
                          ? parse_linear_grid(io::format_double(spec.x_min) + ":" +
                                              io::format_double(spec.x_max) + ":50")
                          : parse_linear_grid(opt.grid_spec);
    io::write_curve(opt.truth_output, datagen::true_modes(spec, grid));
  }
  return 0;
}

// eval -------------------------------------------------------------------

int run_eval(const Options& opt) {
  const auto estimate = io::read_curve(opt.input);
  const auto truth = io::read_curve(opt.truth);
  metrics::ErrorReport report;
  try {
    report = metrics::error_report(estimate, truth);
  } catch (const std::invalid_argument& e) {
    throw io::data_error(e.what());
  }

  if (opt.format == "csv") {
    io::Table out;
    out.columns = {"x", "pointwise"};
    for (std::size_t g = 0; g < report.grid.size(); ++g) {
      out.rows.push_back({report.grid[g], report.pointwise[g]});
    }
    write_output(opt, io::to_csv(out));
  } else {
    io::json doc{{"command", "eval"}};
    doc.update(io::to_json(report));
    write_output(opt, io::dump_json(doc));
  }
  return 0;
}

int emit_error(int code, const char* kind, const std::string& message) {
  const io::json doc{
      {"error", io::json{{"code", code}, {"kind", kind}, {"message", message}}}};
  std::cerr << io::dump_json(doc);
  return code;
}

}  // namespace

int run(int argc, const char* const* argv) {
  init_log_level();

  Options opt;
  CLI::App app{"kernel modal regression: multi-valued conditional-mode "
               "estimation, bandwidth selection, and uncertainty bands"};
  app.require_subcommand(1);

  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--output", opt.output, "output path (stdout if omitted)");
    cmd->add_option("--format", opt.format, "output format")
        ->check(CLI::IsMember({"json", "csv"}));
    cmd->add_option("--seed", opt.seed, "random seed");
    cmd->add_option("--threads", opt.threads, "worker cap (results identical)")
        ->check(CLI::PositiveNumber);
  };
  const auto add_model = [&](CLI::App* cmd) {
    cmd->add_option("--kernel-x", opt.kernel_x, "covariate kernel");
    cmd->add_option("--kernel-y", opt.kernel_y, "response kernel");
    cmd->add_option("--h1", opt.h1, "covariate bandwidth");
    cmd->add_option("--h2", opt.h2, "response bandwidth");
    cmd->add_option("--grid", opt.grid_spec, "fit grid as min:max:count");
    cmd->add_option("--error-dist", opt.error_dist, "measurement error family")
        ->check(CLI::IsMember({"laplace", "gaussian"}));
    cmd->add_option("--error-scale", opt.error_scale, "measurement error scale");
  };

  auto* fit = app.add_subcommand("fit", "fit a modal curve to a CSV sample");
  fit->add_option("--input", opt.input, "input CSV")->required();
  fit->add_option("--variant", opt.variant, "estimator variant")
      ->check(CLI::IsMember({"standard", "censored", "deconv"}));
  fit->add_option("--bw-method", opt.bw_method, "bandwidth mode")
      ->check(CLI::IsMember({"fixed", "cv", "simex", "predband", "modalcv"}));
  fit->add_option("--h1-grid", opt.h1_grid, "h1 candidates as lo:hi:count");
  fit->add_option("--h2-grid", opt.h2_grid, "h2 candidates as lo:hi:count");
  auto* fit_level =
      fit->add_option("--level", opt.level, "level for --bw-method predband");
  fit->add_option("--folds", opt.folds, "folds for --bw-method predband");
  fit->add_option("--replicates", opt.replicates, "simex replicates");
  fit->add_option("--boot", opt.n_boot, "bootstrap draws for modalcv");
  fit->add_flag("--unimodal", opt.unimodal, "also emit the single-valued curve");
  add_model(fit);
  add_common(fit);

  auto* bw = app.add_subcommand("bandwidth", "select smoothing bandwidths");
  bw->add_option("--input", opt.input, "input CSV")->required();
  bw->add_option("--bw-method", opt.bw_method, "selector")->required()
      ->check(CLI::IsMember({"cv", "simex", "predband", "modalcv"}));
  bw->add_option("--h1-grid", opt.h1_grid, "h1 candidates as lo:hi:count");
  bw->add_option("--h2-grid", opt.h2_grid, "h2 candidates as lo:hi:count");
  auto* bw_level = bw->add_option("--level", opt.level, "level for predband");
  bw->add_option("--folds", opt.folds, "folds for predband");
  bw->add_option("--replicates", opt.replicates, "simex replicates");
  bw->add_option("--boot", opt.n_boot, "bootstrap draws for modalcv");
  add_model(bw);
  add_common(bw);

  auto* band = app.add_subcommand("band", "prediction or confidence band");
  band->add_option("--input", opt.input, "input CSV")->required();
  band->add_option("--band-type", opt.band_type, "band type")
      ->check(CLI::IsMember({"prediction", "confidence"}));
  band->add_option("--level", opt.level, "coverage level")->required();
  band->add_option("--holdout", opt.holdout, "holdout CSV for prediction bands");
  band->add_option("--boot", opt.n_boot, "bootstrap replicates (confidence)");
  band->add_flag("--unimodal", opt.unimodal, "band around the single-valued curve");
  add_model(band);
  add_common(band);

  auto* sim = app.add_subcommand("simulate", "draw a synthetic fixture CSV");
  sim->add_option("--fixture", opt.fixture, "named mixture fixture");
  sim->add_option("--mixture-file", opt.mixture_file, "mixture spec JSON");
  sim->add_option("-n,--n", opt.n, "sample size");
  sim->add_option("--censor-rate", opt.censor_rate,
                  "exponential censoring rate (adds delta column)");
  sim->add_option("--truth-output", opt.truth_output,
                  "also write the exact modal curve CSV");
  sim->add_option("--grid", opt.grid_spec, "grid for --truth-output");
  sim->add_option("--error-dist", opt.error_dist, "measurement error family")
      ->check(CLI::IsMember({"laplace", "gaussian"}));
  sim->add_option("--error-scale", opt.error_scale,
                  "measurement error scale (adds w column)");
  add_common(sim);

  auto* eval = app.add_subcommand("eval", "score a fit against a reference curve");
  eval->add_option("--input", opt.input, "estimated curve CSV")->required();
  eval->add_option("--truth", opt.truth, "reference curve CSV")->required();
  add_common(eval);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return emit_error(2, "config", e.what());
  }

  try {
    // the prediction-band selector has no canonical level; demand an explicit one
    if (opt.bw_method == "predband" &&
        ((fit->parsed() && fit_level->count() == 0) ||
         (bw->parsed() && bw_level->count() == 0))) {
      throw config_error("--bw-method predband requires an explicit --level");
    }
    if (fit->parsed()) return run_fit(opt);
    if (bw->parsed()) return run_bandwidth(opt);
    if (band->parsed()) return run_band(opt);
    if (sim->parsed()) return run_simulate(opt);
    if (eval->parsed()) return run_eval(opt);
    return emit_error(2, "config", "no subcommand given");
  } catch (const config_error& e) {
    return emit_error(2, "config", e.what());
  } catch (const io::data_error& e) {
    return emit_error(3, "data", e.what());
  } catch (const std::exception& e) {
    return emit_error(4, "numeric", e.what());
  }
}

}  // namespace modalkit::cli
