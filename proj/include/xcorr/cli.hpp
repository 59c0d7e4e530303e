#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <ctime>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "xcorr/calibration.hpp"
#include "xcorr/common.hpp"
#include "xcorr/correlators.hpp"
#include "xcorr/csv.hpp"
#include "xcorr/metrics.hpp"
#include "xcorr/price.hpp"
#include "xcorr/rng.hpp"
#include "xcorr/sampling.hpp"
#include "xcorr/wht.hpp"

namespace xcorr::cli {

// Bad flag values and unparsable descriptors; exits 2, unlike runtime
// failures which exit 1.
class usage_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Resolved configuration of one CLI run. Every output file echoes the
// fields relevant to its command as '# key=value' comment lines.
struct RunConfig {
  std::string command;
  std::string spec_text;
  std::string r_text = "0";
  std::string family_text = "gaussian";
  std::string n_values_text = "16,32,64,128,256,512,1024,2048,4096";
  std::vector<double> alphas{0.0};
  std::vector<double> weights;  // empty means uniform
  std::uint64_t seed = 1;
  std::size_t n = 0;
  std::size_t trials = 0;
  std::size_t grid = 0;
  int degree = -1;  // negative means per-spec default
  unsigned threads = 0;
  bool use_wht = false;
  bool no_timestamp = false;
  std::string out_path;  // empty means stdout
  std::string in_path;
  std::string model_path;
  std::string table_path;
};

namespace detail {

inline std::string utc_timestamp_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline void finish_comments(const RunConfig& cfg, CsvTable& table) {
  if (!cfg.no_timestamp)
    table.comments.push_back("generated_at=" + utc_timestamp_now());
}

inline void write_output(const RunConfig& cfg, const CsvTable& table) {
  if (cfg.out_path.empty())
    write_csv(std::cout, table);
  else
    write_csv_file(cfg.out_path, table);
}

inline CorrelatorSpec parse_spec_arg(const std::string& text) {
  try {
    return CorrelatorSpec::parse(text);
  } catch (const parse_error& e) {
    throw usage_error(e.what());
  }
}

inline Family parse_family_arg(const std::string& text) {
  try {
    return family_from_string(text);
  } catch (const parse_error& e) {
    throw usage_error(e.what());
  }
}

inline std::vector<std::size_t> parse_n_values_arg(const std::string& text) {
  std::vector<std::size_t> out;
  try {
    for (double v : xcorr::detail::parse_number_list(text, "--n-values")) {
      if (!(v >= 1.0) || v != std::floor(v))
        throw usage_error("--n-values: entries must be positive integers");
      out.push_back(static_cast<std::size_t>(v));
    }
  } catch (const parse_error& e) {
    throw usage_error(e.what());
  }
  if (out.empty()) throw usage_error("--n-values: empty list");
  return out;
}

inline PwlMixture mixture_from_args(const RunConfig& cfg) {
  PwlMixture m;
  m.offsets = cfg.alphas;
  if (cfg.weights.empty())
    m.weights.assign(m.offsets.size(), 1.0 / static_cast<double>(m.offsets.size()));
  else
    m.weights = cfg.weights;
  try {
    validate(m);
  } catch (const std::invalid_argument& e) {
    throw usage_error(e.what());
  }
  return m;
}

inline std::string format_double_list(const std::vector<double>& vs) {
  std::string out;
  for (std::size_t i = 0; i < vs.size(); ++i) {
    if (i) out += ',';
    out += xcorr::detail::format_number(vs[i]);
  }
  return out;
}

// Model comes from --model when given, otherwise from a fresh calibration
// with stock settings (Gaussian family, no transform). The Gaussian-
// calibrated model is the one the transform front end is designed to reuse
// on other input families.
inline CalibrationModel resolve_model(const RunConfig& cfg,
                                      const CorrelatorSpec& spec,
                                      CsvTable& table) {
  if (!cfg.model_path.empty()) {
    table.comments.push_back("model=" + cfg.model_path);
    return load_model(cfg.model_path);
  }
  const auto grid = default_calibration_grid();
  const CalibrationTable cal =
      build_table(spec, grid, kDefaultCalibrationN, kDefaultCalibrationTrials,
                  cfg.seed, Family::gaussian, false, cfg.threads);
  const CalibrationModel model = fit_inverse(cal, cfg.degree);
  table.comments.push_back(
      "model=auto-calibrated(family=gaussian,n=" +
      std::to_string(kDefaultCalibrationN) +
      ",trials=" + std::to_string(kDefaultCalibrationTrials) +
      ",grid=" + std::to_string(grid.size()) +
      ",degree=" + std::to_string(model.degree) + ")");
  return model;
}

inline CsvTable sweep_to_csv(const SweepResult& result) {
  CsvTable table;
  table.header = {"spec", "family", "R",      "N",    "sigma",
                  "crb",  "snr_db", "trials", "seed"};
  const std::string spec_text = result.spec.to_string();
  const std::string family_text = family_to_string(result.family);
  const std::string trials_text = std::to_string(result.trials);
  const std::string seed_text = std::to_string(result.seed);
  for (std::size_t k = 0; k < result.n_values.size(); ++k)
    for (std::size_t i = 0; i < result.r_grid.size(); ++i)
      table.rows.push_back({spec_text, family_text,
                            format_sig17(result.r_grid[i]),
                            std::to_string(result.n_values[k]),
                            format_sig17(result.sigma[k][i]),
                            format_sig17(result.crb[k][i]),
                            format_sig17(result.snr_db_values[k]), trials_text,
                            seed_text});
  return table;
}

// ---- command bodies ----------------------------------------------------

inline void run_gtable(const RunConfig& cfg) {
  const PwlMixture m = mixture_from_args(cfg);
  const auto grid = linspace(-0.99, 0.99, cfg.grid);
  const GCurve curve = build_gcurve(m, grid);
  CsvTable table;
  table.comments = {"tool=xcorr", "command=gtable",
                    "alpha=" + format_double_list(m.offsets),
                    "weight=" + format_double_list(m.weights),
                    "grid=" + std::to_string(cfg.grid)};
  finish_comments(cfg, table);
  table.header = {"R", "g"};
  for (std::size_t i = 0; i < curve.r_grid.size(); ++i)
    table.rows.push_back(
        {format_sig17(curve.r_grid[i]), format_sig17(curve.g_values[i])});
  write_output(cfg, table);
}

inline void run_crb(const RunConfig& cfg) {
  const auto grid = linspace(-0.99, 0.99, cfg.grid);
  CsvTable table;
  table.comments = {"tool=xcorr", "command=crb", "n=" + std::to_string(cfg.n),
                    "grid=" + std::to_string(cfg.grid)};
  finish_comments(cfg, table);
  table.header = {"R", "crb_sigma"};
  for (double r : grid)
    table.rows.push_back({format_sig17(r), format_sig17(crb_sigma(r, cfg.n))});
  write_output(cfg, table);
}

inline double parse_r_arg(const std::string& text) {
  double r;
  try {
    r = xcorr::detail::parse_number(text, "--r");
  } catch (const parse_error& e) {
    throw usage_error(e.what());
  }
  if (!(r >= -1.0 && r <= 1.0))
    throw usage_error("--r: correlation must lie in [-1, 1]");
  return r;
}

inline void run_sample(const RunConfig& cfg) {
  const Family family = parse_family_arg(cfg.family_text);
  const double r = parse_r_arg(cfg.r_text);
  RngStream rng(cfg.seed, stream_phase::sample);
  const SampleBatch batch = sample_correlated(cfg.n, r, family, rng);
  CsvTable table;
  table.comments = {"tool=xcorr",
                    "command=sample",
                    "family=" + family_to_string(family),
                    "r=" + xcorr::detail::format_number(r),
                    "n=" + std::to_string(cfg.n),
                    "seed=" + std::to_string(cfg.seed)};
  finish_comments(cfg, table);
  table.header = {"x", "y"};
  for (std::size_t i = 0; i < batch.xs.size(); ++i)
    table.rows.push_back(
        {format_sig17(batch.xs[i]), format_sig17(batch.ys[i])});
  write_output(cfg, table);
}

inline void run_wht(const RunConfig& cfg) {
  const CsvTable input = read_csv_file(cfg.in_path);
  std::vector<double> xs, ys;
  for (const auto& row : input.rows) {
    if (row.size() != 2)
      throw parse_error("wht: expected 2 columns in '" + cfg.in_path + "'");
    xs.push_back(xcorr::detail::parse_number(row[0], "wht input"));
    ys.push_back(xcorr::detail::parse_number(row[1], "wht input"));
  }
  if (xs.empty()) throw parse_error("wht: no data rows in '" + cfg.in_path + "'");

  SampleBatch batch;
  batch.xs = std::move(xs);
  batch.ys = std::move(ys);
  batch.effective_n = batch.xs.size();
  const std::size_t original_len = batch.xs.size();
  const SampleBatch transformed = transform_batch(batch);

  CsvTable table;
  table.comments = {"tool=xcorr", "command=wht", "in=" + cfg.in_path};
  // carry sample metadata (family=, r=, seed=, ...) through the transform
  for (const auto& comment : input.comments)
    if (comment.rfind("tool=", 0) != 0 && comment.rfind("command=", 0) != 0 &&
        comment.rfind("generated_at=", 0) != 0)
      table.comments.push_back(comment);
  table.comments.push_back("original_len=" + std::to_string(original_len));
  table.comments.push_back(
      "padded=" + std::string(transformed.xs.size() != original_len ? "true"
                                                                    : "false"));
  finish_comments(cfg, table);
  table.header = {"x", "y"};
  for (std::size_t i = 0; i < transformed.xs.size(); ++i)
    table.rows.push_back(
        {format_sig17(transformed.xs[i]), format_sig17(transformed.ys[i])});
  write_output(cfg, table);
}

inline void run_calibrate(const RunConfig& cfg) {
  const CorrelatorSpec spec = parse_spec_arg(cfg.spec_text);
  const Family family = parse_family_arg(cfg.family_text);
  const auto grid =
      linspace(-kDefaultCalibrationGridMax, kDefaultCalibrationGridMax, cfg.grid);
  const CalibrationTable cal = build_table(spec, grid, cfg.n, cfg.trials,
                                           cfg.seed, family, cfg.use_wht,
                                           cfg.threads);
  const CalibrationModel model = fit_inverse(cal, cfg.degree);
  save_model(model, cfg.out_path);
  std::cerr << "model written to " << cfg.out_path
            << " (degree " << model.degree << ", fit residual "
            << xcorr::detail::format_number(model.fit_residual) << ")\n";

  if (!cfg.table_path.empty()) {
    CsvTable table;
    table.comments = {"tool=xcorr",
                      "command=calibrate",
                      "spec=" + spec.to_string(),
                      "family=" + family_to_string(family),
                      "n=" + std::to_string(cfg.n),
                      "trials=" + std::to_string(cfg.trials),
                      "grid=" + std::to_string(cfg.grid),
                      "degree=" + std::to_string(model.degree),
                      "use_wht=" + std::string(cfg.use_wht ? "true" : "false"),
                      "seed=" + std::to_string(cfg.seed)};
    finish_comments(cfg, table);
    table.header = {"R", "mean_score", "stderr"};
    for (std::size_t i = 0; i < cal.r_grid.size(); ++i)
      table.rows.push_back({format_sig17(cal.r_grid[i]),
                            format_sig17(cal.mean_scores[i]),
                            format_sig17(cal.std_errors[i])});
    write_csv_file(cfg.table_path, table);
  }
}

inline void run_estimate(const RunConfig& cfg) {
  const CorrelatorSpec spec = parse_spec_arg(cfg.spec_text);
  const CalibrationModel model = load_model(cfg.model_path);
  auto [xs, ys] = read_pairs(cfg.in_path);

  SampleBatch batch;
  batch.xs = std::move(xs);
  batch.ys = std::move(ys);
  batch.effective_n = batch.xs.size();
  const double score = cfg.use_wht ? batch_score(transform_batch(batch), spec)
                                   : batch_score(batch, spec);
  const double r_hat = estimate_r(batch, spec, model, cfg.use_wht);

  CsvTable table;
  table.comments = {"tool=xcorr",
                    "command=estimate",
                    "spec=" + spec.to_string(),
                    "model=" + cfg.model_path,
                    "in=" + cfg.in_path,
                    "use_wht=" + std::string(cfg.use_wht ? "true" : "false")};
  finish_comments(cfg, table);
  table.header = {"n", "score", "r_hat"};
  table.rows.push_back({std::to_string(batch.effective_n), format_sig17(score),
                        format_sig17(r_hat)});
  write_output(cfg, table);
}

inline void run_sweep(const RunConfig& cfg) {
  const CorrelatorSpec spec = parse_spec_arg(cfg.spec_text);
  const Family family = parse_family_arg(cfg.family_text);
  CsvTable table;
  table.comments = {"tool=xcorr",
                    "command=sweep",
                    "spec=" + spec.to_string(),
                    "family=" + family_to_string(family),
                    "n=" + std::to_string(cfg.n),
                    "trials=" + std::to_string(cfg.trials),
                    "grid=" + std::to_string(cfg.grid),
                    "use_wht=" + std::string(cfg.use_wht ? "true" : "false"),
                    "seed=" + std::to_string(cfg.seed)};
  const CalibrationModel model = resolve_model(cfg, spec, table);
  const auto grid = linspace(-0.9, 0.9, cfg.grid);
  const SweepResult result =
      error_std_sweep(spec, model, family, grid, cfg.n, cfg.trials, cfg.seed,
                      cfg.use_wht, cfg.threads);
  finish_comments(cfg, table);
  CsvTable body = sweep_to_csv(result);
  body.comments = std::move(table.comments);
  write_output(cfg, body);
}

inline void run_snr(const RunConfig& cfg) {
  const CorrelatorSpec spec = parse_spec_arg(cfg.spec_text);
  const Family family = parse_family_arg(cfg.family_text);
  const std::vector<std::size_t> n_values = parse_n_values_arg(cfg.n_values_text);
  CsvTable table;
  table.comments = {"tool=xcorr",
                    "command=snr",
                    "spec=" + spec.to_string(),
                    "family=" + family_to_string(family),
                    "n_values=" + cfg.n_values_text,
                    "trials=" + std::to_string(cfg.trials),
                    "grid=" + std::to_string(cfg.grid),
                    "use_wht=" + std::string(cfg.use_wht ? "true" : "false"),
                    "seed=" + std::to_string(cfg.seed),
                    "sigma_bar_weighting=uniform-grid"};
  const CalibrationModel model = resolve_model(cfg, spec, table);
  const auto grid = linspace(-0.9, 0.9, cfg.grid);
  const SweepResult result = snr_sweep(spec, model, family, n_values, grid,
                                       cfg.trials, cfg.seed, cfg.use_wht,
                                       cfg.threads);
  finish_comments(cfg, table);
  CsvTable body = sweep_to_csv(result);
  body.comments = std::move(table.comments);
  write_output(cfg, body);
}

}  // namespace detail

// Argument list excludes the program name. Returns the process exit code:
// 0 success, 1 runtime failure, 2 usage error.
inline int run(std::vector<std::string> args) {
  CLI::App app{"cross-correlation estimation toolkit"};
  app.require_subcommand(1);

  RunConfig cfg;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", cfg.seed, "RNG seed")->capture_default_str();
    sub->add_flag("--no-timestamp", cfg.no_timestamp,
                  "omit the generated_at comment (reproducible bytes)");
    sub->add_option("--out", cfg.out_path, "output path (default: stdout)");
  };

  CLI::App* gtable = app.add_subcommand(
      "gtable", "tabulate the expected score curve of a hinge mixture");
  gtable->add_option("--alpha", cfg.alphas, "hinge offsets")
      ->delimiter(',')
      ->capture_default_str();
  gtable->add_option("--weight", cfg.weights,
                     "hinge weights (default: uniform)")
      ->delimiter(',');
  cfg.grid = 199;
  gtable->add_option("--grid", cfg.grid, "grid points on [-0.99, 0.99]")
      ->capture_default_str();
  add_common(gtable);

  CLI::App* crb = app.add_subcommand(
      "crb", "tabulate the Cramer-Rao bound on correlation error");
  std::size_t crb_n = 256;
  crb->add_option("--n", crb_n, "samples per batch")->capture_default_str();
  std::size_t crb_grid = 199;
  crb->add_option("--grid", crb_grid, "grid points on [-0.99, 0.99]")
      ->capture_default_str();
  add_common(crb);

  CLI::App* sample = app.add_subcommand(
      "sample", "draw one correlated batch and write it as CSV");
  std::string sample_family = "gaussian";
  sample->add_option("--family", sample_family,
                     "gaussian|uniform|gamma|mixed")
      ->capture_default_str();
  sample->add_option("--r", cfg.r_text, "true correlation")->capture_default_str();
  std::size_t sample_n = 1024;
  sample->add_option("--n", sample_n, "samples per batch")->capture_default_str();
  add_common(sample);

  CLI::App* wht = app.add_subcommand(
      "wht", "apply the unitary Walsh-Hadamard transform to a pair file");
  wht->add_option("--in", cfg.in_path, "input pair CSV")->required();
  add_common(wht);

  CLI::App* calibrate = app.add_subcommand(
      "calibrate", "fit a score-to-correlation model by Monte Carlo");
  calibrate->add_option("--spec", cfg.spec_text, "correlator descriptor")
      ->required();
  std::string cal_family = "gaussian";
  calibrate->add_option("--family", cal_family, "sampling family")
      ->capture_default_str();
  std::size_t cal_n = kDefaultCalibrationN;
  std::size_t cal_trials = kDefaultCalibrationTrials;
  std::size_t cal_grid = kDefaultCalibrationGridSize;
  calibrate->add_option("--n", cal_n, "samples per batch")->capture_default_str();
  calibrate->add_option("--trials", cal_trials, "batches per grid point")
      ->capture_default_str();
  calibrate->add_option("--grid", cal_grid, "grid points on [-0.95, 0.95]")
      ->capture_default_str();
  calibrate->add_option("--degree", cfg.degree,
                        "fit degree (default: per-spec)");
  calibrate->add_flag("--use-wht", cfg.use_wht, "transform batches first");
  calibrate->add_option("--threads", cfg.threads, "worker threads (0 = auto)");
  calibrate->add_option("--table", cfg.table_path,
                        "also export the score table as CSV");
  add_common(calibrate);

  CLI::App* estimate = app.add_subcommand(
      "estimate", "estimate correlation for one pair file");
  estimate->add_option("--spec", cfg.spec_text, "correlator descriptor")
      ->required();
  estimate->add_option("--model", cfg.model_path, "calibration model file")
      ->required();
  estimate->add_option("--in", cfg.in_path, "input pair CSV")->required();
  estimate->add_flag("--use-wht", cfg.use_wht, "transform the batch first");
  add_common(estimate);

  CLI::App* sweep = app.add_subcommand(
      "sweep", "error standard deviation across the correlation grid");
  sweep->add_option("--spec", cfg.spec_text, "correlator descriptor")->required();
  sweep->add_option("--model", cfg.model_path,
                    "calibration model file (default: calibrate internally)");
  std::string sweep_family = "gaussian";
  sweep->add_option("--family", sweep_family, "sampling family")
      ->capture_default_str();
  std::size_t sweep_n = 256;
  std::size_t sweep_trials = 2000;
  std::size_t sweep_grid = 19;
  sweep->add_option("--n", sweep_n, "samples per batch")->capture_default_str();
  sweep->add_option("--trials", sweep_trials, "batches per grid point")
      ->capture_default_str();
  sweep->add_option("--grid", sweep_grid, "grid points on [-0.9, 0.9]")
      ->capture_default_str();
  sweep->add_option("--degree", cfg.degree,
                    "fit degree for internal calibration");
  sweep->add_flag("--use-wht", cfg.use_wht, "transform batches first");
  sweep->add_option("--threads", cfg.threads, "worker threads (0 = auto)");
  add_common(sweep);

  CLI::App* snr = app.add_subcommand(
      "snr", "SNR versus batch size on the correlation grid");
  snr->add_option("--spec", cfg.spec_text, "correlator descriptor")->required();
  snr->add_option("--model", cfg.model_path,
                  "calibration model file (default: calibrate internally)");
  std::string snr_family = "gaussian";
  snr->add_option("--family", snr_family, "sampling family")
      ->capture_default_str();
  snr->add_option("--n-values", cfg.n_values_text, "comma-separated batch sizes")
      ->capture_default_str();
  std::size_t snr_trials = 500;
  std::size_t snr_grid = 19;
  snr->add_option("--trials", snr_trials, "batches per grid point")
      ->capture_default_str();
  snr->add_option("--grid", snr_grid, "grid points on [-0.9, 0.9]")
      ->capture_default_str();
  snr->add_option("--degree", cfg.degree, "fit degree for internal calibration");
  snr->add_flag("--use-wht", cfg.use_wht, "transform batches first");
  snr->add_option("--threads", cfg.threads, "worker threads (0 = auto)");
  add_common(snr);

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(gtable)) {
      cfg.command = "gtable";
      detail::run_gtable(cfg);
    } else if (app.got_subcommand(crb)) {
      cfg.command = "crb";
      cfg.n = crb_n;
      cfg.grid = crb_grid;
      detail::run_crb(cfg);
    } else if (app.got_subcommand(sample)) {
      cfg.command = "sample";
      cfg.family_text = sample_family;
      cfg.n = sample_n;
      detail::run_sample(cfg);
    } else if (app.got_subcommand(wht)) {
      cfg.command = "wht";
      detail::run_wht(cfg);
    } else if (app.got_subcommand(calibrate)) {
      cfg.command = "calibrate";
      cfg.family_text = cal_family;
      cfg.n = cal_n;
      cfg.trials = cal_trials;
      cfg.grid = cal_grid;
      if (cfg.out_path.empty())
        throw usage_error("calibrate: --out <model file> is required");
      detail::run_calibrate(cfg);
    } else if (app.got_subcommand(estimate)) {
      cfg.command = "estimate";
      detail::run_estimate(cfg);
    } else if (app.got_subcommand(sweep)) {
      cfg.command = "sweep";
      cfg.family_text = sweep_family;
      cfg.n = sweep_n;
      cfg.trials = sweep_trials;
      cfg.grid = sweep_grid;
      detail::run_sweep(cfg);
    } else if (app.got_subcommand(snr)) {
      cfg.command = "snr";
      cfg.family_text = snr_family;
      cfg.trials = snr_trials;
      cfg.grid = snr_grid;
      detail::run_snr(cfg);
    }
  } catch (const usage_error& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    // precondition failures are config mistakes, not runtime faults
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

inline int run(int argc, const char* const* argv) {
  return run(std::vector<std::string>(argv + 1, argv + argc));
}

}  // namespace xcorr::cli
