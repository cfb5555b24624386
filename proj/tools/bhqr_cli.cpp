// Command-line front end: fit, sweep, simulate and diagnose.
//
// Exit codes: 0 success, 1 model or data error, 2 usage error.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bhqr/bhqr.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitModel = 1;
constexpr int kExitUsage = 2;

struct ChainFlags {
  int chains = 3;
  int iterations = 10000;
  int burn_in = 1000;
  int thinning = 90;
  std::uint64_t seed = 20210601;
  bool heavy = false;
  CLI::Option* iterations_opt = nullptr;
  CLI::Option* burn_in_opt = nullptr;
  CLI::Option* thinning_opt = nullptr;
  CLI::Option* chains_opt = nullptr;

  void add(CLI::App& app) {
    chains_opt = app.add_option("--chains", chains, "Number of MCMC chains")->capture_default_str();
    iterations_opt = app.add_option("--iters", iterations, "Iterations per chain")->capture_default_str();
    burn_in_opt = app.add_option("--burnin", burn_in, "Burn-in iterations")->capture_default_str();
    thinning_opt = app.add_option("--thin", thinning, "Thinning interval")->capture_default_str();
    app.add_option("--seed", seed, "Random seed")->capture_default_str();
    app.add_flag("--heavy", heavy, "Use 100000 iterations, burn-in 50000, thinning 160");
  }

  bhqr::ChainConfig config() const {
    bhqr::ChainConfig c{chains, iterations, burn_in, thinning, seed};
    if (heavy) {
      const bhqr::ChainConfig h = bhqr::ChainConfig::heavy();
      if (iterations_opt->count() == 0) c.iterations = h.iterations;
      if (burn_in_opt->count() == 0) c.burn_in = h.burn_in;
      if (thinning_opt->count() == 0) c.thinning = h.thinning;
    }
    c.validate();
    return c;
  }
};

std::vector<std::string> split_list(const std::vector<std::string>& items) {
  std::vector<std::string> out;
  for (const auto& item : items) {
    std::stringstream ss(item);
    std::string part;
    while (std::getline(ss, part, ',')) {
      if (!part.empty()) out.push_back(part);
    }
  }
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  const auto v = bhqr::parse_number(s);
  if (!v) throw bhqr::ConfigError("cannot parse " + what + " '" + s + "'");
  return *v;
}

// Each entry is a number or range:start:stop:step (inclusive of stop).
std::vector<double> parse_taus(const std::vector<std::string>& items) {
  std::vector<double> taus;
  for (const auto& item : items) {
    if (item.rfind("range:", 0) == 0) {
      std::vector<std::string> parts;
      std::stringstream ss(item.substr(6));
      std::string p;
      while (std::getline(ss, p, ':')) parts.push_back(p);
      if (parts.size() != 3) throw bhqr::ConfigError("tau range must look like range:start:stop:step");
      const double start = parse_double(parts[0], "tau range start");
      const double stop = parse_double(parts[1], "tau range stop");
      const double step = parse_double(parts[2], "tau range step");
      if (!(step > 0.0) || stop < start) throw bhqr::ConfigError("tau range needs step > 0 and stop >= start");
      const auto count = static_cast<long>(std::floor((stop - start) / step + 1e-9)) + 1;
      for (long i = 0; i < count; ++i) {
        taus.push_back(std::round((start + static_cast<double>(i) * step) * 1e10) / 1e10);
      }
    } else {
      for (const auto& s : split_list({item})) taus.push_back(parse_double(s, "tau"));
    }
  }
  for (double t : taus) {
    if (!(t > 0.0 && t < 1.0)) throw bhqr::ConfigError("quantile levels must lie in (0, 1)");
  }
  std::sort(taus.begin(), taus.end());
  taus.erase(std::unique(taus.begin(), taus.end()), taus.end());
  if (taus.empty()) throw bhqr::ConfigError("at least one --tau is required");
  return taus;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw bhqr::Error("cannot write '" + path.string() + "'");
  out << content;
}

// ---------------------------------------------------------------------------
// fit / sweep

struct FitOptions {
  std::string input;
  std::string count_col;
  std::vector<std::string> covariates;
  std::vector<std::string> logit_covariates;
  std::vector<std::string> log_columns;
  std::string hurdle = "3";
  double threshold = bhqr::kDefaultMassPointThreshold;
  std::vector<std::string> taus;
  double level = 0.95;
  double psrf_limit = 1.1;
  std::string out_dir = "bhqr_out";
  bool save_draws = false;
  int jobs = 1;
  ChainFlags chain;
};

struct TauResult {
  double tau;
  std::optional<bhqr::QrPartFit> fit;
  std::string error;
};

bhqr::Json fit_json(const TauResult& r, const FitOptions& opt, std::ostringstream& trajectories) {
  bhqr::Json j = bhqr::Json::object();
  j["tau_requested"] = r.tau;
  if (!r.fit) {
    j["tau_effective"] = nullptr;
    j["n_used"] = nullptr;
    j["parameters"] = bhqr::Json::object();
    j["warnings"] = bhqr::Json::array();
    j["error"] = r.error;
    return j;
  }
  const auto summary = bhqr::summarize(r.fit->qr.draws, opt.level);
  bhqr::Json warnings = bhqr::Json::array();
  for (const auto& s : summary) {
    if (s.psrf && *s.psrf > opt.psrf_limit) {
      warnings.push_back("psrf of " + s.name + " is " + bhqr::format_number(*s.psrf) + ", above the limit " +
                    bhqr::format_number(opt.psrf_limit));
    }
    for (const auto& [stat, value] : {std::pair<const char*, double>{"mean", s.mean},
                                      {"lower", s.lower},
                                      {"upper", s.upper}}) {
      trajectories << bhqr::format_number(r.tau) << ',' << bhqr::format_number(r.fit->tau_effective.value()) << ','
                   << bhqr::csv_escape(s.name) << ',' << stat << ',' << bhqr::format_number(value) << '\n';
    }
  }
  j["tau_effective"] = r.fit->tau_effective.value();
  j["n_used"] = r.fit->rows_used.size();
  j["parameters"] = bhqr::summary_json(summary);
  j["warnings"] = std::move(warnings);
  j["error"] = nullptr;
  return j;
}

int run_fit(const FitOptions& opt) {
  std::vector<std::string> x_cols = split_list(opt.covariates);
  std::vector<std::string> z_cols = opt.logit_covariates.empty() ? x_cols : split_list(opt.logit_covariates);
  const std::vector<double> taus = parse_taus(opt.taus);
  const bhqr::ChainConfig config = opt.chain.config();
  if (!(opt.level > 0.0 && opt.level < 1.0)) throw bhqr::ConfigError("--level must lie in (0, 1)");
  if (opt.jobs < 1) throw bhqr::ConfigError("--jobs must be positive");
  if (!(opt.threshold > 0.0 && opt.threshold < 1.0)) throw bhqr::ConfigError("--threshold must lie in (0, 1)");

  bhqr::CsvSchema schema;
  schema.count_column = opt.count_col;
  schema.covariates = x_cols;
  for (const auto& c : z_cols) {
    if (std::find(schema.covariates.begin(), schema.covariates.end(), c) == schema.covariates.end()) {
      schema.covariates.push_back(c);
    }
  }
  for (const auto& c : split_list(opt.log_columns)) schema.transforms[c] = bhqr::ColumnTransform::kLog;
  const bhqr::Dataset dataset = bhqr::load_csv(opt.input, schema);
  if (dataset.rows_used() == 0) throw bhqr::Error("no usable rows in '" + opt.input + "'");
  const bhqr::HurdleDataset data = bhqr::to_hurdle_dataset(dataset, x_cols, z_cols);

  bhqr::HurdleSpec hurdle;
  std::string hurdle_mode;
  std::optional<bhqr::HurdleDetection> detection;
  if (opt.hurdle == "none") {
    hurdle = bhqr::HurdleSpec::none(opt.threshold);
    hurdle_mode = "none";
  } else if (opt.hurdle == "auto") {
    detection = bhqr::detect_hurdle(data.counts, opt.threshold);
    hurdle = detection->spec;
    hurdle_mode = "auto";
  } else {
    const double c = parse_double(opt.hurdle, "--hurdle");
    if (c < 0 || std::floor(c) != c) throw bhqr::ConfigError("--hurdle must be a nonnegative integer, auto or none");
    hurdle = bhqr::HurdleSpec::at(static_cast<int>(c), opt.threshold);
    hurdle_mode = "explicit";
  }

  const bhqr::QrPriors qr_priors = bhqr::QrPriors::vague(data.x.cols());
  std::optional<bhqr::LogisticPosterior> logistic;
  if (hurdle.has_hurdle()) {
    logistic = bhqr::fit_logistic(bhqr::hurdle_indicators(data, hurdle), bhqr::LogisticPriors::vague(data.z.cols()),
                                  config);
  }

  auto fit_one = [&](double tau) {
    TauResult r{tau, std::nullopt, ""};
    try {
      r.fit = bhqr::fit_qr_part(data, hurdle, bhqr::QuantileLevel(tau), qr_priors, config);
    } catch (const bhqr::Error& e) {
      r.error = e.what();
    }
    return r;
  };
  std::vector<TauResult> results;
  for (std::size_t start = 0; start < taus.size(); start += static_cast<std::size_t>(opt.jobs)) {
    std::vector<std::future<TauResult>> batch;
    for (std::size_t i = start; i < std::min(taus.size(), start + static_cast<std::size_t>(opt.jobs)); ++i) {
      batch.push_back(std::async(std::launch::async, fit_one, taus[i]));
    }
    for (auto& f : batch) results.push_back(f.get());
  }

  const fs::path out_dir(opt.out_dir);
  fs::create_directories(out_dir);

  bhqr::Json summary = bhqr::Json::object();
  summary["input"] = opt.input;
  summary["count_column"] = opt.count_col;
  bhqr::Json hurdle_json = bhqr::Json::object();
  hurdle_json["mode"] = hurdle_mode;
  hurdle_json["c"] = bhqr::optional_json(hurdle.c);
  hurdle_json["threshold"] = hurdle.threshold;
  if (detection) {
    bhqr::Json freq = bhqr::Json::object();
    for (const auto& [value, count] : detection->table.counts) {
      if (count == 0) continue;
      freq[std::to_string(value)] = detection->table.proportion(value);
    }
    hurdle_json["frequencies"] = std::move(freq);
  }
  summary["hurdle"] = std::move(hurdle_json);
  summary["rows"] = {{"in", dataset.rows_in}, {"used", dataset.rows_used()}, {"rejected", dataset.rows_rejected}};
  summary["chain_config"] = bhqr::chain_config_json(config);
  summary["level"] = opt.level;

  if (logistic) {
    const auto logit_summary = bhqr::summarize(logistic->draws, opt.level);
    summary["logistic"] = bhqr::summary_json(logit_summary);
    std::ostringstream table;
    table << "parameter,lower,mean,upper,sd,odds_effect_percent\n";
    for (const auto& s : logit_summary) {
      table << bhqr::csv_escape(s.name) << ',' << bhqr::format_number(s.lower) << ',' << bhqr::format_number(s.mean)
            << ',' << bhqr::format_number(s.upper) << ',' << bhqr::format_number(s.sd) << ','
            << bhqr::format_number(bhqr::odds_effect(s.mean)) << '\n';
    }
    write_file(out_dir / "logistic.csv", table.str());
    if (opt.save_draws) {
      std::ostringstream os;
      bhqr::write_draws_csv(os, logistic->draws);
      write_file(out_dir / "draws_logistic.csv", os.str());
    }
  }

  std::ostringstream trajectories;
  trajectories << "tau_requested,tau_effective,parameter,statistic,value\n";
  bhqr::Json fits = bhqr::Json::array();
  int failures = 0;
  for (const auto& r : results) {
    bhqr::Json j = fit_json(r, opt, trajectories);
    const std::string tag = bhqr::format_level(r.tau);
    write_file(out_dir / ("fit_tau_" + tag + ".json"), bhqr::json_text(j));
    fits.push_back(j);
    if (!r.fit) {
      ++failures;
      std::cerr << "tau " << tag << ": " << r.error << '\n';
    } else if (opt.save_draws) {
      std::ostringstream os;
      bhqr::write_draws_csv(os, r.fit->qr.draws);
      write_file(out_dir / ("draws_tau_" + tag + ".csv"), os.str());
    }
  }
  summary["fits"] = std::move(fits);
  write_file(out_dir / "summary.json", bhqr::json_text(summary));
  write_file(out_dir / "trajectories.csv", trajectories.str());

  for (const auto& r : results) {
    if (r.fit) {
      std::ostringstream os;
      bhqr::write_jitter_audit_csv(os, r.fit->jitter_audit);
      write_file(out_dir / "jitter_audit.csv", os.str());
      break;
    }
  }

  std::cout << "fitted " << results.size() - static_cast<std::size_t>(failures) << " of " << results.size()
            << " quantile levels; rows used " << dataset.rows_used() << ", rejected " << dataset.rows_rejected
            << "; output in " << out_dir.string() << '\n';
  return failures == static_cast<int>(results.size()) ? kExitModel : kExitOk;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOptions {
  bhqr::SimConfig sim;
  std::vector<std::string> taus{"0.85"};
  std::string out = "simulation.csv";
  ChainFlags chain;
};

int run_simulate(SimulateOptions opt) {
  opt.sim.taus = parse_taus(opt.taus);
  opt.sim.chain = opt.chain.config();
  opt.sim.seed = opt.chain.seed;
  opt.sim.validate();
  const bhqr::ReplicationStudy study = bhqr::run_replication_study(opt.sim);
  {
    std::ostringstream os;
    bhqr::write_simulation_csv(os, study.rows);
    const fs::path out(opt.out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    write_file(out, os.str());
  }
  for (const auto& f : study.failures) std::cerr << "failed " << f << '\n';
  std::cout << "replications: " << study.successful << " succeeded, " << study.failed << " failed\n";
  if (study.successful == 0) return kExitModel;
  std::cout << std::left << std::setw(8) << "tau" << std::setw(12) << "model" << std::setw(14) << "med|y-yhat|"
            << std::setw(14) << "mse" << std::setw(14) << "ci_width_x1" << std::setw(14) << "ci_width_x2" << '\n';
  for (double tau : opt.sim.taus) {
    for (const auto& model : bhqr::study_models(opt.sim.hurdle_c)) {
      const std::string label = model.label();
      std::cout << std::setw(8) << bhqr::format_level(tau) << std::setw(12) << label << std::setw(14)
                << bhqr::median_metric(study.rows, label, tau, "prediction_error_median_abs") << std::setw(14)
                << bhqr::median_metric(study.rows, label, tau, "mse") << std::setw(14)
                << bhqr::median_metric(study.rows, label, tau, "ci_width", "x1") << std::setw(14)
                << bhqr::median_metric(study.rows, label, tau, "ci_width", "x2") << '\n';
    }
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// diagnose

struct DiagnoseOptions {
  std::string draws;
  int max_lag = 20;
  double level = 0.95;
  std::string out;
};

int run_diagnose(const DiagnoseOptions& opt) {
  std::ifstream in(opt.draws);
  if (!in) throw bhqr::Error("cannot open draws file '" + opt.draws + "'");
  const bhqr::PosteriorDraws draws = bhqr::read_draws_csv(in);
  if (opt.max_lag < 0) throw bhqr::ConfigError("--max-lag must be nonnegative");
  bhqr::Json out = bhqr::Json::object();
  out["chains"] = draws.chain_count();
  out["parameters"] = bhqr::summary_json(bhqr::summarize(draws, opt.level));
  bhqr::Json acf = bhqr::Json::object();
  for (std::size_t j = 0; j < draws.parameter_count(); ++j) {
    bhqr::Json per_chain = bhqr::Json::array();
    for (const auto& chain : draws.parameter(j)) {
      bhqr::Json lags = bhqr::Json::array();
      try {
        const auto lag_count = std::min<std::size_t>(static_cast<std::size_t>(opt.max_lag), chain.size() - 1);
        for (double r : bhqr::autocorrelation(chain, lag_count)) lags.push_back(r);
      } catch (const bhqr::Error&) {
      }
      per_chain.push_back(std::move(lags));
    }
    acf[draws.parameter_names[j]] = std::move(per_chain);
  }
  out["autocorrelation"] = std::move(acf);
  if (opt.out.empty()) {
    std::cout << bhqr::json_text(out);
  } else {
    write_file(opt.out, bhqr::json_text(out));
  }
  return kExitOk;
}

void add_fit_options(CLI::App& cmd, FitOptions& opt, bool sweep) {
  cmd.add_option("--input", opt.input, "Input CSV with a header row")->required();
  cmd.add_option("--count-col", opt.count_col, "Name of the count column")->required();
  cmd.add_option("--covariates", opt.covariates, "Covariates of the quantile part (comma separated)")->required();
  cmd.add_option("--logit-covariates", opt.logit_covariates, "Covariates of the logistic part (default: same)");
  cmd.add_option("--log-transform", opt.log_columns, "Covariates to replace by their natural log");
  cmd.add_option("--hurdle", opt.hurdle, "Hurdle point: an integer, auto or none")->capture_default_str();
  cmd.add_option("--threshold", opt.threshold, "Mass-point threshold for --hurdle auto")->capture_default_str();
  auto* tau = cmd.add_option("--tau", opt.taus, "Quantile level(s) or range:start:stop:step");
  if (sweep) {
    opt.taus = {"range:0.05:0.95:0.05"};
    tau->capture_default_str();
  } else {
    tau->required();
  }
  cmd.add_option("--level", opt.level, "Credible level")->capture_default_str();
  cmd.add_option("--psrf-limit", opt.psrf_limit, "PSRF above which a warning is recorded")->capture_default_str();
  cmd.add_option("--out-dir", opt.out_dir, "Output directory")->capture_default_str();
  cmd.add_flag("--save-draws", opt.save_draws, "Also write posterior draws as CSV");
  cmd.add_option("--jobs", opt.jobs, "Quantile levels fitted concurrently")->capture_default_str();
  opt.chain.add(cmd);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian two-part hurdle quantile regression for counts with mass points"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Flat key = value file; command-line flags take precedence");

  FitOptions fit_opt;
  auto* fit = app.add_subcommand("fit", "Fit the model at one or more quantile levels");
  add_fit_options(*fit, fit_opt, false);

  FitOptions sweep_opt;
  auto* sweep = app.add_subcommand("sweep", "Fit over a grid of quantile levels (default 0.05 to 0.95)");
  add_fit_options(*sweep, sweep_opt, true);

  SimulateOptions sim_opt;
  sim_opt.chain.seed = sim_opt.sim.seed;
  auto* simulate = app.add_subcommand("simulate", "Run the replication study on simulated citation counts");
  simulate->add_option("--n", sim_opt.sim.n, "Sample size")->capture_default_str();
  simulate->add_option("--replications", sim_opt.sim.replications, "Number of replications")->capture_default_str();
  simulate->add_option("--tau", sim_opt.taus, "Full-data quantile level(s)")->capture_default_str();
  simulate->add_option("--hurdle-c", sim_opt.sim.hurdle_c, "Hurdle point of the shifted model")->capture_default_str();
  simulate->add_option("--level", sim_opt.sim.level, "Credible level")->capture_default_str();
  simulate->add_option("--out", sim_opt.out, "Output CSV")->capture_default_str();
  sim_opt.chain.add(*simulate);

  DiagnoseOptions diag_opt;
  auto* diagnose = app.add_subcommand("diagnose", "PSRF, ESS and autocorrelation of saved draws");
  diagnose->add_option("--draws", diag_opt.draws, "Draws CSV written by fit --save-draws")->required();
  diagnose->add_option("--max-lag", diag_opt.max_lag, "Largest autocorrelation lag")->capture_default_str();
  diagnose->add_option("--level", diag_opt.level, "Credible level")->capture_default_str();
  diagnose->add_option("--out", diag_opt.out, "Output JSON (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*fit) return run_fit(fit_opt);
    if (*sweep) return run_fit(sweep_opt);
    if (*simulate) return run_simulate(sim_opt);
    if (*diagnose) return run_diagnose(diag_opt);
  } catch (const bhqr::ConfigError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const bhqr::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitModel;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitModel;
  }
  return kExitUsage;
}
