// netshift: estimate | simulate | benchmark.
//
// Every command reads one JSON config (strict keys), applies flag overrides,
// writes its outputs plus the resolved config into --out, and reports errors
// as machine-readable JSON on stdout. Exit codes: 0 success, 1 estimation
// failure, 2 input or validation failure. Logs go to stderr only.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "netshift/estimate.hpp"
#include "netshift/frame.hpp"
#include "netshift/jsonutil.hpp"
#include "netshift/network.hpp"
#include "netshift/nuisance.hpp"
#include "netshift/parallel.hpp"
#include "netshift/policy.hpp"
#include "netshift/rng.hpp"
#include "netshift/sim.hpp"
#include "netshift/summary.hpp"

namespace fs = std::filesystem;
using namespace netshift;

namespace {

struct Flags {
  std::string config_path;
  std::string out_dir = ".";
  bool quiet = false;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<int> folds;
  std::optional<std::string> clip;  // "lo,hi"
};

void log_line(const Flags& flags, const std::string& msg) {
  if (!flags.quiet) std::cerr << "netshift: " << msg << '\n';
}

[[noreturn]] void fail(int code, const std::string& phase, const std::string& message) {
  Json j;
  j["error"]["code"] = code;
  j["error"]["phase"] = phase;
  j["error"]["message"] = message;
  std::cout << j.dump(2) << std::endl;
  std::cerr << "netshift: error (" << phase << "): " << message << '\n';
  std::exit(code);
}

Json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  Json j;
  try {
    in >> j;
  } catch (const Json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return j;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

void write_json(const fs::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

std::pair<double, double> parse_clip(const std::string& text) {
  double lo = 0.0, hi = 0.0;
  char extra = 0;
  if (std::sscanf(text.c_str(), "%lf,%lf%c", &lo, &hi, &extra) != 2)
    throw ConfigError("--clip expects 'lo,hi', got '" + text + "'");
  return {lo, hi};
}

std::uint64_t parse_seed_json(const Json& j, const char* key, const std::string& where) {
  if (!j.at(key).is_number_integer() || j.at(key).get<std::int64_t>() < 0)
    throw ConfigError(where + ": '" + std::string(key) + "' must be a non-negative integer");
  return j.at(key).get<std::uint64_t>();
}

Policy policy_with_delta(const Policy& base, double delta) {
  switch (base.kind()) {
    case PolicyKind::kAdditive:
      return Policy::additive(delta);
    case PolicyKind::kMultiplicative:
      return Policy::multiplicative(delta);
    case PolicyKind::kPiecewiseAdditive:
      return Policy::piecewise_additive(delta, base.region(), base.multiplier_column());
  }
  throw std::logic_error("policy_with_delta: unreachable");
}

// ---------------------------------------------------------------------------
// estimate

struct EstimateRunConfig {
  std::string csv_path;
  std::string edge_list_path;
  std::string exposure_column = "A";
  std::string outcome_column = "Y";
  std::vector<std::string> covariates;  // empty means every non-exposure column
  std::optional<Policy> policy;
  std::vector<double> delta_grid;  // empty means the policy's own delta
  SummarySpec summary;
  std::vector<std::string> methods = {"one-step", "tmle"};
  std::vector<LearnerSpec> m_library;
  std::vector<LearnerSpec> r_library;
  int folds = 5;
  double alpha = 0.05;
  double clip_lo = 1e-3;
  double clip_hi = 1e3;
  TmleMode tmle_mode = TmleMode::kWeightedIntercept;
  int tmle_max_iterations = 100;
  double tmle_score_tolerance = 1e-10;
  double positivity_tolerance = 0.05;
  int degree_bin = 1;
  std::uint64_t seed = 1;
  int threads = 0;

  static EstimateRunConfig from_json(const Json& j);
  Json to_json() const;
};

EstimateRunConfig EstimateRunConfig::from_json(const Json& j) {
  require_keys(j,
               {"data", "policy", "delta_grid", "summary", "methods", "m_library", "r_library",
                "folds", "alpha", "clip", "tmle", "degree_bin", "positivity_tolerance", "seed",
                "threads"},
               "estimate config");
  EstimateRunConfig cfg;
  if (!j.contains("data")) throw ConfigError("estimate config: missing 'data'");
  const Json& d = j.at("data");
  require_keys(d, {"csv", "edge_list", "exposure", "outcome", "covariates", "summarize"},
               "estimate config data");
  auto need_string = [&](const char* key) {
    if (!d.contains(key) || !d.at(key).is_string())
      throw ConfigError(std::string("estimate config data: missing string '") + key + "'");
    return d.at(key).get<std::string>();
  };
  cfg.csv_path = need_string("csv");
  cfg.edge_list_path = need_string("edge_list");
  if (d.contains("exposure")) cfg.exposure_column = need_string("exposure");
  if (d.contains("outcome")) cfg.outcome_column = need_string("outcome");
  auto read_names = [&](const char* key) {
    std::vector<std::string> names;
    if (!d.contains(key)) return names;
    if (!d.at(key).is_array())
      throw ConfigError(std::string("estimate config data: '") + key +
                        "' must be an array of column names");
    for (const auto& item : d.at(key)) {
      if (!item.is_string())
        throw ConfigError(std::string("estimate config data: '") + key +
                          "' must be an array of column names");
      names.push_back(item.get<std::string>());
    }
    return names;
  };
  cfg.covariates = read_names("covariates");
  const std::vector<std::string> summarize = read_names("summarize");

  if (!j.contains("policy")) throw ConfigError("estimate config: missing 'policy'");
  cfg.policy = Policy::from_json(j.at("policy"));
  if (j.contains("delta_grid")) {
    if (!j.at("delta_grid").is_array() || j.at("delta_grid").empty())
      throw ConfigError("estimate config: 'delta_grid' must be a non-empty array");
    for (const auto& item : j.at("delta_grid")) {
      if (!item.is_number())
        throw ConfigError("estimate config: 'delta_grid' must contain numbers");
      cfg.delta_grid.push_back(item.get<double>());
    }
  }
  if (j.contains("summary")) cfg.summary = SummarySpec::from_json(j.at("summary"));
  if (!summarize.empty()) {
    if (!cfg.summary.covariates.empty())
      throw ConfigError(
          "estimate config: set either data.summarize or summary.covariates, not both");
    cfg.summary.covariates = summarize;
  }
  if (j.contains("methods")) {
    if (!j.at("methods").is_array() || j.at("methods").empty())
      throw ConfigError("estimate config: 'methods' must be a non-empty array");
    cfg.methods.clear();
    for (const auto& item : j.at("methods")) {
      if (!item.is_string()) throw ConfigError("estimate config: 'methods' must contain strings");
      const std::string m = item.get<std::string>();
      if (m != "plugin" && m != "one-step" && m != "tmle")
        throw ConfigError("estimate config: unknown method '" + m + "'");
      cfg.methods.push_back(m);
    }
  }
  auto read_library = [&](const char* key) {
    std::vector<LearnerSpec> lib;
    if (!j.contains(key)) return lib;
    if (!j.at(key).is_array())
      throw ConfigError(std::string("estimate config: '") + key + "' must be an array");
    for (const auto& item : j.at(key)) lib.push_back(LearnerSpec::from_json(item));
    return lib;
  };
  cfg.m_library = read_library("m_library");
  cfg.r_library = read_library("r_library");
  if (j.contains("folds"))
    cfg.folds = static_cast<int>(require_number(j, "folds", "estimate config"));
  if (j.contains("alpha")) cfg.alpha = require_number(j, "alpha", "estimate config");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0))
    throw ConfigError("estimate config: 'alpha' must be in (0, 1)");
  if (j.contains("clip")) {
    const Json& clip = j.at("clip");
    if (!clip.is_array() || clip.size() != 2 || !clip[0].is_number() || !clip[1].is_number())
      throw ConfigError("estimate config: 'clip' must be [lo, hi]");
    cfg.clip_lo = clip[0].get<double>();
    cfg.clip_hi = clip[1].get<double>();
  }
  if (j.contains("tmle")) {
    const Json& t = j.at("tmle");
    require_keys(t, {"mode", "max_iterations", "score_tolerance"}, "estimate config tmle");
    if (t.contains("mode")) {
      if (!t.at("mode").is_string())
        throw ConfigError("estimate config tmle: 'mode' must be a string");
      const std::string mode = t.at("mode").get<std::string>();
      if (mode == "weighted-intercept")
        cfg.tmle_mode = TmleMode::kWeightedIntercept;
      else if (mode == "covariate")
        cfg.tmle_mode = TmleMode::kCovariate;
      else
        throw ConfigError("estimate config tmle: unknown mode '" + mode + "'");
    }
    if (t.contains("max_iterations"))
      cfg.tmle_max_iterations =
          static_cast<int>(require_number(t, "max_iterations", "estimate config tmle"));
    if (t.contains("score_tolerance"))
      cfg.tmle_score_tolerance = require_number(t, "score_tolerance", "estimate config tmle");
  }
  if (j.contains("degree_bin"))
    cfg.degree_bin = static_cast<int>(require_number(j, "degree_bin", "estimate config"));
  if (j.contains("positivity_tolerance"))
    cfg.positivity_tolerance = require_number(j, "positivity_tolerance", "estimate config");
  if (j.contains("seed")) cfg.seed = parse_seed_json(j, "seed", "estimate config");
  if (j.contains("threads"))
    cfg.threads = static_cast<int>(require_number(j, "threads", "estimate config"));
  return cfg;
}

Json EstimateRunConfig::to_json() const {
  Json j;
  j["data"]["csv"] = csv_path;
  j["data"]["edge_list"] = edge_list_path;
  j["data"]["exposure"] = exposure_column;
  j["data"]["outcome"] = outcome_column;
  if (!covariates.empty()) j["data"]["covariates"] = covariates;
  j["policy"] = policy->to_json();
  if (!delta_grid.empty()) j["delta_grid"] = delta_grid;
  j["summary"] = summary.to_json();
  j["methods"] = methods;
  j["m_library"] = Json::array();
  for (const auto& l : m_library) j["m_library"].push_back(l.to_json());
  j["r_library"] = Json::array();
  for (const auto& l : r_library) j["r_library"].push_back(l.to_json());
  j["folds"] = folds;
  j["alpha"] = alpha;
  j["clip"] = Json::array({clip_lo, clip_hi});
  j["tmle"]["mode"] =
      tmle_mode == TmleMode::kWeightedIntercept ? "weighted-intercept" : "covariate";
  j["tmle"]["max_iterations"] = tmle_max_iterations;
  j["tmle"]["score_tolerance"] = tmle_score_tolerance;
  j["degree_bin"] = degree_bin;
  j["positivity_tolerance"] = positivity_tolerance;
  j["seed"] = seed;
  j["threads"] = threads;
  return j;
}

Frame select_covariates(Frame frame, const std::vector<std::string>& names) {
  if (names.empty()) return frame;
  std::vector<std::string> kept_names;
  std::vector<std::vector<double>> kept_cols;
  for (const auto& name : names) {
    if (frame.covariate_index(name) < 0)
      throw ConfigError("estimate config data: covariate column '" + name +
                        "' not found in the CSV");
    kept_names.push_back(name);
    kept_cols.push_back(frame.covariate(name));
  }
  std::optional<std::vector<double>> outcome;
  if (frame.has_outcome()) outcome = frame.outcome();
  return Frame(std::move(kept_names), std::move(kept_cols), frame.exposure(), std::move(outcome));
}

int cmd_estimate(const Flags& flags) {
  EstimateRunConfig cfg;
  Frame frame({}, {}, {0.0}, std::nullopt);  // placeholder; replaced below
  std::optional<Network> net;
  try {
    Json j = load_config(flags.config_path);
    cfg = EstimateRunConfig::from_json(j);
    if (flags.seed) cfg.seed = *flags.seed;
    if (flags.threads) cfg.threads = *flags.threads;
    if (flags.folds) cfg.folds = *flags.folds;
    if (flags.clip) {
      const auto [lo, hi] = parse_clip(*flags.clip);
      cfg.clip_lo = lo;
      cfg.clip_hi = hi;
    }
    if (cfg.outcome_column.empty())
      throw ConfigError("estimate config data: 'outcome' must name a column");
    log_line(flags, "loading " + cfg.csv_path);
    frame = select_covariates(load_frame(cfg.csv_path, cfg.exposure_column, cfg.outcome_column),
                              cfg.covariates);
    log_line(flags, "loading " + cfg.edge_list_path);
    net = load_edge_list(cfg.edge_list_path);
    if (net->size() != frame.n())
      throw ConfigError("estimate config: edge list has " + std::to_string(net->size()) +
                        " nodes but the CSV has " + std::to_string(frame.n()) + " rows");
  } catch (const std::exception& e) {
    fail(2, "input", e.what());
  }

  try {
    fs::create_directories(flags.out_dir);
    write_json(fs::path(flags.out_dir) / "resolved_config.json", cfg.to_json());

    const std::vector<double> deltas =
        cfg.delta_grid.empty() ? std::vector<double>{cfg.policy->delta()} : cfg.delta_grid;
    const double alpha_eff =
        deltas.size() > 1 ? cfg.alpha / static_cast<double>(deltas.size()) : cfg.alpha;
    if (deltas.size() > 1)
      log_line(flags, "delta grid of " + std::to_string(deltas.size()) +
                          ", Bonferroni-adjusted alpha = " + std::to_string(alpha_eff));

    const DependencyStructure dep(*net);
    const int k = choose_fold_count(frame.n(), cfg.folds);
    const FoldPlan folds = make_folds(frame.n(), k, Rng(cfg.seed).substream("folds").next());
    const auto& m_lib = cfg.m_library.empty() ? default_regression_library() : cfg.m_library;
    const auto& r_lib =
        cfg.r_library.empty() ? default_classification_library() : cfg.r_library;

    EstimationOptions opt;
    opt.alpha = alpha_eff;
    opt.tmle_mode = cfg.tmle_mode;
    opt.tmle_max_iterations = cfg.tmle_max_iterations;
    opt.tmle_score_tolerance = cfg.tmle_score_tolerance;
    opt.positivity_tolerance = cfg.positivity_tolerance;
    opt.degree_bin = cfg.degree_bin;

    Json summary_out = Json::array();
    for (std::size_t di = 0; di < deltas.size(); ++di) {
      const Policy policy = policy_with_delta(*cfg.policy, deltas[di]);
      const SummarizedFrame sf = summarize(frame, *net, cfg.summary, policy);
      const NuisanceFit nf =
          fit_nuisances(sf, policy, m_lib, r_lib, folds, cfg.clip_lo, cfg.clip_hi);
      for (const std::string& method : cfg.methods) {
        EstimateResult res;
        if (method == "plugin")
          res = plugin(sf, nf, dep, opt);
        else if (method == "one-step")
          res = one_step(sf, nf, dep, opt);
        else
          res = tmle(sf, nf, dep, opt);
        if (res.positivity.any_flagged())
          log_line(flags, method + " delta=" + std::to_string(deltas[di]) + ": " +
                              std::to_string(res.positivity.flagged_count()) +
                              " degree strata fail the positivity screen");
        std::string name = "estimate_" + method;
        if (deltas.size() > 1) name += "_delta" + std::to_string(di);
        name += ".json";
        write_json(fs::path(flags.out_dir) / name, res.to_json());
        Json row;
        row["file"] = name;
        row["method"] = method;
        row["delta"] = deltas[di];
        row["psi"] = res.psi;
        if (res.has_variance) row["ci"] = Json::array({res.ci_lo, res.ci_hi});
        summary_out.push_back(row);
      }
    }
    write_json(fs::path(flags.out_dir) / "results.json", summary_out);
    std::cout << summary_out.dump(2) << std::endl;
  } catch (const std::exception& e) {
    fail(1, "estimation", e.what());
  }
  return 0;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateRunConfig {
  DgpSpec dgp;
  NetworkSpec network;
  int n = 0;
  std::optional<Policy> policy;
  SummarySpec summary;
  int truth_reps = 400;
  std::uint64_t seed = 1;

  static SimulateRunConfig from_json(const Json& j);
  Json to_json() const;
};

SimulateRunConfig SimulateRunConfig::from_json(const Json& j) {
  require_keys(j, {"dgp", "network", "n", "policy", "summary", "truth_reps", "seed"},
               "simulate config");
  SimulateRunConfig cfg;
  if (!j.contains("dgp")) throw ConfigError("simulate config: missing 'dgp'");
  cfg.dgp = DgpSpec::from_json(j.at("dgp"));
  if (!j.contains("network")) throw ConfigError("simulate config: missing 'network'");
  cfg.network = NetworkSpec::from_json(j.at("network"));
  cfg.n = static_cast<int>(require_number(j, "n", "simulate config"));
  if (cfg.n < 2) throw ConfigError("simulate config: 'n' must be >= 2");
  if (!j.contains("policy")) throw ConfigError("simulate config: missing 'policy'");
  cfg.policy = Policy::from_json(j.at("policy"));
  if (j.contains("summary")) cfg.summary = SummarySpec::from_json(j.at("summary"));
  if (j.contains("truth_reps"))
    cfg.truth_reps = static_cast<int>(require_number(j, "truth_reps", "simulate config"));
  if (cfg.truth_reps < 1) throw ConfigError("simulate config: 'truth_reps' must be >= 1");
  if (j.contains("seed")) cfg.seed = parse_seed_json(j, "seed", "simulate config");
  return cfg;
}

Json SimulateRunConfig::to_json() const {
  Json j;
  j["dgp"] = dgp.to_json();
  j["network"] = network.to_json();
  j["n"] = n;
  j["policy"] = policy->to_json();
  j["summary"] = summary.to_json();
  j["truth_reps"] = truth_reps;
  j["seed"] = seed;
  return j;
}

int cmd_simulate(const Flags& flags) {
  SimulateRunConfig cfg;
  try {
    Json j = load_config(flags.config_path);
    cfg = SimulateRunConfig::from_json(j);
    if (flags.seed) cfg.seed = *flags.seed;
  } catch (const std::exception& e) {
    fail(2, "input", e.what());
  }

  try {
    fs::create_directories(flags.out_dir);
    write_json(fs::path(flags.out_dir) / "resolved_config.json", cfg.to_json());

    Rng root(cfg.seed);
    const Network net = cfg.network.build(cfg.n, root.substream("graph").next());
    DgpSpec dgp = cfg.dgp;
    if (dgp.kind == DgpSpec::Kind::kLinearNetwork && dgp.linear.fixed_covariates)
      dgp.linear.covariate_seed = root.substream("covariates").next();
    const Frame frame = draw_frame(dgp, net, root.substream("sample").next());

    if (cfg.truth_reps < 100)
      log_line(flags, "warning: truth_reps = " + std::to_string(cfg.truth_reps) +
                          " < 100; the Monte Carlo ground truth will be noisy");
    const GroundTruth gt = ground_truth(dgp, *cfg.policy, cfg.summary, net, cfg.truth_reps,
                                        root.substream("truth").next());

    save_frame(frame, (fs::path(flags.out_dir) / "frame.csv").string());
    save_edge_list(net, (fs::path(flags.out_dir) / "network.edges").string());
    Json truth;
    truth["psi"] = gt.psi;
    truth["mc_se"] = gt.mc_se;
    truth["reps"] = gt.reps;
    truth["low_rep_warning"] = gt.low_rep_warning;
    write_json(fs::path(flags.out_dir) / "truth.json", truth);
    std::cout << truth.dump(2) << std::endl;
  } catch (const std::exception& e) {
    fail(1, "simulation", e.what());
  }
  return 0;
}

// ---------------------------------------------------------------------------
// benchmark

int cmd_benchmark(const Flags& flags) {
  BenchmarkConfig cfg;
  try {
    Json j = load_config(flags.config_path);
    cfg = BenchmarkConfig::from_json(j);
    if (flags.seed) cfg.seed = *flags.seed;
    if (flags.threads) cfg.threads = *flags.threads;
    if (flags.folds) cfg.folds = *flags.folds;
    if (flags.clip) {
      const auto [lo, hi] = parse_clip(*flags.clip);
      cfg.clip_lo = lo;
      cfg.clip_hi = hi;
    }
  } catch (const std::exception& e) {
    fail(2, "input", e.what());
  }

  try {
    fs::create_directories(flags.out_dir);
    write_json(fs::path(flags.out_dir) / "resolved_config.json", cfg.to_json());
    log_line(flags, "running " + std::to_string(cfg.networks.size()) + " network(s) x " +
                        std::to_string(cfg.sizes.size()) + " size(s) x " +
                        std::to_string(cfg.estimators.size()) + " estimator(s), " +
                        std::to_string(cfg.replicates) + " replicates");
    const BenchmarkResult result = run_benchmark(cfg);

    std::string jsonl;
    std::size_t failed = 0;
    for (const auto& rec : result.records) {
      jsonl += rec.to_json().dump();
      jsonl += '\n';
      if (rec.failed) ++failed;
    }
    write_text(fs::path(flags.out_dir) / "records.jsonl", jsonl);
    write_json(fs::path(flags.out_dir) / "aggregate.json", result.aggregates_to_json());
    write_text(fs::path(flags.out_dir) / "aggregate.csv", result.aggregates_to_csv());

    if (failed > 0)
      log_line(flags, "warning: " + std::to_string(failed) + " of " +
                          std::to_string(result.records.size()) + " replicate runs failed");
    if (!result.records.empty() && failed == result.records.size())
      throw std::runtime_error("all replicate runs failed; see records.jsonl");
    std::cout << result.aggregates_to_json().dump(2) << std::endl;
  } catch (const std::exception& e) {
    fail(1, "benchmark", e.what());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Policy-shift effect estimation under network interference"};
  app.require_subcommand(1);

  Flags flags;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", flags.config_path, "JSON config file")->required();
    cmd->add_option("--out", flags.out_dir, "output directory (default: .)");
    cmd->add_option("--seed", flags.seed, "override the config seed");
    cmd->add_option("--threads", flags.threads, "worker threads (default: available cores)");
    cmd->add_option("--folds", flags.folds, "override the cross-fitting fold count");
    cmd->add_option("--clip", flags.clip, "override the ratio clip bounds, as lo,hi");
    cmd->add_flag("--quiet", flags.quiet, "suppress stderr logging");
  };
  CLI::App* estimate = app.add_subcommand("estimate", "estimate policy effects from CSV data");
  CLI::App* simulate = app.add_subcommand("simulate", "draw one synthetic dataset + ground truth");
  CLI::App* benchmark = app.add_subcommand("benchmark", "replicate sweep against ground truth");
  add_common(estimate);
  add_common(simulate);
  add_common(benchmark);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    Json j;
    j["error"]["code"] = 2;
    j["error"]["phase"] = "arguments";
    j["error"]["message"] = e.what();
    std::cout << j.dump(2) << std::endl;
    std::cerr << "netshift: error (arguments): " << e.what() << '\n';
    return 2;
  }

  if (estimate->parsed()) return cmd_estimate(flags);
  if (simulate->parsed()) return cmd_simulate(flags);
  return cmd_benchmark(flags);
}
