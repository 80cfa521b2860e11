// mfgpc: train, predict, active learning, cardiac simulation and experiment runs.

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mfgpc/active_learning.hpp"
#include "mfgpc/cardiac.hpp"
#include "mfgpc/experiment.hpp"
#include "mfgpc/inference.hpp"
#include "mfgpc/metrics.hpp"
#include "mfgpc/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mfgpc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw ConfigError("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Model, sampler and prediction flags shared by train, predict and active-learn.
struct FitOptions {
  std::string config;
  std::string kind = "mf";
  int lengthscales = 1;
  int inducing = 30;
  double sparse_sigma = 0.1;
  std::uint64_t seed = 0;
  int chains = 2, warmup = 1000, samples = 1000, max_depth = 10, thin = 1;
  double target_accept = 0.95;
  std::string algorithm = "nuts";

  CLI::Option *o_chains, *o_warmup, *o_samples, *o_depth, *o_accept, *o_alg, *o_thin, *o_sigma;

  void add(CLI::App& app) {
    app.add_option("--config", config, "JSON config (sampler, prediction, sparse_sigma keys)");
    app.add_option("--kind", kind, "sf, mf or sparse-mf")->capture_default_str();
    app.add_option("--lengthscales", lengthscales, "1 (shared) or one per input")->capture_default_str();
    app.add_option("--inducing", inducing, "LOW inducing points of sparse-mf")->capture_default_str();
    o_sigma = app.add_option("--sparse-sigma", sparse_sigma);
    app.add_option("--seed", seed)->capture_default_str();
    o_chains = app.add_option("--chains", chains);
    o_warmup = app.add_option("--warmup", warmup);
    o_samples = app.add_option("--samples", samples);
    o_depth = app.add_option("--max-depth", max_depth);
    o_accept = app.add_option("--target-accept", target_accept);
    o_alg = app.add_option("--algorithm", algorithm, "nuts or hmc");
    o_thin = app.add_option("--thin", thin, "use every k-th draw for prediction");
  }

  void resolve(SamplerConfig& s, PredictionConfig& p, ModelConfig& m, Index dim) const {
    double sigma = 0.1;
    if (!config.empty()) {
      json j = json::parse(read_file(config));
      if (!j.contains("experiment")) j["experiment"] = "synthetic-sweep";
      const ExperimentConfig e = experiment_config_from_json(j.dump());
      s = e.sampler;
      p = e.prediction;
      sigma = e.sparse_sigma;
    }
    if (o_chains->count()) s.n_chains = chains;
    if (o_warmup->count()) s.n_warmup = warmup;
    if (o_samples->count()) s.n_samples = samples;
    if (o_depth->count()) s.max_tree_depth = max_depth;
    if (o_accept->count()) s.target_accept = target_accept;
    if (o_alg->count()) {
      if (algorithm != "nuts" && algorithm != "hmc") throw ConfigError("--algorithm must be nuts or hmc");
      s.algorithm = algorithm == "nuts" ? SamplerAlgorithm::Nuts : SamplerAlgorithm::Hmc;
    }
    if (o_thin->count()) p.thin = thin;
    if (o_sigma->count()) sigma = sparse_sigma;
    s.seed = seed;
    p.seed = mix_seed(seed, 1);
    s.validate();
    m.kind = parse_classifier_kind(kind);
    if (lengthscales != 1 && lengthscales != dim) {
      throw ConfigError("--lengthscales must be 1 or the input dimension " + std::to_string(dim));
    }
    m.n_lengthscales = lengthscales;
    m.n_low_inducing = inducing;
    m.sparse_sigma = sigma;
    m.kmeans_seed = seed;
  }
};

GpClassifier make_model(const LabeledDataset& data, const ModelConfig& m) {
  return GpClassifier(m.kind == ClassifierKind::SingleFidelity ? data.high_only() : data, m);
}

void print_diagnostics(const PosteriorTrace& t, std::ostream& os, bool all) {
  os << "parameter,rhat,ess\n";
  for (const auto& d : t.diagnostics) {
    if (!all && (d.name.rfind("z", 0) == 0)) continue;
    os << d.name << ',' << d.rhat << ',' << d.ess << '\n';
  }
}

int cmd_train(const std::string& data_path, const std::string& trace_path, const FitOptions& o) {
  const LabeledDataset data = load_dataset(data_path);
  SamplerConfig s;
  PredictionConfig p;
  ModelConfig m;
  o.resolve(s, p, m, data.dim());
  const GpClassifier model = make_model(data, m);
  const auto t0 = std::chrono::steady_clock::now();
  const PosteriorTrace trace = hmc_sample(model, s);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  export_trace(trace, trace_path);
  std::cerr << "draws " << trace.n_draws() << ", divergences " << trace.divergences() << ", max rhat "
            << trace.max_rhat() << ", min ess " << trace.min_ess() << ", " << secs << " s\n";
  print_diagnostics(trace, std::cout, false);
  return kExitOk;
}

int cmd_predict(const std::string& data_path, const std::string& trace_path, const std::string& query_path,
                const std::string& out_path, const std::string& labels_path, const FitOptions& o) {
  const LabeledDataset data = load_dataset(data_path);
  SamplerConfig s;
  PredictionConfig p;
  ModelConfig m;
  o.resolve(s, p, m, data.dim());
  const GpClassifier model = make_model(data, m);
  const PosteriorTrace trace = import_trace(trace_path);
  const Matrix query = load_matrix(query_path);
  const ClassProbability pr = predict_class_probability(trace, model, query, p);
  Matrix out(query.rows(), 4);
  out.col(0) = pr.probability;
  out.col(1) = pr.latent_mean;
  out.col(2) = pr.latent_variance;
  out.col(3) = pr.labels().cast<double>();
  save_matrix(out, {"prob_mean", "f_mean", "f_var", "label"}, out_path);
  if (!labels_path.empty()) {
    const Matrix truth = load_matrix(labels_path);
    const MetricsReport r = compute_metrics(pr.labels(), truth.col(0).cast<int>());
    std::cout << "accuracy " << r.accuracy << "\nprecision " << r.precision << "\nrecall " << r.recall << "\nf1 "
              << r.f1 << '\n';
  }
  return kExitOk;
}

struct AlOptions {
  std::string data, out, oracle = "synthetic", pool = "lhs", test;
  int iterations = 24;
  int pool_size = 500;
  int grid = 21;
};

int cmd_active_learn(const AlOptions& a, const FitOptions& o) {
  const LabeledDataset data = load_dataset(a.data);
  CampaignConfig cc;
  o.resolve(cc.sampler, cc.prediction, cc.model, data.dim());
  cc.iterations = a.iterations;
  cc.seed = o.seed;
  cc.pool_size = a.pool_size;
  cc.log_path = fs::path(a.out);
  if (a.pool == "grid") {
    if (data.dim() != 2) throw ConfigError("--pool grid needs 2-D inputs");
    cc.pool = PoolStrategy::FixedGrid;
    cc.grid.resize(a.grid * a.grid, 2);
    for (int i = 0; i < a.grid; ++i) {
      for (int j = 0; j < a.grid; ++j) {
        cc.grid(i * a.grid + j, 0) = i / double(a.grid - 1);
        cc.grid(i * a.grid + j, 1) = j / double(a.grid - 1);
      }
    }
  } else if (a.pool != "lhs") {
    throw ConfigError("--pool must be lhs or grid");
  }
  HighOracle oracle;
  if (a.oracle == "synthetic") {
    oracle = [](const Vector& x) { return synthetic::label_high(x); };
  } else if (a.oracle == "cardiac-2d") {
    // Unit coordinates map to s2 in [120, 150] ms and b in [0.035, 0.06].
    oracle = [](const Vector& x) {
      cardiac::ApParams p;
      p.b = 0.035 + 0.025 * x[1];
      cardiac::GridConfig g;
      g.dx = 0.5;
      return cardiac::run_2d_label(120.0 + 30.0 * x[0], p, g);
    };
  } else {
    throw ConfigError("--oracle must be synthetic or cardiac-2d");
  }
  if (!a.test.empty()) {
    const LabeledDataset t = load_dataset(a.test);
    cc.test_x = t.inputs();
    cc.test_y = t.labels();
  }
  const CampaignLog log = run_campaign(data, cc, oracle);
  save_campaign_log(log, data.dim(), a.out);
  std::cerr << log.n_acquisitions() << " acquisitions, final n_high " << log.final_data.n_high() << '\n';
  if (!log.complete) {
    std::cerr << "campaign halted: " << log.failure << '\n';
    return 4;
  }
  return kExitOk;
}

struct SimOptions {
  double a = 0.15, b = 0.05, s2 = 130.0, dx = -1.0, dt = 0.01, time_scale = 1.1;
  std::string fidelity = "L", jobs, out, snapshots;
  int stride = 1000;
  bool no_s2 = false;
};

int cmd_simulate(const SimOptions& s) {
  cardiac::GridConfig g1, g2;
  g1.dt = g2.dt = s.dt;
  g1.time_scale = g2.time_scale = s.time_scale;
  g1.dx = s.dx > 0 ? s.dx : 0.25;
  g2.dx = s.dx > 0 ? s.dx : 0.5;
  if (!s.jobs.empty()) {
    const std::vector<cardiac::SimResult> in = cardiac::load_sim_results(s.jobs);
    std::vector<cardiac::SimResult> out;
    for (const auto& r : in) out.push_back(cardiac::run_job(r.job, g1, g2));
    if (s.out.empty()) throw ConfigError("--jobs needs --out");
    cardiac::save_sim_results(out, s.out);
    return kExitOk;
  }
  cardiac::ApParams p;
  p.a = s.a;
  p.b = s.b;
  p.validate();
  if (s.fidelity == "L") {
    const auto r = cardiac::run_1d(s.s2, p, g1);
    std::cout << "label " << r.label << "\noutcome " << to_string(r.outcome) << "\nwall_time " << r.wall_time << '\n';
  } else if (s.fidelity == "H") {
    std::optional<cardiac::SnapshotOptions> snap;
    if (!s.snapshots.empty()) snap = cardiac::SnapshotOptions{s.snapshots, s.stride};
    const auto r = cardiac::run_2d(s.no_s2 ? std::nullopt : std::optional<double>(s.s2), p, g2, snap);
    std::cout << "label " << r.label << "\nfirst_window_activation " << r.first_window_activation << "\nwall_time "
              << r.wall_time << '\n';
  } else {
    throw ConfigError("--fidelity must be L or H");
  }
  return kExitOk;
}

struct BenchOptions {
  std::string id, config, manifest, out;
  int repeats = 0, workers = 0;
  std::uint64_t seed = 0;
  bool paper_scale = false, quiet = false;
  int chains = 0, warmup = 0, samples = 0, max_depth = 0, thin = 0;
  double target_accept = 0.0;
  CLI::Option *o_seed = nullptr, *o_traces = nullptr;
  bool traces = true;
};

int cmd_benchmark(const BenchOptions& b) {
  json j;
  if (!b.manifest.empty()) {
    j = json::parse(canonical_config(config_from_manifest(b.manifest)));
  } else if (!b.config.empty()) {
    j = json::parse(read_file(b.config));
  }
  if (!b.id.empty()) j["experiment"] = b.id;
  if (!j.contains("experiment")) throw ConfigError("benchmark needs an experiment id, --config or --manifest");
  if (b.paper_scale) j["repeats"] = 30;
  if (b.repeats > 0) j["repeats"] = b.repeats;
  if (b.o_seed->count()) j["seed"] = b.seed;
  if (!b.out.empty()) j["output_dir"] = b.out;
  if (b.workers > 0) j["workers"] = b.workers;
  if (b.o_traces->count()) j["export_traces"] = b.traces;
  if (b.chains > 0) j["sampler"]["chains"] = b.chains;
  if (b.warmup > 0) j["sampler"]["warmup"] = b.warmup;
  if (b.samples > 0) j["sampler"]["samples"] = b.samples;
  if (b.max_depth > 0) j["sampler"]["max_tree_depth"] = b.max_depth;
  if (b.target_accept > 0) j["sampler"]["target_accept"] = b.target_accept;
  if (b.thin > 0) j["prediction"]["thin"] = b.thin;
  const ExperimentConfig cfg = experiment_config_from_json(j.dump());
  ProgressFn progress;
  if (!b.quiet) progress = [](const std::string& m) { std::cerr << m << '\n'; };
  const ExperimentResult res = run_experiment(cfg, progress);
  std::cerr << "manifest " << res.manifest.string() << '\n';
  for (const auto& n : res.notes) std::cerr << "note: " << n << '\n';
  if (!res.incomplete_repeats.empty()) {
    std::cerr << "incomplete repeats:";
    for (int r : res.incomplete_repeats) std::cerr << ' ' << r;
    std::cerr << '\n';
  }
  return res.exit_code();
}

int cmd_trace(const std::string& action, const std::string& in, const std::string& out, bool all) {
  const PosteriorTrace t = import_trace(in);
  if (action == "diagnostics") {
    if (out.empty()) {
      print_diagnostics(t, std::cout, all);
    } else {
      std::ofstream os(out);
      if (!os) throw Error("cannot write " + out);
      print_diagnostics(t, os, all);
    }
    std::cerr << "chains " << t.n_chains() << ", draws " << t.n_draws() << ", max rhat " << t.max_rhat()
              << ", min ess " << t.min_ess() << '\n';
    return kExitOk;
  }
  // Wide layout: one row per draw, one column per parameter.
  if (out.empty()) throw ConfigError("trace export needs --out");
  std::ofstream os(out);
  if (!os) throw Error("cannot write " + out);
  os << "chain,draw";
  std::vector<Index> cols;
  for (Index c = 0; c < t.n_parameters(); ++c) {
    if (all || t.names[static_cast<std::size_t>(c)].rfind("z", 0) != 0) {
      cols.push_back(c);
      os << ',' << t.names[static_cast<std::size_t>(c)];
    }
  }
  os << '\n';
  os.precision(17);
  for (Index r = 0; r < t.n_draws(); ++r) {
    os << t.chain[static_cast<std::size_t>(r)] << ',' << t.draw[static_cast<std::size_t>(r)];
    for (Index c : cols) os << ',' << t.values(r, c);
    os << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-fidelity Gaussian process classification toolkit"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  FitOptions fit_opts;
  std::string data_path, trace_path, query_path, out_path, labels_path;

  auto* train = app.add_subcommand("train", "sample the posterior of a classifier and export the trace");
  train->add_option("--data", data_path, "training CSV (x1..xD,y,fidelity)")->required();
  train->add_option("--trace", trace_path, "output trace CSV")->required();
  fit_opts.add(*train);

  FitOptions pred_opts;
  auto* predict = app.add_subcommand("predict", "class probabilities at query points from a trace");
  predict->add_option("--data", data_path, "training CSV the trace was sampled on")->required();
  predict->add_option("--trace", trace_path)->required();
  predict->add_option("--query", query_path, "CSV of query points (header line)")->required();
  predict->add_option("--out", out_path)->required();
  predict->add_option("--labels", labels_path, "optional CSV of true labels for metrics");
  pred_opts.add(*predict);

  FitOptions al_fit;
  AlOptions al;
  auto* active = app.add_subcommand("active-learn", "active-learning campaign on a built-in HIGH oracle");
  active->add_option("--data", al.data, "initial dataset CSV (unit coordinates)")->required();
  active->add_option("--out", al.out, "campaign log CSV")->required();
  active->add_option("--oracle", al.oracle, "synthetic or cardiac-2d")->capture_default_str();
  active->add_option("--iterations", al.iterations)->capture_default_str();
  active->add_option("--pool", al.pool, "lhs or grid")->capture_default_str();
  active->add_option("--pool-size", al.pool_size)->capture_default_str();
  active->add_option("--grid", al.grid, "grid points per axis")->capture_default_str();
  active->add_option("--test", al.test, "test dataset CSV for per-iteration error");
  al_fit.add(*active);

  SimOptions sim;
  auto* simulate = app.add_subcommand("simulate", "one cardiac simulation, or a CSV of jobs");
  simulate->add_option("--a", sim.a)->capture_default_str();
  simulate->add_option("--b", sim.b)->capture_default_str();
  simulate->add_option("--s2", sim.s2, "S2 onset (ms)")->capture_default_str();
  simulate->add_flag("--no-s2", sim.no_s2, "S1 only (sheet)");
  simulate->add_option("--fidelity", sim.fidelity, "L (cable) or H (sheet)")->capture_default_str();
  simulate->add_option("--dx", sim.dx, "mm; default 0.25 cable, 0.5 sheet");
  simulate->add_option("--dt", sim.dt)->capture_default_str();
  simulate->add_option("--time-scale", sim.time_scale, "ms per model time unit")->capture_default_str();
  simulate->add_option("--jobs", sim.jobs, "CSV a,b,s2_time,fidelity[,label,wall_time]");
  simulate->add_option("--out", sim.out, "results CSV for --jobs");
  simulate->add_option("--snapshots", sim.snapshots, "sheet frames (float32) file");
  simulate->add_option("--frame-stride", sim.stride)->capture_default_str();

  BenchOptions bench;
  auto* benchmark = app.add_subcommand("benchmark", "run a named experiment");
  benchmark->add_option("id", bench.id, "synthetic-sweep, synthetic-al, cardiac-2d or cardiac-3d");
  benchmark->add_option("--config", bench.config, "JSON experiment config");
  benchmark->add_option("--manifest", bench.manifest, "rerun the config recorded in a manifest");
  benchmark->add_option("--out", bench.out, "output directory");
  benchmark->add_option("--repeats", bench.repeats);
  bench.o_seed = benchmark->add_option("--seed", bench.seed);
  benchmark->add_option("--workers", bench.workers);
  benchmark->add_flag("--paper-scale", bench.paper_scale, "30 repeats");
  benchmark->add_option("--chains", bench.chains);
  benchmark->add_option("--warmup", bench.warmup);
  benchmark->add_option("--samples", bench.samples);
  benchmark->add_option("--max-depth", bench.max_depth);
  benchmark->add_option("--target-accept", bench.target_accept);
  benchmark->add_option("--thin", bench.thin);
  bench.o_traces = benchmark->add_option("--export-traces", bench.traces);
  benchmark->add_flag("--quiet", bench.quiet);

  std::string trace_action, trace_in, trace_out;
  bool trace_all = false;
  auto* trace = app.add_subcommand("trace", "trace diagnostics or wide export");
  trace->add_option("action", trace_action, "diagnostics or export")
      ->required()
      ->check(CLI::IsMember({"diagnostics", "export"}));
  trace->add_option("--in", trace_in)->required();
  trace->add_option("--out", trace_out);
  trace->add_flag("--all", trace_all, "include latent coordinates");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*train) return cmd_train(data_path, trace_path, fit_opts);
    if (*predict) return cmd_predict(data_path, trace_path, query_path, out_path, labels_path, pred_opts);
    if (*active) return cmd_active_learn(al, al_fit);
    if (*simulate) return cmd_simulate(sim);
    if (*benchmark) return cmd_benchmark(bench);
    if (*trace) return cmd_trace(trace_action, trace_in, trace_out, trace_all);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ParseError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const SchemaError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const FactorizationError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitOk;
}
