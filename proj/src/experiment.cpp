#include "mfgpc/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "csv_util.hpp"
#include "mfgpc/active_learning.hpp"
#include "mfgpc/cardiac.hpp"
#include "mfgpc/metrics.hpp"
#include "mfgpc/synthetic.hpp"

namespace mfgpc {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(ExperimentId id) {
  switch (id) {
    case ExperimentId::SyntheticSweep: return "synthetic-sweep";
    case ExperimentId::SyntheticAl: return "synthetic-al";
    case ExperimentId::Cardiac2d: return "cardiac-2d";
    case ExperimentId::Cardiac3d: return "cardiac-3d";
  }
  return "?";
}

ExperimentId parse_experiment_id(const std::string& s) {
  for (auto id : {ExperimentId::SyntheticSweep, ExperimentId::SyntheticAl, ExperimentId::Cardiac2d,
                  ExperimentId::Cardiac3d}) {
    if (to_string(id) == s) return id;
  }
  throw ConfigError("unknown experiment '" + s + "' (synthetic-sweep, synthetic-al, cardiac-2d, cardiac-3d)");
}

std::vector<ClassifierKind> ExperimentConfig::effective_kinds() const {
  if (!kinds.empty()) return kinds;
  using K = ClassifierKind;
  switch (id) {
    case ExperimentId::SyntheticSweep: return {K::SingleFidelity, K::MultiFidelity, K::SparseMultiFidelity};
    case ExperimentId::SyntheticAl: return {K::SingleFidelity, K::MultiFidelity};
    case ExperimentId::Cardiac2d: return {K::SingleFidelity, K::MultiFidelity, K::SparseMultiFidelity};
    case ExperimentId::Cardiac3d: return {K::SparseMultiFidelity};
  }
  return {};
}

void ExperimentConfig::validate() const {
  sampler.validate();
  if (repeats < 1) throw ConfigError("repeats must be >= 1");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (prediction.thin < 1) throw ConfigError("prediction thin must be >= 1");
  if (!(sparse_sigma > 0.0)) throw ConfigError("sparse_sigma must be positive");
  if (output_dir.empty()) throw ConfigError("output_dir is empty");
  const auto& s = synthetic;
  const auto& c = cardiac;
  switch (id) {
    case ExperimentId::SyntheticSweep:
      if (s.n_high.empty()) throw ConfigError("synthetic.n_high is empty");
      for (Index n : s.n_high) {
        if (n < 2 || n % 2 != 0) throw ConfigError("synthetic.n_high entries must be even and >= 2");
      }
      [[fallthrough]];
    case ExperimentId::SyntheticAl:
      if (s.n_test < 1 || s.pool_size < 2) throw ConfigError("synthetic test set and pool must be non-empty");
      if (s.al_iterations < 0) throw ConfigError("synthetic.al_iterations must be >= 0");
      if (s.al_initial_high < 2 || s.al_initial_high % 2 || s.non_al_high < 2 || s.non_al_high % 2) {
        throw ConfigError("synthetic initial sizes must be even and >= 2");
      }
      if (s.n_inducing < 1) throw ConfigError("synthetic.n_inducing must be >= 1");
      break;
    case ExperimentId::Cardiac2d:
      if (c.low_initial < 2 || c.low_initial % 2 || c.low_target < c.low_initial) {
        throw ConfigError("cardiac low sizes: need even low_initial >= 2 and low_target >= low_initial");
      }
      if (c.high_initial < 2 || c.high_initial % 2 || c.high_target < c.high_initial) {
        throw ConfigError("cardiac high sizes: need even high_initial >= 2 and high_target >= high_initial");
      }
      if (c.grid_time < 2 || c.grid_b < 2) throw ConfigError("cardiac grid needs >= 2 points per axis");
      if (c.n_test < 1 || c.seed_pool < c.low_initial) throw ConfigError("cardiac test set or seed pool too small");
      break;
    case ExperimentId::Cardiac3d:
      if (c.low_sweep < 2 || c.low_positives < 1 || c.low_negatives < 1) {
        throw ConfigError("cardiac 3-parameter low set sizes must be positive");
      }
      if (c.high_initial_3d < 2 || c.high_initial_3d % 2) throw ConfigError("cardiac high_initial_3d must be even");
      if (c.iterations_3d < 0 || c.window_grid < 2 || c.n_inducing_3d < 1) {
        throw ConfigError("cardiac 3-parameter campaign settings invalid");
      }
      break;
  }
  if (id == ExperimentId::Cardiac2d || id == ExperimentId::Cardiac3d) {
    cardiac::GridConfig g1, g2;
    g1.dx = c.dx_1d;
    g1.dt = c.dt_1d;
    g2.dx = c.dx_2d;
    g2.dt = c.dt_2d;
    g1.check_stability();
    g2.check_stability();
  }
}

// ---------------------------------------------------------------- JSON

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw ConfigError("unknown key '" + key + "' in " + where);
    }
  }
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void read_index(const json& j, const char* key, Index& out) {
  if (j.contains(key)) out = j.at(key).get<long long>();
}

std::string algorithm_name(SamplerAlgorithm a) { return a == SamplerAlgorithm::Nuts ? "nuts" : "hmc"; }

}  // namespace

ExperimentConfig experiment_config_from_json(const std::string& text) {
  ExperimentConfig c;
  try {
    const json j = json::parse(text);
    check_keys(j,
               {"experiment", "kinds", "repeats", "seed", "output_dir", "workers", "export_traces", "sparse_sigma",
                "sampler", "prediction", "synthetic", "cardiac"},
               "config");
    if (!j.contains("experiment")) throw ConfigError("config needs an 'experiment' key");
    c.id = parse_experiment_id(j.at("experiment").get<std::string>());
    if (j.contains("kinds")) {
      for (const auto& k : j.at("kinds")) c.kinds.push_back(parse_classifier_kind(k.get<std::string>()));
      if (c.kinds.empty()) throw ConfigError("kinds is empty");
    }
    read(j, "repeats", c.repeats);
    read(j, "seed", c.seed_base);
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    read(j, "workers", c.workers);
    read(j, "export_traces", c.export_traces);
    read(j, "sparse_sigma", c.sparse_sigma);
    if (j.contains("sampler")) {
      const json& s = j.at("sampler");
      check_keys(s, {"chains", "warmup", "samples", "target_accept", "max_tree_depth", "algorithm", "hmc_steps",
                     "adapt_metric"},
                 "sampler");
      read(s, "chains", c.sampler.n_chains);
      read(s, "warmup", c.sampler.n_warmup);
      read(s, "samples", c.sampler.n_samples);
      read(s, "target_accept", c.sampler.target_accept);
      read(s, "max_tree_depth", c.sampler.max_tree_depth);
      read(s, "hmc_steps", c.sampler.hmc_steps);
      read(s, "adapt_metric", c.sampler.adapt_metric);
      if (s.contains("algorithm")) {
        const auto a = s.at("algorithm").get<std::string>();
        if (a == "nuts") {
          c.sampler.algorithm = SamplerAlgorithm::Nuts;
        } else if (a == "hmc") {
          c.sampler.algorithm = SamplerAlgorithm::Hmc;
        } else {
          throw ConfigError("sampler.algorithm must be nuts or hmc");
        }
      }
    }
    if (j.contains("prediction")) {
      const json& p = j.at("prediction");
      check_keys(p, {"thin", "max_failed_fraction"}, "prediction");
      read(p, "thin", c.prediction.thin);
      read(p, "max_failed_fraction", c.prediction.max_failed_fraction);
    }
    if (j.contains("synthetic")) {
      const json& s = j.at("synthetic");
      check_keys(s, {"n_high", "n_test", "pool_size", "al_iterations", "al_initial_high", "non_al_high",
                     "n_inducing", "target_error"},
                 "synthetic");
      if (s.contains("n_high")) {
        c.synthetic.n_high.clear();
        for (const auto& n : s.at("n_high")) c.synthetic.n_high.push_back(n.get<long long>());
      }
      read_index(s, "n_test", c.synthetic.n_test);
      read_index(s, "pool_size", c.synthetic.pool_size);
      read(s, "al_iterations", c.synthetic.al_iterations);
      read_index(s, "al_initial_high", c.synthetic.al_initial_high);
      read_index(s, "non_al_high", c.synthetic.non_al_high);
      read_index(s, "n_inducing", c.synthetic.n_inducing);
      read(s, "target_error", c.synthetic.target_error);
    }
    if (j.contains("cardiac")) {
      const json& s = j.at("cardiac");
      check_keys(s, {"dx_2d", "dt_2d", "dx_1d", "dt_1d", "n_test", "low_initial", "low_target", "seed_pool",
                     "high_initial", "high_target", "grid_time", "grid_b", "n_inducing", "low_sweep",
                     "low_positives", "low_negatives", "high_initial_3d", "n_inducing_3d", "iterations_3d",
                     "window_grid"},
                 "cardiac");
      auto& k = c.cardiac;
      read(s, "dx_2d", k.dx_2d);
      read(s, "dt_2d", k.dt_2d);
      read(s, "dx_1d", k.dx_1d);
      read(s, "dt_1d", k.dt_1d);
      read_index(s, "n_test", k.n_test);
      read_index(s, "low_initial", k.low_initial);
      read_index(s, "low_target", k.low_target);
      read_index(s, "seed_pool", k.seed_pool);
      read_index(s, "high_initial", k.high_initial);
      read_index(s, "high_target", k.high_target);
      read_index(s, "grid_time", k.grid_time);
      read_index(s, "grid_b", k.grid_b);
      read_index(s, "n_inducing", k.n_inducing);
      read_index(s, "low_sweep", k.low_sweep);
      read_index(s, "low_positives", k.low_positives);
      read_index(s, "low_negatives", k.low_negatives);
      read_index(s, "high_initial_3d", k.high_initial_3d);
      read_index(s, "n_inducing_3d", k.n_inducing_3d);
      read(s, "iterations_3d", k.iterations_3d);
      read_index(s, "window_grid", k.window_grid);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

namespace {

json config_json(const ExperimentConfig& c, bool with_run_keys) {
  json j;
  j["experiment"] = to_string(c.id);
  json kinds = json::array();
  for (auto k : c.effective_kinds()) kinds.push_back(to_string(k));
  j["kinds"] = kinds;
  j["repeats"] = c.repeats;
  j["seed"] = c.seed_base;
  if (with_run_keys) {
    j["output_dir"] = c.output_dir.string();
    j["workers"] = c.workers;
  }
  j["export_traces"] = c.export_traces;
  j["sparse_sigma"] = c.sparse_sigma;
  j["sampler"] = {{"chains", c.sampler.n_chains},
                  {"warmup", c.sampler.n_warmup},
                  {"samples", c.sampler.n_samples},
                  {"target_accept", c.sampler.target_accept},
                  {"max_tree_depth", c.sampler.max_tree_depth},
                  {"algorithm", algorithm_name(c.sampler.algorithm)},
                  {"hmc_steps", c.sampler.hmc_steps},
                  {"adapt_metric", c.sampler.adapt_metric}};
  j["prediction"] = {{"thin", c.prediction.thin}, {"max_failed_fraction", c.prediction.max_failed_fraction}};
  const auto& s = c.synthetic;
  j["synthetic"] = {{"n_high", s.n_high},
                    {"n_test", s.n_test},
                    {"pool_size", s.pool_size},
                    {"al_iterations", s.al_iterations},
                    {"al_initial_high", s.al_initial_high},
                    {"non_al_high", s.non_al_high},
                    {"n_inducing", s.n_inducing},
                    {"target_error", s.target_error}};
  const auto& k = c.cardiac;
  j["cardiac"] = {{"dx_2d", k.dx_2d},
                  {"dt_2d", k.dt_2d},
                  {"dx_1d", k.dx_1d},
                  {"dt_1d", k.dt_1d},
                  {"n_test", k.n_test},
                  {"low_initial", k.low_initial},
                  {"low_target", k.low_target},
                  {"seed_pool", k.seed_pool},
                  {"high_initial", k.high_initial},
                  {"high_target", k.high_target},
                  {"grid_time", k.grid_time},
                  {"grid_b", k.grid_b},
                  {"n_inducing", k.n_inducing},
                  {"low_sweep", k.low_sweep},
                  {"low_positives", k.low_positives},
                  {"low_negatives", k.low_negatives},
                  {"high_initial_3d", k.high_initial_3d},
                  {"n_inducing_3d", k.n_inducing_3d},
                  {"iterations_3d", k.iterations_3d},
                  {"window_grid", k.window_grid}};
  return j;
}

}  // namespace

std::string experiment_config_to_json(const ExperimentConfig& config) { return config_json(config, true).dump(2); }

std::string canonical_config(const ExperimentConfig& config) { return config_json(config, false).dump(); }

std::uint64_t config_hash(const ExperimentConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char ch : canonical_config(config)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return experiment_config_from_json(ss.str());
}

ExperimentConfig config_from_manifest(const fs::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw ConfigError("cannot read manifest " + manifest.string());
  std::string line;
  const std::string tag = "config: ";
  while (std::getline(in, line)) {
    if (line.rfind(tag, 0) == 0) return experiment_config_from_json(line.substr(tag.size()));
  }
  throw ConfigError("manifest " + manifest.string() + " has no config line");
}

int ExperimentResult::exit_code() const {
  switch (status) {
    case ExperimentStatus::Complete: return 0;
    case ExperimentStatus::Partial: return 4;
    case ExperimentStatus::Failed: return 3;
  }
  return 3;
}

// ---------------------------------------------------------------- running

namespace {

using detail::format_double;

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << "0x" << std::hex << v;
  return os.str();
}

fs::path repeat_dir(const fs::path& root, int r) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "repeat_%02d", r);
  return root / buf;
}

struct RunContext {
  const ExperimentConfig& config;
  const ProgressFn& progress;
  std::mutex log_mutex;

  void say(const std::string& msg) {
    if (!progress) return;
    std::lock_guard<std::mutex> lock(log_mutex);
    progress(msg);
  }
};

struct RepeatStatus {
  bool complete = true;
  bool numerical_failure = false;
  std::string failure;
  std::vector<std::string> notes;
  std::uint64_t seed = 0;

  void fail(const std::string& what, bool numerical) {
    if (complete) failure = what;
    complete = false;
    numerical_failure = numerical_failure || numerical;
  }
};

ModelConfig model_config(const ExperimentConfig& c, ClassifierKind kind, Index dim, Index n_inducing,
                         std::uint64_t seed) {
  ModelConfig m;
  m.kind = kind;
  // Synthetic runs share one lengthscale across inputs; the cardiac studies use one per input.
  const bool cardiac = c.id == ExperimentId::Cardiac2d || c.id == ExperimentId::Cardiac3d;
  m.n_lengthscales = cardiac ? dim : 1;
  m.sparse_sigma = c.sparse_sigma;
  m.n_low_inducing = n_inducing;
  m.kmeans_seed = seed;
  return m;
}

SamplerConfig sampler_config(const ExperimentConfig& c, std::uint64_t seed) {
  SamplerConfig s = c.sampler;
  s.seed = seed;
  return s;
}

PredictionConfig prediction_config(const ExperimentConfig& c, std::uint64_t seed) {
  PredictionConfig p = c.prediction;
  p.seed = seed;
  return p;
}

std::uint64_t kind_stream(ClassifierKind k) { return static_cast<std::uint64_t>(k); }

std::string csv_header_metrics() { return "accuracy,precision,recall,f1,tp,fp,tn,fn"; }

std::string csv_metrics(const MetricsReport& m) {
  std::ostringstream os;
  os << format_double(m.accuracy) << ',' << format_double(m.precision) << ',' << format_double(m.recall) << ','
     << format_double(m.f1) << ',' << m.tp << ',' << m.fp << ',' << m.tn << ',' << m.fn;
  return os.str();
}

std::string csv_nan_metrics() { return "nan,nan,nan,nan,0,0,0,0"; }

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

/// Summary triple of a sample: n, median, lower and upper quartile.
std::string csv_summary(const std::vector<double>& v) {
  std::size_t n = 0;
  for (double x : v) n += !std::isnan(x);
  return std::to_string(n) + ',' + format_double(median(v)) + ',' + format_double(quantile(v, 0.25)) + ',' +
         format_double(quantile(v, 0.75));
}

struct Fit {
  std::unique_ptr<GpClassifier> model;
  PosteriorTrace trace;
};

Fit fit(const LabeledDataset& data, const ModelConfig& mc, const SamplerConfig& sc) {
  Fit f;
  f.model = std::make_unique<GpClassifier>(mc.kind == ClassifierKind::SingleFidelity ? data.high_only() : data, mc);
  f.trace = hmc_sample(*f.model, sc);
  return f;
}

MetricsReport test_metrics(const Fit& f, const Matrix& x, const LabelVector& y, const PredictionConfig& pc) {
  return compute_metrics(predict_class_probability(f.trace, *f.model, x, pc).labels(), y);
}

/// Runs body(r) for r in [0, n) on `workers` threads.
template <class F>
void parallel_repeats(int n, int workers, F body) {
  std::atomic<int> next{0};
  auto work = [&] {
    for (int r; (r = next++) < n;) body(r);
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < std::min(workers, n); ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
}

/// Wraps a repeat body, turning numerical failures into an incomplete repeat.
template <class F>
void guarded(RepeatStatus& st, F body) {
  try {
    body();
  } catch (const NumericalError& e) {
    st.fail(e.what(), true);
  } catch (const FactorizationError& e) {
    st.fail(e.what(), true);
  } catch (const ImbalanceError& e) {
    st.fail(e.what(), false);
  }
}

// ---- synthetic sweep

struct SweepRow {
  int repeat;
  ClassifierKind kind;
  Index n_high;
  std::optional<MetricsReport> metrics;
};

void run_sweep(RunContext& ctx, std::vector<RepeatStatus>& status) {
  const auto& c = ctx.config;
  const auto kinds = c.effective_kinds();
  std::vector<std::vector<SweepRow>> rows(static_cast<std::size_t>(c.repeats));
  parallel_repeats(c.repeats, c.workers, [&](int r) {
    auto& st = status[static_cast<std::size_t>(r)];
    const std::uint64_t rs = st.seed;
    const fs::path dir = repeat_dir(c.output_dir, r);
    fs::create_directories(dir);
    const LabeledDataset low = synthetic::make_low_fidelity_design(mix_seed(rs, 1));
    const Matrix test_x = latin_hypercube(synthetic::unit_square(), c.synthetic.n_test, mix_seed(rs, 2));
    const LabelVector test_y = synthetic::label_rows(synthetic::SineBoundarySpec::high(), test_x);
    for (Index nh : c.synthetic.n_high) {
      const LabeledDataset high =
          synthetic::make_high_fidelity_seed(nh, mix_seed(rs, 100 + static_cast<std::uint64_t>(nh)),
                                             c.synthetic.pool_size);
      const LabeledDataset data = LabeledDataset::from_levels(low.low_inputs(), low.low_labels(),
                                                              high.high_inputs(), high.high_labels());
      save_dataset(data, dir / ("train_nh" + std::to_string(nh) + ".csv"));
      for (auto kind : kinds) {
        SweepRow row{r, kind, nh, std::nullopt};
        const std::uint64_t ks = mix_seed(rs, 1000 * static_cast<std::uint64_t>(nh) + kind_stream(kind));
        guarded(st, [&] {
          const Fit f = fit(data, model_config(c, kind, 2, c.synthetic.n_inducing, ks), sampler_config(c, ks));
          row.metrics = test_metrics(f, test_x, test_y, prediction_config(c, mix_seed(ks, 1)));
          if (c.export_traces) {
            export_trace(f.trace, dir / ("trace_" + to_string(kind) + "_nh" + std::to_string(nh) + ".csv"));
          }
        });
        ctx.say("repeat " + std::to_string(r) + " " + to_string(kind) + " n_high=" + std::to_string(nh) +
                " error=" + (row.metrics ? format_double(row.metrics->error()) : std::string("failed")));
        rows[static_cast<std::size_t>(r)].push_back(row);
      }
    }
  });

  auto out = open_out(c.output_dir / "metrics.csv");
  out << "repeat,kind,n_high,error," << csv_header_metrics() << '\n';
  std::map<std::pair<int, Index>, std::vector<double>> errors;
  for (const auto& per : rows) {
    for (const auto& row : per) {
      out << row.repeat << ',' << to_string(row.kind) << ',' << row.n_high << ',';
      if (row.metrics) {
        out << format_double(row.metrics->error()) << ',' << csv_metrics(*row.metrics) << '\n';
      } else {
        out << "nan," << csv_nan_metrics() << '\n';
      }
      errors[{static_cast<int>(row.kind), row.n_high}].push_back(
          row.metrics ? row.metrics->error() : std::numeric_limits<double>::quiet_NaN());
    }
  }
  auto sum = open_out(c.output_dir / "summary.csv");
  sum << "kind,n_high,n,median_error,q25_error,q75_error\n";
  for (auto kind : kinds) {
    for (Index nh : c.synthetic.n_high) {
      sum << to_string(kind) << ',' << nh << ',' << csv_summary(errors[{static_cast<int>(kind), nh}]) << '\n';
    }
  }
}

// ---- synthetic active learning

struct AlRecord {
  ClassifierKind kind;
  std::vector<std::pair<Index, double>> trajectory;
  bool complete = false;
  double al_error = std::numeric_limits<double>::quiet_NaN();
  double non_al_error = std::numeric_limits<double>::quiet_NaN();
  std::optional<Index> to_target;
};

void run_synthetic_al(RunContext& ctx, std::vector<RepeatStatus>& status) {
  const auto& c = ctx.config;
  const auto& s = c.synthetic;
  const auto kinds = c.effective_kinds();
  std::vector<std::vector<AlRecord>> records(static_cast<std::size_t>(c.repeats));
  parallel_repeats(c.repeats, c.workers, [&](int r) {
    auto& st = status[static_cast<std::size_t>(r)];
    const std::uint64_t rs = st.seed;
    const fs::path dir = repeat_dir(c.output_dir, r);
    fs::create_directories(dir);
    const LabeledDataset low = synthetic::make_low_fidelity_design(mix_seed(rs, 1));
    const Matrix test_x = latin_hypercube(synthetic::unit_square(), s.n_test, mix_seed(rs, 2));
    const LabelVector test_y = synthetic::label_rows(synthetic::SineBoundarySpec::high(), test_x);
    auto with_seed = [&](Index nh) {
      const LabeledDataset high =
          synthetic::make_high_fidelity_seed(nh, mix_seed(rs, 100 + static_cast<std::uint64_t>(nh)), s.pool_size);
      return LabeledDataset::from_levels(low.low_inputs(), low.low_labels(), high.high_inputs(), high.high_labels());
    };
    const LabeledDataset initial = with_seed(s.al_initial_high);
    const LabeledDataset baseline = with_seed(s.non_al_high);
    for (auto kind : kinds) {
      AlRecord rec;
      rec.kind = kind;
      const std::uint64_t ks = mix_seed(rs, 5000 + kind_stream(kind));
      CampaignConfig cc;
      cc.iterations = s.al_iterations;
      cc.pool = PoolStrategy::FreshLhs;
      cc.pool_size = s.pool_size;
      cc.seed = ks;
      cc.model = model_config(c, kind, 2, s.n_inducing, ks);
      cc.sampler = sampler_config(c, 0);
      cc.prediction = prediction_config(c, 0);
      cc.test_x = test_x;
      cc.test_y = test_y;
      cc.log_path = dir / ("campaign_" + to_string(kind) + "_log.csv");
      std::unique_ptr<PosteriorTrace> last;
      if (c.export_traces) {
        cc.on_fit = [&](int it, const PosteriorTrace& t, const GpClassifier&) {
          if (it == s.al_iterations) last = std::make_unique<PosteriorTrace>(t);
        };
      }
      guarded(st, [&] {
        const CampaignLog log = run_campaign(initial, cc, [](const Vector& x) { return synthetic::label_high(x); });
        save_campaign_metrics(log, 2, dir / ("campaign_" + to_string(kind) + ".csv"));
        save_dataset(log.final_data, dir / ("final_" + to_string(kind) + ".csv"));
        if (last) export_trace(*last, dir / ("trace_" + to_string(kind) + "_final.csv"));
        rec.trajectory = log.trajectory();
        rec.complete = log.complete;
        if (!log.complete) st.fail(to_string(kind) + " campaign: " + log.failure, true);
        for (const auto& [n, e] : rec.trajectory) {
          if (n == s.non_al_high) rec.al_error = e;
        }
        rec.to_target = samples_to_target_error(rec.trajectory, s.target_error);
      });
      guarded(st, [&] {
        const std::uint64_t bs = mix_seed(rs, 6000 + kind_stream(kind));
        const Fit f = fit(baseline, model_config(c, kind, 2, s.n_inducing, bs), sampler_config(c, bs));
        rec.non_al_error = test_metrics(f, test_x, test_y, prediction_config(c, mix_seed(bs, 1))).error();
      });
      ctx.say("repeat " + std::to_string(r) + " " + to_string(kind) + " al_error=" + format_double(rec.al_error) +
              " non_al_error=" + format_double(rec.non_al_error));
      records[static_cast<std::size_t>(r)].push_back(std::move(rec));
    }
  });

  auto traj = open_out(c.output_dir / "trajectories.csv");
  traj << "repeat,kind,iteration,n_high,test_error\n";
  auto comp = open_out(c.output_dir / "comparison.csv");
  comp << "repeat,kind,al_error,non_al_error,samples_to_target\n";
  std::map<int, std::vector<double>> al, non_al;
  std::map<int, std::vector<std::optional<Index>>> counts;
  for (int r = 0; r < c.repeats; ++r) {
    for (const auto& rec : records[static_cast<std::size_t>(r)]) {
      for (std::size_t i = 0; i < rec.trajectory.size(); ++i) {
        traj << r << ',' << to_string(rec.kind) << ',' << i << ',' << rec.trajectory[i].first << ','
             << format_double(rec.trajectory[i].second) << '\n';
      }
      comp << r << ',' << to_string(rec.kind) << ',' << format_double(rec.al_error) << ','
           << format_double(rec.non_al_error) << ','
           << (rec.to_target ? std::to_string(*rec.to_target) : std::string("censored")) << '\n';
      const int k = static_cast<int>(rec.kind);
      al[k].push_back(rec.al_error);
      non_al[k].push_back(rec.non_al_error);
      // Incomplete campaigns that never reached the target are not counted.
      if (rec.to_target || rec.complete) counts[k].push_back(rec.to_target);
    }
  }
  auto sum = open_out(c.output_dir / "summary.csv");
  sum << "kind,arm,n,median,q25,q75\n";
  for (auto kind : kinds) {
    const int k = static_cast<int>(kind);
    sum << to_string(kind) << ",al_error," << csv_summary(al[k]) << '\n';
    sum << to_string(kind) << ",non_al_error," << csv_summary(non_al[k]) << '\n';
    std::vector<double> n;
    for (const auto& v : counts[k]) n.push_back(v ? static_cast<double>(*v) : std::numeric_limits<double>::infinity());
    sum << to_string(kind) << ",samples_to_target," << csv_summary(n) << '\n';
  }
}

// ---- cardiac

/// Deterministic, memoized simulator labels in unit model coordinates.
class CardiacOracle {
 public:
  CardiacOracle(BoxDomain box, cardiac::GridConfig grid, bool sheet)
      : map_(box), grid_(grid), sheet_(sheet), three_(box.dim() == 3) {}

  int operator()(const Vector& unit) {
    const Vector p = map_.invert_point(unit);
    const std::vector<double> key(p.data(), p.data() + p.size());
    {
      std::lock_guard<std::mutex> lock(mutex_);
      if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    }
    cardiac::ApParams ap;
    double s2;
    if (three_) {
      ap.a = p[0];
      ap.b = p[1];
      s2 = p[2];
    } else {
      ap.b = p[1];
      s2 = p[0];
    }
    const int y = sheet_ ? cardiac::run_2d_label(s2, ap, grid_) : cardiac::run_1d_label(s2, ap, grid_);
    std::lock_guard<std::mutex> lock(mutex_);
    cache_.emplace(key, y);
    return y;
  }

  LabelVector label_rows(const Matrix& unit) {
    LabelVector y(unit.rows());
    for (Index i = 0; i < unit.rows(); ++i) y[i] = (*this)(unit.row(i).transpose());
    return y;
  }

  const Standardizer& map() const { return map_; }

 private:
  Standardizer map_;
  cardiac::GridConfig grid_;
  bool sheet_;
  bool three_;
  std::mutex mutex_;
  std::map<std::vector<double>, int> cache_;
};

/// Uniform grid over the unit square with `nt` points along the first axis.
Matrix unit_grid(Index nt, Index nb) {
  Matrix g(nt * nb, 2);
  for (Index i = 0; i < nt; ++i) {
    for (Index j = 0; j < nb; ++j) {
      g(i * nb + j, 0) = static_cast<double>(i) / static_cast<double>(nt - 1);
      g(i * nb + j, 1) = static_cast<double>(j) / static_cast<double>(nb - 1);
    }
  }
  return g;
}

void save_physical(const LabeledDataset& unit_data, const Standardizer& map, const std::vector<std::string>& names,
                   const fs::path& path) {
  auto out = open_out(path);
  for (const auto& n : names) out << n << ',';
  out << "y,fidelity\n";
  const Matrix x = map.invert(unit_data.inputs());
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index d = 0; d < x.cols(); ++d) out << format_double(x(i, d)) << ',';
    out << unit_data.labels()[i] << ',' << to_string(unit_data.fidelity()[static_cast<std::size_t>(i)]) << '\n';
  }
}

struct CardiacRow {
  ClassifierKind kind;
  int iteration;
  Index n_high;
  MetricsReport metrics;
};

cardiac::GridConfig grid_of(double dx, double dt) {
  cardiac::GridConfig g;
  g.dx = dx;
  g.dt = dt;
  return g;
}

void run_cardiac_2d(RunContext& ctx, std::vector<RepeatStatus>& status) {
  const auto& c = ctx.config;
  const auto& k = c.cardiac;
  const auto kinds = c.effective_kinds();
  const BoxDomain box(Vector::Map(std::vector<double>{120.0, 0.035}.data(), 2),
                      Vector::Map(std::vector<double>{150.0, 0.06}.data(), 2));
  const std::vector<std::string> names = {"s2_time", "b"};
  std::vector<std::vector<CardiacRow>> rows(static_cast<std::size_t>(c.repeats));
  parallel_repeats(c.repeats, c.workers, [&](int r) {
    auto& st = status[static_cast<std::size_t>(r)];
    const std::uint64_t rs = st.seed;
    const fs::path dir = repeat_dir(c.output_dir, r);
    fs::create_directories(dir);
    CardiacOracle cable(box, grid_of(k.dx_1d, k.dt_1d), false);
    CardiacOracle sheet(box, grid_of(k.dx_2d, k.dt_2d), true);
    const BoxDomain unit = BoxDomain::unit(2);
    const Matrix grid = unit_grid(k.grid_time, k.grid_b);

    guarded(st, [&] {
      // LOW level: single-fidelity active learning on the cable.
      const Matrix pool_x = latin_hypercube(unit, k.seed_pool, mix_seed(rs, 3));
      const auto pool = LabeledDataset::single_level(pool_x, cable.label_rows(pool_x), Fidelity::High);
      const Matrix seed_x = balanced_seed_selection(pool, k.low_initial, mix_seed(rs, 4));
      const auto seed_low = LabeledDataset::single_level(seed_x, cable.label_rows(seed_x), Fidelity::High);
      ctx.say("repeat " + std::to_string(r) + " low campaign");
      CampaignConfig lc;
      lc.iterations = static_cast<int>(k.low_target - k.low_initial);
      lc.pool = PoolStrategy::FixedGrid;
      lc.grid = grid;
      lc.seed = mix_seed(rs, 5);
      lc.model = model_config(c, ClassifierKind::SingleFidelity, 2, k.n_inducing, lc.seed);
      lc.sampler = sampler_config(c, 0);
      lc.prediction = prediction_config(c, 0);
      lc.log_path = dir / "low_campaign_log.csv";
      const CampaignLog low_log = run_campaign(seed_low, lc, [&](const Vector& x) { return cable(x); });
      save_campaign_metrics(low_log, 2, dir / "low_campaign.csv");
      if (!low_log.complete) {
        st.fail("low campaign: " + low_log.failure, true);
        return;
      }
      const LabeledDataset low = low_log.final_data.retagged(Fidelity::Low);

      // HIGH level seeds: balanced on the cable labels, labeled on the sheet.
      const Matrix hx = balanced_seed_selection(low, k.high_initial, mix_seed(rs, 6));
      const LabeledDataset initial =
          LabeledDataset::from_levels(low.low_inputs(), low.low_labels(), hx, sheet.label_rows(hx));
      save_physical(initial, cable.map(), names, dir / "initial.csv");
      const Matrix test_x = latin_hypercube(unit, k.n_test, mix_seed(rs, 7));
      const LabelVector test_y = sheet.label_rows(test_x);
      save_physical(LabeledDataset::single_level(test_x, test_y, Fidelity::High), cable.map(), names,
                    dir / "test_set.csv");

      for (auto kind : kinds) {
        const std::uint64_t ks = mix_seed(rs, 7000 + kind_stream(kind));
        CampaignConfig cc;
        cc.iterations = static_cast<int>(k.high_target - k.high_initial);
        cc.pool = PoolStrategy::FixedGrid;
        cc.grid = grid;
        cc.seed = ks;
        cc.model = model_config(c, kind, 2, k.n_inducing, ks);
        cc.sampler = sampler_config(c, 0);
        cc.prediction = prediction_config(c, 0);
        cc.test_x = test_x;
        cc.test_y = test_y;
        cc.log_path = dir / ("campaign_" + to_string(kind) + "_log.csv");
        Index n_high = initial.n_high();
        cc.on_fit = [&](int it, const PosteriorTrace& t, const GpClassifier& m) {
          const auto p = predict_class_probability(t, m, test_x, prediction_config(c, mix_seed(ks, 100 + it)));
          const MetricsReport rep = compute_metrics(p.labels(), test_y);
          rows[static_cast<std::size_t>(r)].push_back({kind, it, n_high + it, rep});
          if (c.export_traces && it == cc.iterations) {
            export_trace(t, dir / ("trace_" + to_string(kind) + "_final.csv"));
          }
          ctx.say("repeat " + std::to_string(r) + " " + to_string(kind) + " iteration " + std::to_string(it) +
                  " f1=" + format_double(rep.f1));
        };
        const CampaignLog log = run_campaign(initial, cc, [&](const Vector& x) { return sheet(x); });
        save_campaign_metrics(log, 2, dir / ("campaign_" + to_string(kind) + ".csv"));
        save_physical(log.final_data, cable.map(), names, dir / ("final_" + to_string(kind) + ".csv"));
        if (!log.complete) st.fail(to_string(kind) + " campaign: " + log.failure, true);
      }
    });
  });

  auto out = open_out(c.output_dir / "metrics.csv");
  out << "repeat,kind,iteration,n_high," << csv_header_metrics() << '\n';
  std::map<std::pair<int, Index>, std::vector<MetricsReport>> by;
  for (int r = 0; r < c.repeats; ++r) {
    for (const auto& row : rows[static_cast<std::size_t>(r)]) {
      out << r << ',' << to_string(row.kind) << ',' << row.iteration << ',' << row.n_high << ','
          << csv_metrics(row.metrics) << '\n';
      by[{static_cast<int>(row.kind), row.n_high}].push_back(row.metrics);
    }
  }
  auto table = open_out(c.output_dir / "table.csv");
  table << "kind,n_high,n,median_precision,median_recall,median_f1\n";
  for (auto kind : kinds) {
    for (Index nh : {k.high_initial, k.high_target}) {
      const auto& v = by[{static_cast<int>(kind), nh}];
      std::vector<double> p, rc, f;
      for (const auto& m : v) {
        p.push_back(m.precision);
        rc.push_back(m.recall);
        f.push_back(m.f1);
      }
      table << to_string(kind) << ',' << nh << ',' << v.size() << ',' << format_double(median(p)) << ','
            << format_double(median(rc)) << ',' << format_double(median(f)) << '\n';
    }
  }
}

void run_cardiac_3d(RunContext& ctx, std::vector<RepeatStatus>& status) {
  const auto& c = ctx.config;
  const auto& k = c.cardiac;
  const auto kinds = c.effective_kinds();
  const std::vector<double> lo = {0.1, 0.035, 105.0}, hi = {0.2, 0.06, 160.0};
  const BoxDomain box(Vector::Map(lo.data(), 3), Vector::Map(hi.data(), 3));
  const std::vector<std::string> names = {"a", "b", "s2_time"};
  std::vector<std::vector<std::pair<ClassifierKind, Matrix>>> windows(static_cast<std::size_t>(c.repeats));
  parallel_repeats(c.repeats, c.workers, [&](int r) {
    auto& st = status[static_cast<std::size_t>(r)];
    const std::uint64_t rs = st.seed;
    const fs::path dir = repeat_dir(c.output_dir, r);
    fs::create_directories(dir);
    CardiacOracle cable(box, grid_of(k.dx_1d, k.dt_1d), false);
    CardiacOracle sheet(box, grid_of(k.dx_2d, k.dt_2d), true);
    guarded(st, [&] {
      ctx.say("repeat " + std::to_string(r) + " low sweep");
      const Matrix sweep = latin_hypercube(BoxDomain::unit(3), k.low_sweep, mix_seed(rs, 3));
      const LabelVector ys = cable.label_rows(sweep);
      save_physical(LabeledDataset::single_level(sweep, ys, Fidelity::Low), cable.map(), names,
                    dir / "low_sweep.csv");
      std::vector<Index> pos, neg;
      for (Index i = 0; i < ys.size(); ++i) (ys[i] == 1 ? pos : neg).push_back(i);
      Index n_pos = k.low_positives, n_neg = k.low_negatives;
      if (static_cast<Index>(pos.size()) < n_pos || static_cast<Index>(neg.size()) < n_neg) {
        // Keep the requested class ratio with what the sweep produced.
        const double ratio = static_cast<double>(k.low_negatives) / static_cast<double>(k.low_positives);
        n_pos = std::min<Index>(n_pos, static_cast<Index>(pos.size()));
        n_neg = std::min<Index>(static_cast<Index>(neg.size()),
                                static_cast<Index>(std::llround(ratio * static_cast<double>(n_pos))));
        n_pos = std::min<Index>(n_pos, static_cast<Index>(std::llround(static_cast<double>(n_neg) / ratio)));
        st.notes.push_back("repeat " + std::to_string(r) + ": sweep gave " + std::to_string(pos.size()) +
                           " positives and " + std::to_string(neg.size()) + " negatives; low set uses " +
                           std::to_string(n_pos) + " + " + std::to_string(n_neg) + " (proportional)");
      }
      std::mt19937_64 rng(mix_seed(rs, 4));
      std::shuffle(pos.begin(), pos.end(), rng);
      std::shuffle(neg.begin(), neg.end(), rng);
      std::vector<Index> pick(pos.begin(), pos.begin() + n_pos);
      pick.insert(pick.end(), neg.begin(), neg.begin() + n_neg);
      std::sort(pick.begin(), pick.end());
      const Matrix lx = sweep(pick, Eigen::all);
      const LabelVector ly = ys(pick);
      const Matrix hx = balanced_seed_selection(LabeledDataset::single_level(lx, ly, Fidelity::Low),
                                                k.high_initial_3d, mix_seed(rs, 5));
      const LabeledDataset initial = LabeledDataset::from_levels(lx, ly, hx, sheet.label_rows(hx));
      save_physical(initial, cable.map(), names, dir / "initial.csv");

      const auto wgrid = cardiac::WindowGrid::uniform(lo[0], hi[0], lo[1], hi[1], k.window_grid);
      for (auto kind : kinds) {
        const std::uint64_t ks = mix_seed(rs, 8000 + kind_stream(kind));
        CampaignConfig cc;
        cc.iterations = k.iterations_3d;
        cc.pool = PoolStrategy::FreshLhs;
        cc.pool_size = k.seed_pool;
        cc.seed = ks;
        cc.model = model_config(c, kind, 3, k.n_inducing_3d, ks);
        cc.sampler = sampler_config(c, 0);
        cc.prediction = prediction_config(c, 0);
        cc.log_path = dir / ("campaign_" + to_string(kind) + "_log.csv");
        std::optional<Matrix> window;
        cc.on_fit = [&](int it, const PosteriorTrace& t, const GpClassifier& m) {
          ctx.say("repeat " + std::to_string(r) + " " + to_string(kind) + " iteration " + std::to_string(it));
          if (it != cc.iterations) return;
          if (c.export_traces) export_trace(t, dir / ("trace_" + to_string(kind) + "_final.csv"));
          const PredictionConfig pc = prediction_config(c, mix_seed(ks, 1));
          window = cardiac::vulnerability_window(
              [&](const Matrix& abt) {
                const Matrix u = cable.map().apply(abt);
                Vector y(u.rows());
                constexpr Index kChunk = 2048;
                for (Index i0 = 0; i0 < u.rows(); i0 += kChunk) {
                  const Index n = std::min(kChunk, u.rows() - i0);
                  y.segment(i0, n) = predict_class_probability(t, m, u.middleRows(i0, n), pc).probability;
                }
                return y;
              },
              wgrid);
        };
        const CampaignLog log = run_campaign(initial, cc, [&](const Vector& x) { return sheet(x); });
        save_campaign_metrics(log, 3, dir / ("campaign_" + to_string(kind) + ".csv"));
        save_physical(log.final_data, cable.map(), names, dir / ("final_" + to_string(kind) + ".csv"));
        if (!log.complete) st.fail(to_string(kind) + " campaign: " + log.failure, true);
        if (window) {
          auto out = open_out(dir / ("window_" + to_string(kind) + ".csv"));
          out << "a,b,window\n";
          for (Index i = 0; i < window->rows(); ++i) {
            for (Index j = 0; j < window->cols(); ++j) {
              out << format_double(wgrid.a_values[i]) << ',' << format_double(wgrid.b_values[j]) << ','
                  << format_double((*window)(i, j)) << '\n';
            }
          }
          windows[static_cast<std::size_t>(r)].emplace_back(kind, *window);
        }
      }
    });
  });

  auto out = open_out(c.output_dir / "window.csv");
  out << "repeat,kind,mean_window,max_window,zero_cells\n";
  for (int r = 0; r < c.repeats; ++r) {
    for (const auto& [kind, w] : windows[static_cast<std::size_t>(r)]) {
      out << r << ',' << to_string(kind) << ',' << format_double(w.mean()) << ',' << format_double(w.maxCoeff())
          << ',' << (w.array() < 0.5).count() << '\n';
    }
  }
}

void write_manifest(const ExperimentConfig& c, const std::vector<RepeatStatus>& status, const ExperimentResult& res) {
  auto out = open_out(res.manifest);
  out << "experiment: " << to_string(c.id) << '\n';
  out << "version: " << kVersion << '\n';
  out << "config_hash: " << hex(config_hash(c)) << '\n';
  out << "seed_base: " << c.seed_base << '\n';
  out << "repeats: " << c.repeats << '\n';
  out << "kinds:";
  for (auto k : c.effective_kinds()) out << ' ' << to_string(k);
  out << '\n';
  if (c.id == ExperimentId::SyntheticSweep || c.id == ExperimentId::SyntheticAl) {
    out << "low_design: 30 near-boundary (|margin| <= 0.05) + 15 latin hypercube\n";
    out << "high_seed: balanced on low labels from a " << c.synthetic.pool_size << "-point latin hypercube\n";
  }
  if (c.id == ExperimentId::SyntheticAl) {
    out << "pool: fresh latin hypercube of " << c.synthetic.pool_size << " per iteration\n";
    out << "non_al_arm: balanced seeding with n_high=" << c.synthetic.non_al_high << '\n';
  }
  if (c.id == ExperimentId::Cardiac2d) {
    out << "pool: fixed grid " << c.cardiac.grid_time << "x" << c.cardiac.grid_b << '\n';
  }
  if (c.id == ExperimentId::Cardiac3d) out << "pool: fresh latin hypercube of " << c.cardiac.seed_pool << '\n';
  for (std::size_t r = 0; r < status.size(); ++r) {
    const auto& s = status[r];
    out << "repeat " << r << ": seed=" << s.seed << " status=" << (s.complete ? "complete" : "incomplete");
    if (!s.complete) out << " reason=" << s.failure;
    out << '\n';
  }
  for (const auto& n : res.notes) out << "note: " << n << '\n';
  out << "status: "
      << (res.status == ExperimentStatus::Complete ? "complete"
          : res.status == ExperimentStatus::Partial ? "partial"
                                                    : "failed")
      << '\n';
  out << "incomplete_repeats:";
  for (int r : res.incomplete_repeats) out << ' ' << r;
  out << '\n';
  out << "config: " << canonical_config(c) << '\n';
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, const ProgressFn& progress) {
  config.validate();
  fs::create_directories(config.output_dir);
  RunContext ctx{config, progress, {}};
  std::vector<RepeatStatus> status(static_cast<std::size_t>(config.repeats));
  for (int r = 0; r < config.repeats; ++r) {
    status[static_cast<std::size_t>(r)].seed = mix_seed(config.seed_base, static_cast<std::uint64_t>(r));
  }
  switch (config.id) {
    case ExperimentId::SyntheticSweep: run_sweep(ctx, status); break;
    case ExperimentId::SyntheticAl: run_synthetic_al(ctx, status); break;
    case ExperimentId::Cardiac2d: run_cardiac_2d(ctx, status); break;
    case ExperimentId::Cardiac3d: run_cardiac_3d(ctx, status); break;
  }
  ExperimentResult res;
  res.manifest = config.output_dir / "manifest.txt";
  bool all_numerical = true;
  for (int r = 0; r < config.repeats; ++r) {
    const auto& s = status[static_cast<std::size_t>(r)];
    res.notes.insert(res.notes.end(), s.notes.begin(), s.notes.end());
    if (!s.complete) {
      res.incomplete_repeats.push_back(r);
      all_numerical = all_numerical && s.numerical_failure;
    }
  }
  if (res.incomplete_repeats.empty()) {
    res.status = ExperimentStatus::Complete;
  } else if (static_cast<int>(res.incomplete_repeats.size()) == config.repeats && all_numerical) {
    res.status = ExperimentStatus::Failed;
  } else {
    res.status = ExperimentStatus::Partial;
  }
  write_manifest(config, status, res);
  return res;
}

}  // namespace mfgpc
