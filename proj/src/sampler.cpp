#include "mfgpc/sampler.hpp"

#include <cmath>
#include <exception>
#include <future>
#include <limits>

namespace mfgpc {

namespace {

constexpr double kMaxEnergyError = 1000.0;

struct State {
  Vector q;
  Vector p;
  Vector grad;
  double logp = 0.0;
};

double kinetic(const Vector& p, const Vector& inv_metric) {
  return 0.5 * p.cwiseProduct(p).dot(inv_metric);
}

double hamiltonian(const State& s, const Vector& inv_metric) { return -s.logp + kinetic(s.p, inv_metric); }

double log_sum_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// Running mean and variance (Welford).
class Welford {
 public:
  explicit Welford(Index n) : mean_(Vector::Zero(n)), m2_(Vector::Zero(n)) {}
  void add(const Vector& x) {
    ++n_;
    const Vector delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta.cwiseProduct(x - mean_);
  }
  long count() const { return n_; }
  Vector variance() const { return m2_ / static_cast<double>(n_ - 1); }
  void restart() {
    n_ = 0;
    mean_.setZero();
    m2_.setZero();
  }

 private:
  long n_ = 0;
  Vector mean_, m2_;
};

// Warmup schedule: a fast initial buffer, a series of doubling slow windows
// for the metric, and a terminal fast buffer.
class WindowSchedule {
 public:
  explicit WindowSchedule(int n_warmup) : n_warmup_(n_warmup) {
    if (n_warmup < 20) {
      enabled_ = false;
      return;
    }
    if (init_buffer_ + base_window_ + term_buffer_ > n_warmup) {
      init_buffer_ = static_cast<int>(0.15 * n_warmup);
      term_buffer_ = static_cast<int>(0.1 * n_warmup);
      base_window_ = n_warmup - (init_buffer_ + term_buffer_);
    }
    window_size_ = base_window_;
    next_window_ = init_buffer_ + window_size_ - 1;
  }

  bool enabled() const { return enabled_; }
  bool in_window() const {
    return enabled_ && counter_ >= init_buffer_ && counter_ < n_warmup_ - term_buffer_ && counter_ != n_warmup_;
  }
  bool window_end() const { return enabled_ && counter_ == next_window_ && counter_ != n_warmup_; }
  void advance_window() {
    if (next_window_ == n_warmup_ - term_buffer_ - 1) return;
    window_size_ *= 2;
    next_window_ = counter_ + window_size_;
    if (next_window_ != n_warmup_ - term_buffer_ - 1) {
      const int boundary = next_window_ + 2 * window_size_;
      if (boundary >= n_warmup_ - term_buffer_) next_window_ = n_warmup_ - term_buffer_ - 1;
    }
  }
  void tick() { ++counter_; }

 private:
  int n_warmup_;
  bool enabled_ = true;
  int init_buffer_ = 75;
  int term_buffer_ = 50;
  int base_window_ = 25;
  int window_size_ = 0;
  int next_window_ = 0;
  int counter_ = 0;
};

struct Transition {
  double accept_stat = 0.0;
  int depth = 0;
  int n_leapfrog = 0;
  bool divergent = false;
};

class Chain {
 public:
  Chain(const LogDensity& target, const SamplerConfig& cfg, int index)
      : target_(target), cfg_(cfg), index_(index), inv_metric_(Vector::Ones(target.dim())) {
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed & 0xffffffffu), static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(index), 0x5eedu};
    rng_.seed(seq);
  }

  ChainResult run() {
    init_position();
    init_step_size();
    DualAveraging da(cfg_.target_accept);
    da.restart(step_);
    WindowSchedule windows(cfg_.n_warmup);
    Welford var(target_.dim());

    ChainResult out;
    out.chain = index_;
    int consecutive = 0;
    for (int it = 0; it < cfg_.n_warmup; ++it) {
      const Transition t = transition();
      if (t.divergent) {
        ++out.warmup_divergences;
        if (++consecutive >= cfg_.max_consecutive_warmup_divergences) {
          throw NumericalError("sampler: chain " + std::to_string(index_) + " hit " + std::to_string(consecutive) +
                               " consecutive divergent transitions during warmup");
        }
      } else {
        consecutive = 0;
      }
      step_ = da.update(t.accept_stat);
      if (cfg_.adapt_metric && windows.enabled()) {
        if (windows.in_window()) var.add(state_.q);
        if (windows.window_end()) {
          windows.advance_window();
          const double n = static_cast<double>(var.count());
          inv_metric_ = (n / (n + 5.0)) * var.variance().array() + 1e-3 * (5.0 / (n + 5.0));
          var.restart();
          init_step_size();
          da.restart(step_);
        }
        windows.tick();
      }
    }
    if (cfg_.n_warmup > 0) step_ = da.final_step();

    out.draws.resize(cfg_.n_samples, target_.dim());
    out.stats.reserve(static_cast<std::size_t>(cfg_.n_samples));
    for (int it = 0; it < cfg_.n_samples; ++it) {
      const Transition t = transition();
      out.draws.row(it) = state_.q.transpose();
      DrawStats st;
      st.accept_stat = t.accept_stat;
      st.step_size = step_;
      st.tree_depth = t.depth;
      st.n_leapfrog = t.n_leapfrog;
      st.divergent = t.divergent;
      st.energy = hamiltonian(state_, inv_metric_);
      st.log_density = state_.logp;
      out.stats.push_back(st);
      if (t.divergent) ++out.sampling_divergences;
    }
    out.step_size = step_;
    out.inv_metric = inv_metric_;
    return out;
  }

 private:
  void init_position() {
    for (int attempt = 0; attempt < 100; ++attempt) {
      state_.q = target_.initial_point(rng_);
      if (state_.q.size() != target_.dim()) throw DimensionError("sampler: initial point has wrong length");
      state_.logp = target_.log_density(state_.q, state_.grad);
      if (std::isfinite(state_.logp) && state_.grad.allFinite()) {
        state_.p = Vector::Zero(target_.dim());
        return;
      }
    }
    throw NumericalError("sampler: no finite initial point after 100 attempts");
  }

  void sample_momentum(Vector& p) {
    p.resize(target_.dim());
    for (Index i = 0; i < p.size(); ++i) p[i] = normal_(rng_) / std::sqrt(inv_metric_[i]);
  }

  bool step(State& s, double eps) { return leapfrog(target_, s.q, s.p, s.grad, s.logp, eps, inv_metric_); }

  // Doubles or halves the step until one leapfrog step crosses an
  // acceptance probability of 0.8.
  void init_step_size() {
    const State start = state_;
    const double log08 = std::log(0.8);
    auto delta_h = [&]() {
      state_ = start;
      sample_momentum(state_.p);
      const double h0 = hamiltonian(state_, inv_metric_);
      if (!step(state_, step_)) return -std::numeric_limits<double>::infinity();
      const double h = hamiltonian(state_, inv_metric_);
      return std::isfinite(h) ? h0 - h : -std::numeric_limits<double>::infinity();
    };
    double dh = delta_h();
    const int direction = dh > log08 ? 1 : -1;
    for (int i = 0; i < 100; ++i) {
      dh = delta_h();
      if (direction == 1 && !(dh > log08)) break;
      if (direction == -1 && !(dh < log08)) break;
      step_ = direction == 1 ? 2.0 * step_ : 0.5 * step_;
      if (step_ > 1e7) throw NumericalError("sampler: step size diverged while initializing; posterior is improper?");
      if (step_ < 1e-300) throw NumericalError("sampler: step size collapsed to zero while initializing");
    }
    state_ = start;
  }

  Transition transition() {
    return cfg_.algorithm == SamplerAlgorithm::Nuts ? nuts_transition() : hmc_transition();
  }

  Transition hmc_transition() {
    Transition t;
    const int lo = std::max(1, cfg_.hmc_steps / 2);
    const int hi = std::max(lo, (3 * cfg_.hmc_steps) / 2);
    const int n = std::uniform_int_distribution<int>(lo, hi)(rng_);
    State s = state_;
    sample_momentum(s.p);
    const double h0 = hamiltonian(s, inv_metric_);
    bool ok = true;
    for (int i = 0; i < n && ok; ++i) {
      ok = step(s, step_);
      ++t.n_leapfrog;
    }
    const double h = ok ? hamiltonian(s, inv_metric_) : std::numeric_limits<double>::infinity();
    if (!std::isfinite(h) || h - h0 > kMaxEnergyError) {
      t.divergent = true;
      t.accept_stat = 0.0;
      return t;
    }
    t.accept_stat = std::min(1.0, std::exp(h0 - h));
    if (uniform_(rng_) < t.accept_stat) state_ = s;
    return t;
  }

  // Multinomial NUTS with generalized no-U-turn checks, including the
  // checks across merged subtrees.
  struct Subtree {
    State z_propose;
    Vector p_sharp_beg, p_sharp_end, p_beg, p_end, rho;
    double log_sum_weight = -std::numeric_limits<double>::infinity();
  };

  bool compute_criterion(const Vector& p_sharp_minus, const Vector& p_sharp_plus, const Vector& rho) const {
    return p_sharp_plus.dot(rho) > 0.0 && p_sharp_minus.dot(rho) > 0.0;
  }

  Vector sharp(const Vector& p) const { return inv_metric_.cwiseProduct(p); }

  bool build_tree(int depth, State& z, Vector& p_sharp_beg, Vector& p_sharp_end, Vector& rho, Vector& p_beg,
                  Vector& p_end, double h0, double sign, int& n_leapfrog, double& log_sum_weight, double& sum_metro,
                  bool& divergent, State& z_propose) {
    if (depth == 0) {
      const bool ok = step(z, sign * step_);
      ++n_leapfrog;
      const double h = ok ? hamiltonian(z, inv_metric_) : std::numeric_limits<double>::infinity();
      const double hh = std::isfinite(h) ? h : std::numeric_limits<double>::infinity();
      if (hh - h0 > kMaxEnergyError) divergent = true;
      log_sum_weight = log_sum_exp(log_sum_weight, h0 - hh);
      sum_metro += h0 - hh > 0.0 ? 1.0 : std::exp(h0 - hh);
      z_propose = z;
      p_sharp_beg = sharp(z.p);
      p_sharp_end = p_sharp_beg;
      rho += z.p;
      p_beg = z.p;
      p_end = z.p;
      return !divergent;
    }

    // Left subtree
    Vector rho_left = Vector::Zero(rho.size());
    double lsw_left = -std::numeric_limits<double>::infinity();
    Vector p_sharp_beg_left, p_sharp_end_left, p_beg_left, p_end_left;
    State z_prop_left;
    const bool valid_left = build_tree(depth - 1, z, p_sharp_beg_left, p_sharp_end_left, rho_left, p_beg_left,
                                       p_end_left, h0, sign, n_leapfrog, lsw_left, sum_metro, divergent, z_prop_left);
    if (!valid_left) return false;

    // Right subtree
    Vector rho_right = Vector::Zero(rho.size());
    double lsw_right = -std::numeric_limits<double>::infinity();
    Vector p_sharp_beg_right, p_sharp_end_right, p_beg_right, p_end_right;
    State z_prop_right;
    const bool valid_right = build_tree(depth - 1, z, p_sharp_beg_right, p_sharp_end_right, rho_right, p_beg_right,
                                        p_end_right, h0, sign, n_leapfrog, lsw_right, sum_metro, divergent,
                                        z_prop_right);
    if (!valid_right) return false;

    const double lsw_subtree = log_sum_exp(lsw_left, lsw_right);
    log_sum_weight = log_sum_exp(log_sum_weight, lsw_subtree);
    if (lsw_right > lsw_subtree) {
      z_propose = z_prop_right;
    } else {
      const double accept_prob = std::exp(lsw_right - lsw_subtree);
      z_propose = uniform_(rng_) < accept_prob ? z_prop_right : z_prop_left;
    }

    const Vector rho_subtree = rho_left + rho_right;
    rho += rho_subtree;
    p_sharp_beg = p_sharp_beg_left;
    p_sharp_end = p_sharp_end_right;
    p_beg = p_beg_left;
    p_end = p_end_right;

    bool persist = compute_criterion(p_sharp_beg, p_sharp_end, rho_subtree);
    const Vector rho_extended = rho_left + p_beg_right;
    persist = persist && compute_criterion(p_sharp_beg, p_sharp_beg_right, rho_extended);
    const Vector rho_extended2 = rho_right + p_end_left;
    persist = persist && compute_criterion(p_sharp_end_left, p_sharp_end, rho_extended2);
    return persist;
  }

  Transition nuts_transition() {
    Transition t;
    State z = state_;
    sample_momentum(z.p);
    const double h0 = hamiltonian(z, inv_metric_);

    State z_fwd = z, z_bck = z;
    State z_sample = z;
    Vector p_fwd_fwd = z.p, p_sharp_fwd_fwd = sharp(z.p);
    Vector p_fwd_bck = z.p, p_sharp_fwd_bck = p_sharp_fwd_fwd;
    Vector p_bck_fwd = z.p, p_sharp_bck_fwd = p_sharp_fwd_fwd;
    Vector p_bck_bck = z.p, p_sharp_bck_bck = p_sharp_fwd_fwd;
    Vector rho = z.p;
    double log_sum_weight = 0.0;
    double sum_metro = 0.0;
    int n_leapfrog = 0;
    bool divergent = false;
    int depth = 0;

    while (depth < cfg_.max_tree_depth) {
      Vector rho_fwd = Vector::Zero(rho.size()), rho_bck = Vector::Zero(rho.size());
      bool valid_subtree = false;
      double lsw_subtree = -std::numeric_limits<double>::infinity();
      State z_propose;

      if (uniform_(rng_) > 0.5) {
        rho_bck = rho;
        p_bck_fwd = p_fwd_bck;
        p_sharp_bck_fwd = p_sharp_fwd_bck;
        valid_subtree = build_tree(depth, z_fwd, p_sharp_fwd_bck, p_sharp_fwd_fwd, rho_fwd, p_fwd_bck, p_fwd_fwd, h0,
                                   1.0, n_leapfrog, lsw_subtree, sum_metro, divergent, z_propose);
      } else {
        rho_fwd = rho;
        p_fwd_bck = p_bck_fwd;
        p_sharp_fwd_bck = p_sharp_bck_fwd;
        valid_subtree = build_tree(depth, z_bck, p_sharp_bck_fwd, p_sharp_bck_bck, rho_bck, p_bck_fwd, p_bck_bck, h0,
                                   -1.0, n_leapfrog, lsw_subtree, sum_metro, divergent, z_propose);
      }
      if (!valid_subtree) break;
      ++depth;

      if (lsw_subtree > log_sum_weight) {
        z_sample = z_propose;
      } else {
        const double accept_prob = std::exp(lsw_subtree - log_sum_weight);
        if (uniform_(rng_) < accept_prob) z_sample = z_propose;
      }
      log_sum_weight = log_sum_exp(log_sum_weight, lsw_subtree);

      rho = rho_bck + rho_fwd;
      bool persist = compute_criterion(p_sharp_bck_bck, p_sharp_fwd_fwd, rho);
      const Vector rho_extended = rho_bck + p_fwd_bck;
      persist = persist && compute_criterion(p_sharp_bck_bck, p_sharp_fwd_bck, rho_extended);
      const Vector rho_extended2 = rho_fwd + p_bck_fwd;
      persist = persist && compute_criterion(p_sharp_bck_fwd, p_sharp_fwd_fwd, rho_extended2);
      if (!persist) break;
    }

    state_ = z_sample;
    state_.p.setZero();
    t.depth = depth;
    t.n_leapfrog = n_leapfrog;
    t.divergent = divergent;
    t.accept_stat = n_leapfrog > 0 ? sum_metro / static_cast<double>(n_leapfrog) : 0.0;
    return t;
  }

  const LogDensity& target_;
  const SamplerConfig& cfg_;
  int index_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  Vector inv_metric_;
  State state_;
  double step_ = 1.0;
};

}  // namespace

Vector LogDensity::initial_point(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  Vector q(dim());
  for (Index i = 0; i < q.size(); ++i) q[i] = u(rng);
  return q;
}

void SamplerConfig::validate() const {
  if (n_chains < 1) throw ConfigError("sampler: n_chains must be >= 1");
  if (n_warmup < 0) throw ConfigError("sampler: n_warmup must be >= 0");
  if (n_samples < 1) throw ConfigError("sampler: n_samples must be >= 1");
  if (!(target_accept > 0.0 && target_accept < 1.0)) throw ConfigError("sampler: target_accept must lie in (0, 1)");
  if (max_tree_depth < 1) throw ConfigError("sampler: max_tree_depth must be >= 1");
  if (hmc_steps < 1) throw ConfigError("sampler: hmc_steps must be >= 1");
  if (max_consecutive_warmup_divergences < 1) throw ConfigError("sampler: divergence limit must be >= 1");
}

double ChainResult::mean_accept_stat() const {
  if (stats.empty()) return 0.0;
  double s = 0.0;
  for (const auto& st : stats) s += st.accept_stat;
  return s / static_cast<double>(stats.size());
}

bool leapfrog(const LogDensity& target, Vector& q, Vector& p, Vector& grad, double& logp, double step,
              const Vector& inv_metric) {
  p.noalias() += 0.5 * step * grad;
  q.noalias() += step * inv_metric.cwiseProduct(p);
  logp = target.log_density(q, grad);
  if (!std::isfinite(logp) || grad.size() != q.size() || !grad.allFinite()) {
    logp = -std::numeric_limits<double>::infinity();
    return false;
  }
  p.noalias() += 0.5 * step * grad;
  return true;
}

void DualAveraging::restart(double initial_step) {
  mu_ = std::log(10.0 * initial_step);
  counter_ = 0.0;
  s_bar_ = 0.0;
  x_bar_ = 0.0;
}

double DualAveraging::update(double accept_stat) {
  counter_ += 1.0;
  accept_stat = std::min(1.0, accept_stat);
  const double eta = 1.0 / (counter_ + t0_);
  s_bar_ = (1.0 - eta) * s_bar_ + eta * (target_ - accept_stat);
  const double x = mu_ - s_bar_ * std::sqrt(counter_) / gamma_;
  const double x_eta = std::pow(counter_, -kappa_);
  x_bar_ = (1.0 - x_eta) * x_bar_ + x_eta * x;
  return std::exp(x);
}

double DualAveraging::final_step() const { return std::exp(x_bar_); }

ChainResult run_chain(const LogDensity& target, const SamplerConfig& config, int chain_index) {
  config.validate();
  Chain chain(target, config, chain_index);
  return chain.run();
}

std::vector<ChainResult> run_chains(const LogDensity& target, const SamplerConfig& config) {
  config.validate();
  std::vector<std::future<ChainResult>> futures;
  futures.reserve(static_cast<std::size_t>(config.n_chains));
  for (int c = 0; c < config.n_chains; ++c) {
    futures.push_back(std::async(std::launch::async, [&target, &config, c] { return run_chain(target, config, c); }));
  }
  std::vector<ChainResult> out;
  std::exception_ptr first_error;
  for (auto& f : futures) {
    try {
      out.push_back(f.get());
    } catch (...) {
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

}  // namespace mfgpc
