#include "mfgpc/trace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <utility>

#include "csv_util.hpp"

namespace mfgpc {

int PosteriorTrace::n_chains() const {
  int n = 0;
  for (int c : chain) n = std::max(n, c + 1);
  return n;
}

Index PosteriorTrace::index_of(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw SchemaError("trace has no parameter '" + name + "'");
  return static_cast<Index>(it - names.begin());
}

std::vector<Vector> PosteriorTrace::by_chain(Index column) const {
  const int nc = n_chains();
  std::vector<std::vector<double>> buf(static_cast<std::size_t>(nc));
  for (Index r = 0; r < n_draws(); ++r) buf[static_cast<std::size_t>(chain[static_cast<std::size_t>(r)])].push_back(values(r, column));
  std::vector<Vector> out;
  for (auto& b : buf) out.push_back(Eigen::Map<Vector>(b.data(), static_cast<Index>(b.size())));
  return out;
}

int PosteriorTrace::divergences() const {
  int n = 0;
  for (const auto& s : stats) n += s.divergent ? 1 : 0;
  return n;
}

double PosteriorTrace::max_rhat() const {
  double m = 0.0;
  for (const auto& d : diagnostics) {
    if (std::isnan(d.rhat)) continue;
    m = std::max(m, d.rhat);
  }
  return m;
}

double PosteriorTrace::min_ess() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& d : diagnostics) {
    if (std::isnan(d.ess)) continue;
    m = std::min(m, d.ess);
  }
  return m;
}

namespace {

// Truncates all chains to the shortest length.
std::pair<Index, Index> shape(const std::vector<Vector>& chains) {
  Index n = std::numeric_limits<Index>::max();
  for (const auto& c : chains) n = std::min(n, c.size());
  return {static_cast<Index>(chains.size()), chains.empty() ? 0 : n};
}

double variance(const Vector& v) {
  const double m = v.mean();
  return (v.array() - m).square().sum() / static_cast<double>(v.size() - 1);
}

}  // namespace

double split_rhat(const std::vector<Vector>& chains) {
  const auto [m0, n0] = shape(chains);
  const Index half = n0 / 2;
  if (m0 == 0 || half < 2) return std::numeric_limits<double>::quiet_NaN();
  std::vector<Vector> splits;
  for (const auto& c : chains) {
    splits.push_back(c.head(half));
    splits.push_back(c.segment(n0 - half, half));
  }
  const double n = static_cast<double>(half);
  Vector means(static_cast<Index>(splits.size()));
  double w = 0.0;
  for (std::size_t j = 0; j < splits.size(); ++j) {
    means[static_cast<Index>(j)] = splits[j].mean();
    w += variance(splits[j]);
  }
  w /= static_cast<double>(splits.size());
  const double b = n * variance(means);
  if (w <= 0.0) return b <= 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  const double var_plus = (n - 1.0) / n * w + b / n;
  return std::sqrt(var_plus / w);
}

double effective_sample_size(const std::vector<Vector>& chains) {
  const auto [m, n] = shape(chains);
  if (m == 0 || n < 4) return std::numeric_limits<double>::quiet_NaN();
  const double dn = static_cast<double>(n);

  std::vector<Vector> centered;
  Vector chain_mean(m), chain_var(m);
  for (Index j = 0; j < m; ++j) {
    const Vector c = chains[static_cast<std::size_t>(j)].head(n);
    chain_mean[j] = c.mean();
    centered.push_back(c.array() - chain_mean[j]);
    chain_var[j] = centered.back().squaredNorm() / (dn - 1.0);
  }
  const double mean_var = chain_var.mean();
  double var_plus = mean_var * (dn - 1.0) / dn;
  if (m > 1) var_plus += variance(chain_mean);
  if (!(var_plus > 0.0)) return std::numeric_limits<double>::quiet_NaN();

  // Autocovariance at lag t averaged over chains (biased estimator, / n).
  auto mean_acov = [&](Index t) {
    double s = 0.0;
    for (const auto& c : centered) s += c.head(n - t).dot(c.tail(n - t)) / dn;
    return s / static_cast<double>(m);
  };
  auto rho_at = [&](Index t) { return 1.0 - (mean_var - mean_acov(t)) / var_plus; };

  std::vector<double> rho(static_cast<std::size_t>(n), 0.0);
  rho[0] = 1.0;
  double rho_even = 1.0;
  double rho_odd = rho_at(1);
  rho[1] = rho_odd;
  Index t = 1;
  while (t < n - 4 && rho_even + rho_odd > 0.0) {
    rho_even = rho_at(t + 1);
    rho_odd = rho_at(t + 2);
    if (rho_even + rho_odd >= 0.0) {
      rho[static_cast<std::size_t>(t + 1)] = rho_even;
      rho[static_cast<std::size_t>(t + 2)] = rho_odd;
    }
    t += 2;
  }
  const Index max_t = t;
  if (rho_even > 0.0) rho[static_cast<std::size_t>(max_t + 1)] = rho_even;
  for (Index k = 1; k <= max_t - 3; k += 2) {
    const auto u = static_cast<std::size_t>(k);
    if (rho[u + 1] + rho[u + 2] > rho[u - 1] + rho[u]) {
      rho[u + 1] = 0.5 * (rho[u - 1] + rho[u]);
      rho[u + 2] = rho[u + 1];
    }
  }
  double sum = 0.0;
  for (Index k = 0; k < max_t; ++k) sum += rho[static_cast<std::size_t>(k)];
  double tau = -1.0 + 2.0 * sum + rho[static_cast<std::size_t>(max_t)];
  tau = std::max(tau, 1.0 / std::log10(static_cast<double>(m * n)));
  return static_cast<double>(m * n) / tau;
}

void compute_diagnostics(PosteriorTrace& trace) {
  trace.diagnostics.clear();
  for (Index c = 0; c < trace.n_parameters(); ++c) {
    const auto chains = trace.by_chain(c);
    trace.diagnostics.push_back({trace.names[static_cast<std::size_t>(c)], split_rhat(chains),
                                 effective_sample_size(chains)});
  }
}

void export_trace(const PosteriorTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write trace file " + path.string());
  out << "chain,draw,parameter,value\n";
  for (Index r = 0; r < trace.n_draws(); ++r) {
    const std::string prefix = std::to_string(trace.chain[static_cast<std::size_t>(r)]) + "," +
                               std::to_string(trace.draw[static_cast<std::size_t>(r)]) + ",";
    for (Index c = 0; c < trace.n_parameters(); ++c) {
      out << prefix << trace.names[static_cast<std::size_t>(c)] << ',' << detail::format_double(trace.values(r, c))
          << '\n';
    }
  }
  if (!out) throw Error("failed writing trace file " + path.string());
}

PosteriorTrace import_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open trace file " + path.string());
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line) || detail::trim(line) != "chain,draw,parameter,value") {
    throw SchemaError("trace header must be chain,draw,parameter,value");
  }
  std::map<std::string, Index> param_index;
  std::map<std::pair<int, int>, Index> row_index;
  std::vector<std::string> names;
  std::vector<std::pair<int, int>> rows;
  struct Entry {
    Index row, col;
    double value;
  };
  std::vector<Entry> entries;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto tok = detail::split_csv(line);
    if (tok.size() != 4) throw ParseError(lineno, "expected 4 fields");
    const int c = static_cast<int>(detail::parse_int(tok[0], lineno));
    const int d = static_cast<int>(detail::parse_int(tok[1], lineno));
    if (c < 0 || d < 0) throw ParseError(lineno, "negative chain or draw index");
    const std::string name(detail::trim(tok[2]));
    const double v = detail::parse_double(tok[3], lineno);
    auto pit = param_index.find(name);
    if (pit == param_index.end()) {
      pit = param_index.emplace(name, static_cast<Index>(names.size())).first;
      names.push_back(name);
    }
    auto rit = row_index.find({c, d});
    if (rit == row_index.end()) {
      rit = row_index.emplace(std::make_pair(c, d), static_cast<Index>(rows.size())).first;
      rows.emplace_back(c, d);
    }
    entries.push_back({rit->second, pit->second, v});
  }
  PosteriorTrace t;
  t.names = names;
  const auto np = static_cast<Index>(names.size());
  const auto nr = static_cast<Index>(rows.size());
  if (static_cast<Index>(entries.size()) != np * nr) {
    throw SchemaError("trace is not rectangular: every draw needs every parameter exactly once");
  }
  // Rows sorted by (chain, draw) keep the chain-major layout.
  std::vector<Index> order(static_cast<std::size_t>(nr));
  for (Index i = 0; i < nr; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    return rows[static_cast<std::size_t>(a)] < rows[static_cast<std::size_t>(b)];
  });
  std::vector<Index> position(static_cast<std::size_t>(nr));
  for (Index i = 0; i < nr; ++i) position[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = i;
  t.values = Matrix::Constant(nr, np, std::numeric_limits<double>::quiet_NaN());
  std::vector<char> seen(static_cast<std::size_t>(nr * np), 0);
  for (const auto& e : entries) {
    const Index r = position[static_cast<std::size_t>(e.row)];
    auto& flag = seen[static_cast<std::size_t>(r * np + e.col)];
    if (flag) throw SchemaError("duplicate trace entry for parameter " + names[static_cast<std::size_t>(e.col)]);
    flag = 1;
    t.values(r, e.col) = e.value;
  }
  for (Index i = 0; i < nr; ++i) {
    const auto& rc = rows[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
    t.chain.push_back(rc.first);
    t.draw.push_back(rc.second);
  }
  compute_diagnostics(t);
  return t;
}

}  // namespace mfgpc
