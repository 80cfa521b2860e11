#include "mfgpc/cardiac.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include "csv_util.hpp"

namespace mfgpc::cardiac {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

long to_steps(double t, double dt) { return std::lround(t / dt); }

bool rising_activation(double v_old, double v_new, double dt) {
  return v_old < 0.5 && v_new >= 0.5 && (v_new - v_old) / dt > 0.01;
}

void check_finite(const FieldState& s, long step_index) {
  if (!s.v.allFinite() || !s.r.allFinite()) {
    throw NumericalError("cardiac solver blew up at step " + std::to_string(step_index));
  }
}

}  // namespace

void ApParams::validate() const {
  if (!(a > 0.0 && b > 0.0 && k > 0.0 && eps0 > 0.0 && mu1 > 0.0 && mu2 > 0.0)) {
    throw DomainError("Aliev-Panfilov parameters must be positive");
  }
}

Index GridConfig::nodes() const { return static_cast<Index>(std::lround(length / dx)) + 1; }

void GridConfig::check_stability() const {
  if (!(dx > 0.0 && dt > 0.0 && length > 0.0 && diffusivity >= 0.0 && time_scale > 0.0)) {
    throw ConfigError("grid: dx, dt, length and time scale must be positive");
  }
  const double limit = 0.9 * dx * dx / (4.0 * diffusivity);
  if (diffusivity > 0.0 && dt > limit) {
    throw ConfigError("grid: dt = " + std::to_string(dt) + " exceeds the explicit stability limit " +
                      std::to_string(limit));
  }
}

CellRates cell_rates(double v, double r, const ApParams& p) {
  return {-p.k * v * (v - p.a) * (v - 1.0) - v * r, (p.eps0 + p.mu1 * r / (p.mu2 + v)) * (-r - p.k * v * (v - p.b - 1.0))};
}

Vector simulate_cell(double v0, double r0, double t_end, double dt, const ApParams& p, double time_scale) {
  const long n = to_steps(t_end, dt);
  Vector out(n + 1);
  double v = v0, r = r0;
  out[0] = v;
  for (long i = 0; i < n; ++i) {
    const auto rates = cell_rates(v, r, p);
    v += dt * rates.dv / time_scale;
    r += dt * rates.dr / time_scale;
    out[i + 1] = v;
  }
  return out;
}

FieldState FieldState::resting(Index nx, Index ny) {
  FieldState s;
  s.nx = nx;
  s.ny = ny;
  s.v = Vector::Zero(nx * ny);
  s.r = Vector::Zero(nx * ny);
  s.previous_v = Vector::Zero(nx * ny);
  return s;
}

void step(FieldState& s, const ApParams& p, const GridConfig& g, Vector* dvdt, long step_index) {
  const Index nx = s.nx, ny = s.ny;
  const double c = g.diffusivity / (g.dx * g.dx);
  const double inv_t = 1.0 / g.time_scale;
  const double dt = g.dt;
  s.previous_v.swap(s.v);
  if (s.v.size() != s.previous_v.size()) s.v.resize(s.previous_v.size());
  if (dvdt) dvdt->resize(nx * ny);
  const double* v = s.previous_v.data();
  double* vn = s.v.data();
  double* r = s.r.data();
  // Zero flux: the ghost node mirrors the first interior neighbour.
  for (Index j = 0; j < ny; ++j) {
    const double* row = v + j * nx;
    const double* up = ny == 1 ? nullptr : v + (j == ny - 1 ? j - 1 : j + 1) * nx;
    const double* down = ny == 1 ? nullptr : v + (j == 0 ? 1 : j - 1) * nx;
    for (Index i = 0; i < nx; ++i) {
      const double vc = row[i];
      const double left = row[i == 0 ? 1 : i - 1];
      const double right = row[i == nx - 1 ? nx - 2 : i + 1];
      double lap = left + right - 2.0 * vc;
      if (ny > 1) lap += up[i] + down[i] - 2.0 * vc;
      const Index idx = j * nx + i;
      const double rc = r[idx];
      const double fv = -p.k * vc * (vc - p.a) * (vc - 1.0) - vc * rc;
      const double fr = (p.eps0 + p.mu1 * rc / (p.mu2 + vc)) * (-rc - p.k * vc * (vc - p.b - 1.0));
      const double d = c * lap + fv * inv_t;
      vn[idx] = vc + dt * d;
      r[idx] = rc + dt * fr * inv_t;
      if (dvdt) (*dvdt)[idx] = d;
    }
  }
  if (step_index % 1000 == 0) check_finite(s, step_index);
}

std::string to_string(CableOutcome o) {
  switch (o) {
    case CableOutcome::Blocked:
      return "blocked";
    case CableOutcome::Unidirectional:
      return "unidirectional";
    case CableOutcome::Bidirectional:
      return "bidirectional";
    case CableOutcome::RightOnly:
      return "right-only";
  }
  return "?";
}

ProbeCrossings cable_crossings(const StimulusProtocol& protocol, const ApParams& p, const GridConfig& g,
                               double t_end) {
  p.validate();
  g.check_stability();
  const Index n = g.nodes();
  FieldState s = FieldState::resting(n, 1);
  const Index q1 = static_cast<Index>(std::lround(g.length / 4.0 / g.dx));
  const Index q3 = static_cast<Index>(std::lround(3.0 * g.length / 4.0 / g.dx));
  const long steps = to_steps(t_end, g.dt);
  const long s1_end = to_steps(protocol.s1_duration, g.dt);
  long s2_begin = -1, s2_end = -1;
  if (protocol.s2_time) {
    s2_begin = to_steps(*protocol.s2_time, g.dt);
    s2_end = s2_begin + to_steps(protocol.s2_duration, g.dt);
  }
  const double centre = 0.5 * g.length, half = 0.5 * protocol.s2_width, tol = 1e-9;
  ProbeCrossings out;
  for (long it = 0; it < steps; ++it) {
    for (Index i = 0; i < n; ++i) {
      const double x = static_cast<double>(i) * g.dx;
      if (it < s1_end && x <= protocol.s1_width + tol) s.v[i] = 1.0;
      if (it >= s2_begin && it < s2_end && std::abs(x - centre) <= half + tol) s.v[i] = 1.0;
    }
    step(s, p, g, nullptr, it);
    const double t = static_cast<double>(it) * g.dt;
    if (rising_activation(s.previous_v[q1], s.v[q1], g.dt)) out.left.push_back(t);
    if (rising_activation(s.previous_v[q3], s.v[q3], g.dt)) out.right.push_back(t);
  }
  check_finite(s, steps);
  return out;
}

CableResult run_1d(double s2_time, const ApParams& p, const GridConfig& g) {
  const auto t0 = Clock::now();
  const double t_end = s2_time + 200.0;
  StimulusProtocol with_s2;
  with_s2.s2_time = s2_time;
  const ProbeCrossings both = cable_crossings(with_s2, p, g, t_end);
  const ProbeCrossings s1_only = cable_crossings(StimulusProtocol{}, p, g, t_end);
  // S2-attributable: more post-onset crossings than the unperturbed S1 run.
  auto after = [&](const std::vector<double>& c) {
    long n = 0;
    for (double t : c) n += t >= s2_time ? 1 : 0;
    return n;
  };
  CableResult res;
  res.left_crossings = both.left;
  res.right_crossings = both.right;
  res.left_probe = after(both.left) > after(s1_only.left);
  res.right_probe = after(both.right) > after(s1_only.right);
  if (res.left_probe && res.right_probe) {
    res.outcome = CableOutcome::Bidirectional;
  } else if (res.left_probe) {
    res.outcome = CableOutcome::Unidirectional;
  } else if (res.right_probe) {
    res.outcome = CableOutcome::RightOnly;
  } else {
    res.outcome = CableOutcome::Blocked;
  }
  res.label = res.outcome == CableOutcome::Unidirectional ? 1 : 0;
  res.wall_time = seconds_since(t0);
  return res;
}

int run_1d_label(double s2_time, const ApParams& p, const GridConfig& g) { return run_1d(s2_time, p, g).label; }

double conduction_velocity(const ApParams& p, const GridConfig& g) {
  const ProbeCrossings c = cable_crossings(StimulusProtocol{}, p, g, 0.75 * g.length / 0.15);
  if (c.left.empty() || c.right.empty()) throw NumericalError("conduction velocity: S1 wave did not propagate");
  return 0.5 * g.length / (c.right.front() - c.left.front());
}

SheetResult run_2d(std::optional<double> s2_time, const ApParams& p, const GridConfig& g,
                   const std::optional<SnapshotOptions>& snapshots) {
  const auto t0 = Clock::now();
  p.validate();
  g.check_stability();
  const StimulusProtocol protocol;
  const Index n = g.nodes();
  FieldState s = FieldState::resting(n, n);
  const double reference = s2_time.value_or(0.0);
  const long window_begin = to_steps(reference + kDetectionDelay, g.dt);
  const long window_end = to_steps(reference + kDetectionDelay + kDetectionWindow, g.dt);
  const long s1_end = to_steps(protocol.s1_duration, g.dt);
  long s2_begin = -1, s2_end = -1;
  if (s2_time) {
    s2_begin = to_steps(*s2_time, g.dt);
    s2_end = s2_begin + to_steps(protocol.s2_duration, g.dt);
  }
  const double centre = 0.5 * g.length, half = 0.5 * protocol.s2_width, tol = 1e-9;
  std::vector<Index> s1_nodes, s2_nodes;
  for (Index j = 0; j < n; ++j) {
    const double y = static_cast<double>(j) * g.dx;
    for (Index i = 0; i < n; ++i) {
      const double x = static_cast<double>(i) * g.dx;
      if (x <= protocol.s1_width + tol) s1_nodes.push_back(j * n + i);
      if (std::abs(x - centre) <= half + tol && y <= centre + tol) s2_nodes.push_back(j * n + i);
    }
  }

  std::ofstream frames;
  long n_frames = 0;
  if (snapshots) {
    if (snapshots->frame_stride < 1) throw ConfigError("snapshot frame stride must be >= 1");
    frames.open(snapshots->path, std::ios::binary);
    if (!frames) throw Error("cannot write snapshot file " + snapshots->path.string());
  }

  SheetResult res;
  for (long it = 0; it < window_end; ++it) {
    if (it < s1_end) {
      for (Index k : s1_nodes) s.v[k] = 1.0;
    }
    if (it >= s2_begin && it < s2_end) {
      for (Index k : s2_nodes) s.v[k] = 1.0;
    }
    step(s, p, g, nullptr, it);
    if (snapshots && it % snapshots->frame_stride == 0) {
      std::vector<float> buf(static_cast<std::size_t>(s.v.size()));
      for (Index k = 0; k < s.v.size(); ++k) buf[static_cast<std::size_t>(k)] = static_cast<float>(s.v[k]);
      frames.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
      ++n_frames;
    }
    // Below half the threshold everywhere after the last stimulus nothing can
    // re-excite, so the label is settled.
    if (!snapshots && it >= s2_end && it >= s1_end && it % 1000 == 0 && s.v.maxCoeff() < 0.5 * p.a) break;
    if (it >= window_begin) {
      for (Index k = 0; k < s.v.size(); ++k) {
        if (rising_activation(s.previous_v[k], s.v[k], g.dt)) {
          res.activation_in_window = true;
          res.first_window_activation = static_cast<double>(it) * g.dt;
          break;
        }
      }
      if (res.activation_in_window && !snapshots) break;
    }
  }
  check_finite(s, window_end);
  if (snapshots) {
    std::ofstream header(snapshots->path.string() + ".txt");
    header << "nx " << n << "\nny " << n << "\ndx " << g.dx << "\ndt " << g.dt << "\nframe_stride "
           << snapshots->frame_stride << "\nframes " << n_frames << "\nformat float32 row-major y-major\n";
  }
  res.label = res.activation_in_window ? 1 : 0;
  res.wall_time = seconds_since(t0);
  return res;
}

int run_2d_label(double s2_time, const ApParams& p, const GridConfig& g) { return run_2d(s2_time, p, g).label; }

SimResult run_job(const SimJob& job, const GridConfig& g1d, const GridConfig& g2d) {
  ApParams p;
  p.a = job.a;
  p.b = job.b;
  SimResult out;
  out.job = job;
  const auto t0 = Clock::now();
  out.label = job.fidelity == Fidelity::Low ? run_1d_label(job.s2_time, p, g1d) : run_2d_label(job.s2_time, p, g2d);
  out.wall_time = seconds_since(t0);
  return out;
}

void save_sim_results(const std::vector<SimResult>& rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "a,b,s2_time,fidelity,label,wall_time\n";
  for (const auto& r : rows) {
    out << detail::format_double(r.job.a) << ',' << detail::format_double(r.job.b) << ','
        << detail::format_double(r.job.s2_time) << ',' << mfgpc::to_string(r.job.fidelity) << ',' << r.label << ','
        << detail::format_double(r.wall_time) << '\n';
  }
}

std::vector<SimResult> load_sim_results(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  std::size_t lineno = 1;
  // Job lists may omit the result columns; those rows load with label -1.
  std::size_t fields = 0;
  if (std::getline(in, line)) {
    const auto head = detail::trim(line);
    if (head == "a,b,s2_time,fidelity,label,wall_time") fields = 6;
    if (head == "a,b,s2_time,fidelity") fields = 4;
  }
  if (fields == 0) throw SchemaError("simulation CSV header must be a,b,s2_time,fidelity[,label,wall_time]");
  std::vector<SimResult> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto tok = detail::split_csv(line);
    if (tok.size() != fields) throw ParseError(lineno, "expected " + std::to_string(fields) + " fields");
    SimResult r;
    r.job.a = detail::parse_double(tok[0], lineno);
    r.job.b = detail::parse_double(tok[1], lineno);
    r.job.s2_time = detail::parse_double(tok[2], lineno);
    const auto fid = detail::trim(tok[3]);
    if (fid == "L") {
      r.job.fidelity = Fidelity::Low;
    } else if (fid == "H") {
      r.job.fidelity = Fidelity::High;
    } else {
      throw SchemaError("line " + std::to_string(lineno) + ": unknown fidelity tag '" + std::string(fid) + "'");
    }
    if (fields == 4) {
      r.label = -1;
      rows.push_back(r);
      continue;
    }
    r.label = static_cast<int>(detail::parse_int(tok[4], lineno));
    if (r.label != 0 && r.label != 1) throw SchemaError("line " + std::to_string(lineno) + ": label must be 0 or 1");
    r.wall_time = detail::parse_double(tok[5], lineno);
    rows.push_back(r);
  }
  return rows;
}

WindowGrid WindowGrid::uniform(double a_lo, double a_hi, double b_lo, double b_hi, Index n) {
  if (n < 2) throw DomainError("window grid needs at least 2 points per axis");
  WindowGrid g;
  g.a_values = Vector::LinSpaced(n, a_lo, a_hi);
  g.b_values = Vector::LinSpaced(n, b_lo, b_hi);
  return g;
}

Vector WindowGrid::times() const {
  if (!(dt > 0.0) || !(t_end > t_begin)) throw DomainError("window grid: empty time interval");
  const auto n = static_cast<Index>(std::lround((t_end - t_begin) / dt));
  Vector t(n);
  for (Index k = 0; k < n; ++k) t[k] = t_begin + static_cast<double>(k) * dt;
  return t;
}

Matrix vulnerability_window(const ProbabilityField& y_star, const WindowGrid& grid) {
  const Vector t = grid.times();
  const Index na = grid.a_values.size(), nb = grid.b_values.size(), nt = t.size();
  Matrix abt(na * nb * nt, 3);
  Index row = 0;
  for (Index i = 0; i < na; ++i) {
    for (Index j = 0; j < nb; ++j) {
      for (Index k = 0; k < nt; ++k, ++row) {
        abt(row, 0) = grid.a_values[i];
        abt(row, 1) = grid.b_values[j];
        abt(row, 2) = t[k];
      }
    }
  }
  const Vector y = y_star(abt);
  if (y.size() != abt.rows()) throw DimensionError("window: probability field returned wrong length");
  Matrix w(na, nb);
  row = 0;
  for (Index i = 0; i < na; ++i) {
    for (Index j = 0; j < nb; ++j) {
      double s = 0.0;
      for (Index k = 0; k < nt; ++k, ++row) s += y[row];
      w(i, j) = s * grid.dt;
    }
  }
  return w;
}

}  // namespace mfgpc::cardiac
