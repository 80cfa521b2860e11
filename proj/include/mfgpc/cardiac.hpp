#ifndef MFGPC_CARDIAC_HPP
#define MFGPC_CARDIAC_HPP

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mfgpc/types.hpp"

namespace mfgpc::cardiac {

/// Aliev-Panfilov cell parameters (dimensionless).
struct ApParams {
  double a = 0.15;
  double b = 0.05;
  double k = 8.0;
  double eps0 = 0.002;
  double mu1 = 0.2;
  double mu2 = 0.3;

  void validate() const;
};

/// Explicit finite-difference grid. `time_scale` is the length of one model
/// time unit in ms; diffusion is in mm^2/ms.
struct GridConfig {
  double dx = 0.25;
  double dt = 0.01;
  double length = 50.0;
  double diffusivity = 0.1;
  double time_scale = 1.1;

  Index nodes() const;
  /// dt <= 0.9 * dx^2 / (4 D); throws ConfigError otherwise.
  void check_stability() const;
};

struct StimulusProtocol {
  /// Left-boundary S1: V := 1 on x <= s1_width for s1_duration ms from t = 0.
  double s1_width = 2.0;
  double s1_duration = 1.0;
  /// S2 onset in ms; nullopt runs S1 only.
  std::optional<double> s2_time;
  double s2_duration = 5.0;
  /// Width of the S2 region along x, centred in the domain.
  double s2_width = 2.0;
};

/// dV/dt and dr/dt of the reaction terms in model time units.
struct CellRates {
  double dv;
  double dr;
};
CellRates cell_rates(double v, double r, const ApParams& p);

/// Single cell, forward Euler with step dt (ms), diffusion off. Returns V at
/// every step including t = 0.
Vector simulate_cell(double v0, double r0, double t_end, double dt, const ApParams& p, double time_scale);

/// Field state of a 1-D cable (ny == 1) or 2-D sheet stored row-major (y major).
struct FieldState {
  Index nx = 0;
  Index ny = 1;
  Vector v;
  Vector r;
  /// Holds V before the most recent step.
  Vector previous_v;

  static FieldState resting(Index nx, Index ny);
};

/// One forward-Euler step with zero-flux boundaries. Writes dV/dt (per ms)
/// into `dvdt` when given. Throws NumericalError on non-finite state.
void step(FieldState& s, const ApParams& p, const GridConfig& g, Vector* dvdt = nullptr, long step_index = 0);

enum class CableOutcome { Blocked, Unidirectional, Bidirectional, RightOnly };
std::string to_string(CableOutcome o);

struct CableResult {
  int label = 0;
  CableOutcome outcome = CableOutcome::Blocked;
  bool left_probe = false;   // S2-attributable activation at x = L/4
  bool right_probe = false;  // at x = 3L/4
  std::vector<double> left_crossings;
  std::vector<double> right_crossings;
  double wall_time = 0.0;
};

/// Upward crossings of V = 0.5 with dV/dt > 0.01/ms at the two quarter probes.
struct ProbeCrossings {
  std::vector<double> left;
  std::vector<double> right;
};
ProbeCrossings cable_crossings(const StimulusProtocol& protocol, const ApParams& p, const GridConfig& g,
                               double t_end);

/// 1-D label: 1 iff S2 produces an activation at L/4 and none at 3L/4.
/// Crossings also present in the S1-only run are not attributed to S2.
CableResult run_1d(double s2_time, const ApParams& p, const GridConfig& g = {});
int run_1d_label(double s2_time, const ApParams& p, const GridConfig& g = {});

/// Conduction velocity (mm/ms) of the S1 wave between the quarter probes.
double conduction_velocity(const ApParams& p, const GridConfig& g = {});

struct SnapshotOptions {
  std::filesystem::path path;  // frames go to path, header to path + ".txt"
  int frame_stride = 1000;     // steps between frames
};

struct SheetResult {
  int label = 0;
  bool activation_in_window = false;
  double first_window_activation = -1.0;
  double wall_time = 0.0;
};

/// 2-D label: 1 iff some node activates within [s2 + 300, s2 + 310) ms.
/// S2 covers the central `s2_width` band in x over the bottom half in y.
SheetResult run_2d(std::optional<double> s2_time, const ApParams& p, const GridConfig& g = {},
                   const std::optional<SnapshotOptions>& snapshots = std::nullopt);
int run_2d_label(double s2_time, const ApParams& p, const GridConfig& g = {});

constexpr double kDetectionDelay = 300.0;
constexpr double kDetectionWindow = 10.0;

/// Simulation request/result rows: a,b,s2_time,fidelity,label,wall_time.
struct SimJob {
  double a = 0.15;
  double b = 0.05;
  double s2_time = 130.0;
  Fidelity fidelity = Fidelity::Low;
};
struct SimResult {
  SimJob job;
  int label = 0;
  double wall_time = 0.0;
};
SimResult run_job(const SimJob& job, const GridConfig& g1d, const GridConfig& g2d);
void save_sim_results(const std::vector<SimResult>& rows, const std::filesystem::path& path);
std::vector<SimResult> load_sim_results(const std::filesystem::path& path);

/// Grid and time axis for the window integral.
struct WindowGrid {
  Vector a_values;
  Vector b_values;
  double t_begin = 105.0;
  double t_end = 160.0;
  double dt = 0.5;

  /// n x n grid over [a_lo, a_hi] x [b_lo, b_hi].
  static WindowGrid uniform(double a_lo, double a_hi, double b_lo, double b_hi, Index n = 21);
  /// Left-endpoint time samples t_begin + k dt, k < (t_end - t_begin)/dt.
  Vector times() const;
};

/// Class probability y* at rows (a, b, t).
using ProbabilityField = std::function<Vector(const Matrix& abt)>;

/// Window width (ms) per (a, b) cell: sum of y* dt over the time samples.
/// Result is a_values.size() x b_values.size().
Matrix vulnerability_window(const ProbabilityField& y_star, const WindowGrid& grid);

}  // namespace mfgpc::cardiac

#endif  // MFGPC_CARDIAC_HPP
