#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "chq/solver.hpp"

namespace chq {

// ---- potentials ------------------------------------------------------------

enum class PotentialKind { constant, single_well, double_well, sampled };

const char* potential_kind_name(PotentialKind k);
PotentialKind parse_potential_kind(const std::string& s);

// Builtin wells: V(y) = V_inf prod_i (1 - exp(-|y - c_i|^2 / w^2)) (1 + skew tanh(psi(y)))
// with psi = (y - c)_0 for one well and (|y - m|^2 - r^2) / (2r) for two, m the
// midpoint and r the half distance, so the double well is mirror symmetric about m.
// V_inf sets the plateau height: liminf V at infinity is V_inf (1 + skew) for the
// double well and V_inf (1 - skew) for the single well, positive either way.
// constant: V = V_inf everywhere. sampled: multilinear interpolation of a
// snapshot over the slow variable, held at the nearest sample outside it.
struct PotentialSpec {
  PotentialKind kind = PotentialKind::double_well;
  std::vector<Point> centers;
  double width = 4;
  double V_inf = 0.25;
  double skew = 0;
  std::string file;
};

void validate(const PotentialSpec& spec, int N);
// V(eps x); a constant spec gives a constant Potential with mu = V_inf.
Potential make_potential(const PotentialSpec& spec, double eps, int N);

struct MSet {
  std::vector<Point> M, M_delta;
  double delta = 0;
  bool degenerate = false;  // V vanishes on the whole grid
};

// Builtin wells give their centres exactly; a sampled potential gives its
// sample points with V < tol (whole-grid zero sets are flagged degenerate).
// M_delta holds M and the points of `grid` within delta of it. Throws EmptyM.
MSet detect_M(const PotentialSpec& spec, const Grid& grid, double delta, double tol = 1e-10);
// fraction times the smallest distance between points of M; fraction times
// the well width when M is a single point.
double default_delta(const PotentialSpec& spec, const MSet& m, double fraction);
double distance(const Point& a, const Point& b, int N);
double distance_to(const Point& y, const std::vector<Point>& set, int N);
int nearest(const Point& y, const std::vector<Point>& set, int N);

// (1/a) int zeta(eps x)|u|^2 with zeta(y) = y chi(|y| / radius).
Point barycenter(const Field& u, double eps, double radius);

// ---- configuration ---------------------------------------------------------

struct ExperimentConfig {
  ExponentSet exps;
  Grid grid;                // solves
  Grid ground_grid;         // scalar ground state U
  double mass = 2;
  double mu = 0;
  std::vector<double> eps_list;
  std::vector<double> profile_eps;  // halving sweep for the profile energies
  std::vector<double> masses;  // level laws
  std::vector<double> mus;
  PotentialSpec potential;
  SolveConfig solver;
  double delta_fraction = 0.1;
  double zeta_radius = 0;   // 0: just enclose M_delta
  double separation = 0.1;
  double delta_target = 0.1;
  std::string out_dir = "out";
  std::uint64_t seed = 1;
  int threads = 1;
  std::string source;       // the config text, echoed into sidecars
};

// Key = value within named sections; throws ConfigError naming the key.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// ---- reporting -------------------------------------------------------------

inline constexpr const char* kReportSchema = "chq-report/1";
inline constexpr const char* kVerifySchema = "chq-verify/1";

struct ReportRow {
  std::string experiment;
  double eps = 0, a = 0, mu = 0;
  double level = 0, lambda = 0, poho_residual = 0;
  Point bary{};
  double dist_to_M = 0;
  int iterations = 0;
  bool converged = false;
};

std::string report_header();
std::string format_row(const ReportRow& r);
std::string format_report(const std::vector<ReportRow>& rows);

// Writes through a temporary in the same directory, then renames.
void write_atomic(const std::string& path, const std::string& content);

// ---- snapshots -------------------------------------------------------------

inline constexpr std::uint32_t kSnapshotVersion = 1;

std::string encode_snapshot(const Field& u);
// Topology is not part of the format; loads are isolated for N=1, periodic otherwise.
Field decode_snapshot(const std::string& bytes);
void save_snapshot(const Field& u, const std::string& path);
Field load_snapshot(const std::string& path);

std::string solve_sidecar(const SolveResult& r, const std::string& config_echo);

// ---- experiments -----------------------------------------------------------

enum class Status { pass, fail, skipped };
const char* status_name(Status s);

struct CheckRow {
  int id = 0;
  std::string name;
  Status status = Status::fail;
  double measured = 0, threshold = 0;
  std::string detail;
};

std::string format_checks(const std::vector<CheckRow>& rows);
bool all_pass(const std::vector<CheckRow>& rows);

// Runs f(0..count-1) on up to `threads` workers; exceptions propagate after join.
void parallel_for(int count, int threads, const std::function<void(int)>& f);

struct Cell {
  double eps = 0;
  int well = 0;
  Point start{};
  SolveResult result;
  std::string error;
  ReportRow row;
};

struct ConcentrationReport {
  MSet M;
  double zeta_radius = 0;
  SolveResult ground;          // autonomous w at the config mass, b_{0,T,a} = ground.level
  std::vector<Cell> cells;     // eps-major, wells in M order
  std::vector<ReportRow> rows;
  std::vector<CheckRow> checks;
};

ConcentrationReport run_concentration(const ExperimentConfig& cfg);

struct MultiplicityReport {
  double eps = 0;
  Cell first, second;
  double separation = 0;  // relative H^s distance after alignment
  int alignment = 0;      // cells
  double level_gap = 0, mirror_defect = 0;
  bool indistinct = false;
  std::vector<ReportRow> rows;
  std::vector<CheckRow> checks;
};

// Uses the smallest eps; reuses the matching cells of `conc` when given.
MultiplicityReport run_multiplicity(const ExperimentConfig& cfg, const ConcentrationReport* conc = nullptr);

// min over integer-cell shifts k of ||u - T_k v||_{H^s} / max(||u||, ||v||).
double aligned_distance(const Field& u, const Field& v, double s, int* shift = nullptr);

struct VerifyReport {
  std::vector<CheckRow> checks;
  std::vector<ReportRow> rows;
};

VerifyReport run_verify(const ExperimentConfig& cfg);

}  // namespace chq
