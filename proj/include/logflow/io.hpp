#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "logflow/critical.hpp"
#include "logflow/curvature.hpp"
#include "logflow/flow.hpp"
#include "logflow/soliton.hpp"

namespace logflow {

using json = nlohmann::ordered_json;

inline json to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline json to_json(const AssumptionReport& r) {
  json tests = json::array();
  for (const auto& t : r.tests)
    tests.push_back({{"test", t.test}, {"pass", t.pass}, {"worst_violation", t.worst_violation}});
  return {{"curvature", r.name},
          {"dimension", r.n},
          {"declared_class", to_string(r.declared)},
          {"pass", r.pass()},
          {"tests", tests},
          {"epsilon0_estimate", r.epsilon0_estimate},
          {"samples", r.samples},
          {"seed", r.seed}};
}

inline json to_json(const MonitorSummary& m) {
  json series = json::array();
  for (const auto& s : m.series)
    series.push_back({{"name", s.name},
                      {"bound", s.bound},
                      {"initial", s.initial},
                      {"min", s.min},
                      {"max", s.max},
                      {"divergence", s.divergence},
                      {"bounded", s.bounded}});
  return {{"series", series}, {"gradient_bound_all", m.gradient_bound_all}, {"all_bounded", m.all_bounded()}};
}

inline json to_json(const FlowTrajectory& t, const MonitorSummary& m) {
  json j{{"outcome", to_string(t.outcome.kind)},
         {"event_time", t.outcome.event_time},
         {"initial_outer_radius", t.initial_outer_radius},
         {"records", t.records.size()},
         {"steps", t.step_times.size()},
         {"rejected_steps", t.rejected_steps},
         {"max_abs_ht", t.max_abs_ht()}};
  if (t.outcome.kind == OutcomeKind::Shrunk) j["shrink_time_estimate"] = t.outcome.shrink_time_estimate;
  if (t.outcome.kind == OutcomeKind::Translating) {
    j["xi"] = to_json(t.outcome.xi);
    j["translation_residual"] = t.outcome.residual;
  }
  if (!t.records.empty()) {
    const auto& last = t.records.back();
    j["final"] = {{"t", last.t},
                  {"inner_radius", last.metrics.inner_radius},
                  {"outer_radius", last.metrics.outer_radius},
                  {"diameter", last.metrics.diameter},
                  {"steiner", to_json(last.metrics.steiner)}};
  }
  j["monitors"] = to_json(m);
  return j;
}

inline json to_json(const CriticalBracket& b) {
  json probes = json::array();
  for (const auto& p : b.probes) {
    json e{{"theta", p.theta}, {"outcome", p.error.empty() ? to_string(p.outcome) : "Failed"},
           {"event_time", p.event_time}, {"t_max", p.t_max}};
    if (!p.error.empty()) e["error"] = p.error;
    probes.push_back(e);
  }
  return {{"theta_minus", b.theta_minus}, {"theta_plus", b.theta_plus}, {"theta_estimate", b.estimate()},
          {"width", b.width()},           {"tolerance", b.tolerance},   {"converged", b.converged},
          {"undetermined", b.undetermined}, {"probes", probes}};
}

inline std::string timeseries_csv(const FlowTrajectory& t) {
  std::ostringstream os;
  os << std::setprecision(12);
  const int d = t.records.empty() ? 2 : int(t.records.front().metrics.steiner.size());
  os << "t,r,R,d";
  for (int i = 0; i < d; ++i) os << ",q" << i;
  os << ",min_radius,max_radius,min_Ht,dt\n";
  for (const auto& r : t.records) {
    os << r.t << ',' << r.metrics.inner_radius << ',' << r.metrics.outer_radius << ',' << r.metrics.diameter;
    for (int i = 0; i < d; ++i) os << ',' << r.metrics.steiner[i];
    os << ',' << r.min_radius << ',' << r.max_radius << ',' << r.min_ht << ',' << r.dt << '\n';
  }
  return os.str();
}

inline std::string probes_csv(const CriticalBracket& b) {
  std::ostringstream os;
  os << std::setprecision(12) << "theta,outcome,event_time,t_max\n";
  for (const auto& p : b.probes)
    os << p.theta << ',' << (p.error.empty() ? to_string(p.outcome) : "Failed") << ',' << p.event_time << ','
       << p.t_max << '\n';
  return os.str();
}

/// n = 1: CSV of theta, H and the boundary point. n = 2: OBJ mesh of the
/// boundary points on the collocation grid, closed with pole fans.
inline std::string snapshot_text(const SupportField& field) {
  std::ostringstream os;
  os << std::setprecision(12);
  const NodalGeometry g = field.geometry();
  if (field.dim() == 1) {
    os << "theta,H,px,py\n";
    for (int k = 0; k < field.node_count(); ++k)
      os << field.circle_grid()->theta(k) << ',' << g.h[k] << ',' << g.points(0, k) << ',' << g.points(1, k) << '\n';
    return os.str();
  }
  const auto& grid = *field.sphere_grid();
  os << "# support field snapshot t=" << field.time() << "\n";
  for (int k = 0; k < field.node_count(); ++k)
    os << "v " << g.points(0, k) << ' ' << g.points(1, k) << ' ' << g.points(2, k) << '\n';
  const int first_pole = field.node_count() + 1, second_pole = field.node_count() + 2;
  const bool north_first = grid.cos_theta(0) > 0.0;
  const Eigen::VectorXd pa = field.gradient(Eigen::Vector3d(0, 0, north_first ? 1.0 : -1.0));
  const Eigen::VectorXd pb = field.gradient(Eigen::Vector3d(0, 0, north_first ? -1.0 : 1.0));
  os << "v " << pa[0] << ' ' << pa[1] << ' ' << pa[2] << '\n';
  os << "v " << pb[0] << ' ' << pb[1] << ' ' << pb[2] << '\n';
  const int nt = grid.n_theta(), np = grid.n_phi();
  auto id = [np](int i, int j) { return i * np + (j % np) + 1; };
  for (int j = 0; j < np; ++j) os << "f " << first_pole << ' ' << id(0, j) << ' ' << id(0, j + 1) << '\n';
  for (int i = 0; i + 1 < nt; ++i) {
    for (int j = 0; j < np; ++j) {
      os << "f " << id(i, j) << ' ' << id(i + 1, j) << ' ' << id(i + 1, j + 1) << '\n';
      os << "f " << id(i, j) << ' ' << id(i + 1, j + 1) << ' ' << id(i, j + 1) << '\n';
    }
  }
  for (int j = 0; j < np; ++j) os << "f " << second_pole << ' ' << id(nt - 1, j + 1) << ' ' << id(nt - 1, j) << '\n';
  return os.str();
}

/// 64-bit FNV-1a, used to fingerprint configurations.
inline std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

/// Files are written as `<name>.partial` and renamed on commit(); an
/// uncommitted set removes its partial files on destruction.
class OutputSet {
 public:
  explicit OutputSet(std::filesystem::path dir) : dir_(std::move(dir)) {}
  OutputSet(const OutputSet&) = delete;
  OutputSet& operator=(const OutputSet&) = delete;
  ~OutputSet() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& f : files_) std::filesystem::remove(partial(f.path), ec);
  }

  void write(const std::string& relative, const std::string& role, const std::string& content) {
    const auto path = dir_ / relative;
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(partial(path), std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
    if (!out.flush()) throw std::runtime_error("failed writing " + path.string());
    files_.push_back({path, relative, role});
  }

  void commit() {
    for (const auto& f : files_) std::filesystem::rename(partial(f.path), f.path);
    committed_ = true;
  }

  json listing() const {
    json a = json::array();
    for (const auto& f : files_) a.push_back({{"path", f.relative}, {"role", f.role}});
    return a;
  }

  const std::filesystem::path& dir() const { return dir_; }

 private:
  struct Entry {
    std::filesystem::path path;
    std::string relative;
    std::string role;
  };
  static std::filesystem::path partial(const std::filesystem::path& p) { return p.string() + ".partial"; }

  std::filesystem::path dir_;
  std::vector<Entry> files_;
  bool committed_ = false;
};

}  // namespace logflow
