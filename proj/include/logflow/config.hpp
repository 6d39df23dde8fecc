#pragma once

// Experiment configuration: a versioned JSON document. Unknown keys are
// rejected at every level; errors name the offending field path.

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "logflow/critical.hpp"
#include "logflow/curvature.hpp"
#include "logflow/errors.hpp"
#include "logflow/flow.hpp"
#include "logflow/grids.hpp"
#include "logflow/io.hpp"
#include "logflow/speed.hpp"

namespace logflow {

inline constexpr const char* kConfigSchema = "logflow/1";
inline constexpr const char* kToolVersion = "1.0.0";

struct BodyConfig {
  std::string kind = "sphere";  // sphere | ellipsoid | leaf
  double radius = 1.0;
  std::vector<double> semi_axes;
  std::vector<double> center;
  double theta = 1.0;
};

struct ExperimentConfig {
  int dimension = 1;
  int resolution = 256;
  std::string curvature = "GaussInverse";
  double curvature_exponent = 1.0;  // power_sum only
  json speed = {{"kind", "constant"}, {"c", 1.0}};
  std::optional<BodyConfig> initial;
  std::optional<json> foliation;
  double theta_min = 1e-3;
  double theta_max = 1e3;
  RunConfig flow;
  double critical_tolerance = 1e-3;
  int critical_budget = 40;
  int check_samples = 10000;
  int soliton_sign = 1;
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  json source;  // normalized document, defaults filled in
};

namespace detail {

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  void allow(std::initializer_list<const char*> keys) const {
    std::set<std::string> ok(keys.begin(), keys.end());
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!ok.count(it.key())) throw ConfigError(field(it.key()), "unknown key");
  }

  bool has(const char* key) const { return j_.contains(key); }
  const json& at(const char* key) const { return j_.at(key); }
  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  double number(const char* key, double fallback) const {
    if (!has(key)) return fallback;
    if (!j_.at(key).is_number()) throw ConfigError(field(key), "expected a number");
    return j_.at(key).get<double>();
  }
  double positive(const char* key, double fallback) const {
    const double v = number(key, fallback);
    if (!(v > 0.0)) throw ConfigError(field(key), "must be positive");
    return v;
  }
  int integer(const char* key, int fallback) const {
    if (!has(key)) return fallback;
    if (!j_.at(key).is_number_integer()) throw ConfigError(field(key), "expected an integer");
    return j_.at(key).get<int>();
  }
  bool boolean(const char* key, bool fallback) const {
    if (!has(key)) return fallback;
    if (!j_.at(key).is_boolean()) throw ConfigError(field(key), "expected true or false");
    return j_.at(key).get<bool>();
  }
  std::string string(const char* key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    if (!j_.at(key).is_string()) throw ConfigError(field(key), "expected a string");
    return j_.at(key).get<std::string>();
  }
  std::vector<double> vector(const char* key, std::size_t size) const {
    if (!has(key)) throw ConfigError(field(key), "required");
    const json& a = j_.at(key);
    if (!a.is_array() || a.size() != size) throw ConfigError(field(key), "expected " + std::to_string(size) + " numbers");
    std::vector<double> v;
    for (const auto& x : a) {
      if (!x.is_number()) throw ConfigError(field(key), "expected numbers");
      v.push_back(x.get<double>());
    }
    return v;
  }

 private:
  const json& j_;
  std::string path_;
};

inline BodyConfig parse_body(const json& j, const std::string& path, int n, bool allow_leaf) {
  Reader r(j, path);
  BodyConfig b;
  b.kind = r.string("kind", "");
  if (b.kind == "sphere") {
    r.allow({"kind", "radius"});
    b.radius = r.positive("radius", 1.0);
  } else if (b.kind == "ellipsoid") {
    r.allow({"kind", "semi_axes", "center"});
    b.semi_axes = r.vector("semi_axes", n + 1);
    for (double a : b.semi_axes)
      if (!(a > 0.0)) throw ConfigError(r.field("semi_axes"), "must be positive");
    b.center = r.has("center") ? r.vector("center", n + 1) : std::vector<double>(n + 1, 0.0);
  } else if (b.kind == "leaf" && allow_leaf) {
    r.allow({"kind", "theta"});
    b.theta = r.positive("theta", 1.0);
  } else {
    throw ConfigError(r.field("kind"), allow_leaf ? "expected sphere, ellipsoid or leaf" : "expected sphere or ellipsoid");
  }
  return b;
}

inline json body_json(const BodyConfig& b) {
  if (b.kind == "sphere") return {{"kind", "sphere"}, {"radius", b.radius}};
  if (b.kind == "leaf") return {{"kind", "leaf"}, {"theta", b.theta}};
  return {{"kind", "ellipsoid"}, {"semi_axes", b.semi_axes}, {"center", b.center}};
}

inline json parse_speed(const json& j, int n) {
  Reader r(j, "speed");
  const std::string kind = r.string("kind", "");
  if (kind == "constant") {
    r.allow({"kind", "c"});
    return {{"kind", kind}, {"c", r.positive("c", 1.0)}};
  }
  if (kind == "exponential") {
    r.allow({"kind", "v"});
    return {{"kind", kind}, {"v", r.vector("v", n + 1)}};
  }
  if (kind == "affine") {
    r.allow({"kind", "c", "w"});
    const double c = r.number("c", 1.0);
    const auto w = r.vector("w", n + 1);
    double norm = 0.0;
    for (double x : w) norm += x * x;
    if (!(c > std::sqrt(norm))) throw ConfigError("speed.c", "must exceed |w| so that f stays positive");
    return {{"kind", kind}, {"c", c}, {"w", w}};
  }
  if (kind == "log_harmonic") {
    r.allow({"kind", "terms"});
    if (!r.has("terms") || !r.at("terms").is_array()) throw ConfigError("speed.terms", "expected an array");
    json terms = json::array();
    int i = 0;
    for (const auto& t : r.at("terms")) {
      Reader tr(t, "speed.terms[" + std::to_string(i++) + "]");
      tr.allow({"l", "m", "a"});
      const int l = tr.integer("l", 0), m = tr.integer("m", 0);
      if (l < 0 || (n == 2 && std::abs(m) > l)) throw ConfigError(tr.field("m"), "invalid harmonic index");
      terms.push_back({{"l", l}, {"m", m}, {"a", tr.number("a", 0.0)}});
    }
    return {{"kind", kind}, {"terms", terms}};
  }
  throw ConfigError("speed.kind", "expected constant, exponential, affine or log_harmonic");
}

inline Eigen::VectorXd as_vector(const json& a) {
  Eigen::VectorXd v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v[Eigen::Index(i)] = a[i].get<double>();
  return v;
}

}  // namespace detail

/// Validates a parsed document and fills in defaults.
inline ExperimentConfig parse_config(const json& doc) {
  using detail::Reader;
  Reader r(doc, "");
  r.allow({"schema", "dimension", "resolution", "curvature", "speed", "initial", "foliation", "theta_range", "flow",
           "critical", "checks", "soliton", "seed", "output_dir"});
  if (r.string("schema", "") != kConfigSchema)
    throw ConfigError("schema", std::string("expected \"") + kConfigSchema + "\"");

  ExperimentConfig c;
  c.dimension = r.integer("dimension", 1);
  if (c.dimension != 1 && c.dimension != 2) throw ConfigError("dimension", "must be 1 or 2");
  const int n = c.dimension;
  c.resolution = r.integer("resolution", n == 1 ? 256 : 24);
  if (n == 1 && (c.resolution < 64 || c.resolution > 4096 || c.resolution % 2))
    throw ConfigError("resolution", "node count must be even and within [64, 4096]");
  if (n == 2 && (c.resolution < 8 || c.resolution > 48))
    throw ConfigError("resolution", "harmonic degree must be within [8, 48]");

  if (r.has("curvature")) {
    Reader cr(r.at("curvature"), "curvature");
    cr.allow({"name", "exponent"});
    c.curvature = cr.string("name", "GaussInverse");
    c.curvature_exponent = cr.number("exponent", 1.0);
    static const std::set<std::string> names{"GaussInverse", "RootGaussInverse", "HarmonicInverse", "TraceInverse",
                                             "power_sum"};
    if (!names.count(c.curvature)) throw ConfigError("curvature.name", "unknown curvature function " + c.curvature);
    if (c.curvature != "power_sum" && cr.has("exponent"))
      throw ConfigError("curvature.exponent", "only power_sum takes an exponent");
  }
  if (r.has("speed")) c.speed = detail::parse_speed(r.at("speed"), n);
  if (r.has("initial")) c.initial = detail::parse_body(r.at("initial"), "initial", n, true);

  if (r.has("foliation")) {
    Reader fr(r.at("foliation"), "foliation");
    const std::string kind = fr.string("kind", "");
    if (kind == "spheres") {
      fr.allow({"kind"});
      c.foliation = json{{"kind", kind}};
    } else if (kind == "homothets") {
      fr.allow({"kind", "base"});
      if (!fr.has("base")) throw ConfigError("foliation.base", "required");
      c.foliation = json{{"kind", kind},
                         {"base", detail::body_json(detail::parse_body(fr.at("base"), "foliation.base", n, false))}};
    } else if (kind == "offset") {
      fr.allow({"kind", "base", "direction"});
      if (!fr.has("base")) throw ConfigError("foliation.base", "required");
      json dir = {{"kind", "sphere"}, {"radius", 1.0}};
      if (fr.has("direction"))
        dir = detail::body_json(detail::parse_body(fr.at("direction"), "foliation.direction", n, false));
      c.foliation = json{{"kind", kind},
                         {"base", detail::body_json(detail::parse_body(fr.at("base"), "foliation.base", n, false))},
                         {"direction", dir}};
    } else {
      throw ConfigError("foliation.kind", "expected spheres, homothets or offset");
    }
  }
  if (r.has("theta_range")) {
    const auto range = r.vector("theta_range", 2);
    if (!(range[0] > 0.0 && range[1] > range[0])) throw ConfigError("theta_range", "need 0 < min < max");
    c.theta_min = range[0];
    c.theta_max = range[1];
  }

  if (r.has("flow")) {
    Reader fr(r.at("flow"), "flow");
    fr.allow({"eps_shrink", "kappa_expand", "t_max", "tol_trans", "record_dt", "snapshot_stride", "detect_translation",
              "translation_window", "rtol", "atol", "gamma"});
    auto& f = c.flow;
    f.eps_shrink = fr.positive("eps_shrink", f.eps_shrink);
    if (f.eps_shrink >= 1.0) throw ConfigError("flow.eps_shrink", "must be below 1");
    f.kappa_expand = fr.positive("kappa_expand", f.kappa_expand);
    if (f.kappa_expand <= 1.0) throw ConfigError("flow.kappa_expand", "must exceed 1");
    f.t_max = fr.positive("t_max", f.t_max);
    f.tol_trans = fr.positive("tol_trans", f.tol_trans);
    f.record_dt = fr.positive("record_dt", f.record_dt);
    f.snapshot_stride = fr.integer("snapshot_stride", f.snapshot_stride);
    if (f.snapshot_stride < 1) throw ConfigError("flow.snapshot_stride", "must be at least 1");
    f.detect_translation = fr.boolean("detect_translation", f.detect_translation);
    f.translation_window = fr.positive("translation_window", f.translation_window);
    f.controller.rtol = fr.positive("rtol", f.controller.rtol);
    f.controller.atol = fr.positive("atol", f.controller.atol);
    f.monitors.gamma = fr.number("gamma", f.monitors.gamma);
    if (!(f.monitors.gamma > 1.0 && f.monitors.gamma <= 2.0)) throw ConfigError("flow.gamma", "must lie in (1, 2]");
  }
  if (r.has("critical")) {
    Reader cr(r.at("critical"), "critical");
    cr.allow({"tolerance", "budget"});
    c.critical_tolerance = cr.positive("tolerance", c.critical_tolerance);
    c.critical_budget = cr.integer("budget", c.critical_budget);
    if (c.critical_budget < 1) throw ConfigError("critical.budget", "must be at least 1");
  }
  if (r.has("checks")) {
    Reader cr(r.at("checks"), "checks");
    cr.allow({"samples"});
    c.check_samples = cr.integer("samples", c.check_samples);
    if (c.check_samples < 1) throw ConfigError("checks.samples", "must be at least 1");
  }
  if (r.has("soliton")) {
    Reader sr(r.at("soliton"), "soliton");
    sr.allow({"sign"});
    c.soliton_sign = sr.integer("sign", 1);
    if (c.soliton_sign != 1 && c.soliton_sign != -1) throw ConfigError("soliton.sign", "must be 1 or -1");
  }
  if (r.has("seed")) {
    if (!doc.at("seed").is_number_unsigned() && !doc.at("seed").is_number_integer())
      throw ConfigError("seed", "expected a non-negative integer");
    if (doc.at("seed").is_number_integer() && doc.at("seed").get<long long>() < 0)
      throw ConfigError("seed", "expected a non-negative integer");
    c.seed = doc.at("seed").get<std::uint64_t>();
  }
  c.output_dir = r.string("output_dir", c.output_dir);

  json norm{{"schema", kConfigSchema},
            {"dimension", c.dimension},
            {"resolution", c.resolution},
            {"curvature", c.curvature == "power_sum" ? json{{"name", c.curvature}, {"exponent", c.curvature_exponent}}
                                                     : json{{"name", c.curvature}}},
            {"speed", c.speed}};
  if (c.initial) norm["initial"] = detail::body_json(*c.initial);
  if (c.foliation) norm["foliation"] = *c.foliation;
  norm["theta_range"] = {c.theta_min, c.theta_max};
  const auto& f = c.flow;
  norm["flow"] = {{"eps_shrink", f.eps_shrink},
                  {"kappa_expand", f.kappa_expand},
                  {"t_max", f.t_max},
                  {"tol_trans", f.tol_trans},
                  {"record_dt", f.record_dt},
                  {"snapshot_stride", f.snapshot_stride},
                  {"detect_translation", f.detect_translation},
                  {"translation_window", f.translation_window},
                  {"rtol", f.controller.rtol},
                  {"atol", f.controller.atol},
                  {"gamma", f.monitors.gamma}};
  norm["critical"] = {{"tolerance", c.critical_tolerance}, {"budget", c.critical_budget}};
  norm["checks"] = {{"samples", c.check_samples}};
  norm["soliton"] = {{"sign", c.soliton_sign}};
  norm["seed"] = c.seed;
  norm["output_dir"] = c.output_dir;
  c.source = norm;
  return c;
}

/// Parses a config file; syntax errors report the line.
inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + std::ptrdiff_t(upto), '\n');
    throw ConfigError("line " + std::to_string(line), "JSON syntax error");
  }
  return parse_config(doc);
}

// Builders from a validated config.

inline Discretization discretization(const ExperimentConfig& c) { return {c.dimension, c.resolution}; }

inline CurvatureSpec make_curvature(const ExperimentConfig& c) {
  if (c.curvature == "power_sum") return power_sum(c.dimension, c.curvature_exponent);
  return builtin_curvature(c.curvature, c.dimension);
}

inline PrescribedSpeed make_speed(const ExperimentConfig& c) {
  const json& s = c.speed;
  const std::string kind = s.at("kind");
  if (kind == "constant") return PrescribedSpeed::constant(c.dimension, s.at("c").get<double>());
  if (kind == "exponential") return PrescribedSpeed::exponential(detail::as_vector(s.at("v")));
  if (kind == "affine") return PrescribedSpeed::affine(s.at("c").get<double>(), detail::as_vector(s.at("w")));
  std::vector<HarmonicTerm> terms;
  for (const auto& t : s.at("terms")) terms.push_back({t.at("l").get<int>(), t.at("m").get<int>(), t.at("a").get<double>()});
  return PrescribedSpeed::log_harmonic(c.dimension, terms);
}

inline SupportField make_body(const ExperimentConfig& c, const json& body) {
  const auto disc = discretization(c);
  const std::string kind = body.at("kind");
  if (kind == "sphere") return sphere_field(disc, body.at("radius").get<double>());
  return ellipsoid_field(disc, detail::as_vector(body.at("semi_axes")), detail::as_vector(body.at("center")));
}

inline Foliation make_foliation(const ExperimentConfig& c) {
  if (!c.foliation) throw ConfigError("foliation", "required for this command");
  const json& f = *c.foliation;
  const std::string kind = f.at("kind");
  Foliation fol = kind == "spheres"     ? Foliation::spheres(discretization(c))
                  : kind == "homothets" ? Foliation::homothets(make_body(c, f.at("base")))
                                        : Foliation::offset(make_body(c, f.at("base")), make_body(c, f.at("direction")));
  fol.theta_min = c.theta_min;
  fol.theta_max = c.theta_max;
  return fol;
}

inline SupportField make_initial(const ExperimentConfig& c) {
  if (!c.initial) throw ConfigError("initial", "required for this command");
  if (c.initial->kind == "leaf") {
    if (!c.foliation) throw ConfigError("foliation", "an initial leaf needs a foliation");
    return make_foliation(c).leaf(c.initial->theta);
  }
  return make_body(c, detail::body_json(*c.initial));
}

}  // namespace logflow
