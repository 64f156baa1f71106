#include "oncodyn/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>

#include "oncodyn/lyapunov.hpp"
#include "oncodyn/sampling.hpp"

namespace oncodyn {

namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kAnalyses{"simulate", "structural", "equilibria", "stability",
                                         "lyapunov", "basin",      "multipoint_probe"};

[[noreturn]] void config_error(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::ConfigError, where + ": " + what);
}

// Reads the keys of one JSON object and rejects any key it was not asked for.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) config_error(path_, "expected an object");
  }

  void number(const char* key, double& out) {
    if (const Json* v = take(key)) {
      if (!v->is_number()) config_error(where(key), "expected a number");
      out = v->get<double>();
    }
  }

  void step_bound(const char* key, double& out) {
    if (const Json* v = take(key)) {
      if (v->is_null()) {
        out = std::numeric_limits<double>::infinity();
      } else if (v->is_number()) {
        out = v->get<double>();
      } else {
        config_error(where(key), "expected a number or null");
      }
    }
  }

  template <class Int>
  void integer(const char* key, Int& out) {
    if (const Json* v = take(key)) {
      if (!v->is_number_integer()) config_error(where(key), "expected an integer");
      if constexpr (std::is_unsigned_v<Int>) {
        if (!v->is_number_unsigned()) config_error(where(key), "expected a nonnegative integer");
        out = v->get<Int>();
      } else {
        const auto wide = v->get<long long>();
        if (wide < std::numeric_limits<Int>::min() || wide > std::numeric_limits<Int>::max()) {
          config_error(where(key), "integer out of range");
        }
        out = static_cast<Int>(wide);
      }
    }
  }

  void text(const char* key, std::string& out) {
    if (const Json* v = take(key)) {
      if (!v->is_string()) config_error(where(key), "expected a string");
      out = v->get<std::string>();
    }
  }

  void vec3(const char* key, Vec3& out) {
    if (const Json* v = take(key)) out = parse_vec3(*v, where(key));
  }

  /// Returns the sub-object, or nullptr when absent.
  const Json* object(const char* key) {
    const Json* v = take(key);
    if (v && !v->is_object()) config_error(where(key), "expected an object");
    return v;
  }

  const Json* array(const char* key) {
    const Json* v = take(key);
    if (v && !v->is_array()) config_error(where(key), "expected an array");
    return v;
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) config_error(where(item.key()), "unknown key");
    }
  }

  [[nodiscard]] std::string where(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  static Vec3 parse_vec3(const Json& v, const std::string& where) {
    if (!v.is_array() || v.size() != 3) config_error(where, "expected an array of 3 numbers");
    Vec3 out;
    for (std::size_t i = 0; i < 3; ++i) {
      if (!v[i].is_number()) config_error(where, "expected an array of 3 numbers");
      out[i] = v[i].get<double>();
    }
    return out;
  }

 private:
  const Json* take(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void check(bool ok, const std::string& where, const std::string& what) {
  if (!ok) config_error(where, what);
}

Json vec_json(const Vec3& v) { return Json::array({v[0], v[1], v[2]}); }

Json mat_json(const Mat3& m) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < 3; ++i) rows.push_back(Json::array({m(i, 0), m(i, 1), m(i, 2)}));
  return rows;
}

Json sym_json(const SymMat3& p) {
  return Json{{"p11", p.p11}, {"p12", p.p12}, {"p13", p.p13},
              {"p22", p.p22}, {"p23", p.p23}, {"p33", p.p33}};
}

Json step_bound_json(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::size_t axis_index(const std::string& name) { return static_cast<std::size_t>(name[1] - '1'); }

bool valid_axis(const std::string& name) {
  return name == "x1" || name == "x2" || name == "x3";
}

}  // namespace

bool Scenario::wants(const std::string& analysis) const {
  return std::find(analyses.begin(), analyses.end(), analysis) != analyses.end();
}

MultipointCondition Scenario::multipoint_condition() const {
  MultipointCondition c;
  c.t0 = t0;
  c.x0 = initial_state;
  if (multipoint) {
    c.alphas = multipoint->alphas;
    c.phase_times = multipoint->phase_times;
    c.delta = multipoint->delta;
  }
  return c;
}

Scenario parse_scenario(const Json& config) {
  Scenario s;
  ObjectReader root(config, "");

  if (const Json* p = root.object("params")) {
    ObjectReader r(*p, "params");
    ModelParams& m = s.params;
    r.number("r1", m.r1);
    r.number("r2", m.r2);
    r.number("r3", m.r3);
    r.number("k1", m.k1);
    r.number("k2", m.k2);
    r.number("k3", m.k3);
    r.number("a12", m.a12);
    r.number("a13", m.a13);
    r.number("a21", m.a21);
    r.number("a31", m.a31);
    r.number("d3", m.d3);
    r.finish();
  }

  std::string sign = "general_minus";
  root.text("h2_sign", sign);
  if (sign == "general_minus") {
    s.h2_sign = H2Sign::GeneralMinus;
  } else if (sign == "paper_plus") {
    s.h2_sign = H2Sign::PrintedPlus;
  } else {
    config_error("h2_sign", "expected \"general_minus\" or \"paper_plus\"");
  }

  root.vec3("initial_state", s.initial_state);
  root.number("t0", s.t0);
  root.number("t_end", s.t_end);

  if (const Json* mp = root.object("multipoint")) {
    ObjectReader r(*mp, "multipoint");
    MultipointConfig m;
    if (const Json* a = r.array("alphas")) {
      for (std::size_t k = 0; k < a->size(); ++k) {
        m.alphas.push_back(ObjectReader::parse_vec3((*a)[k], "multipoint.alphas[" + std::to_string(k) + "]"));
      }
    }
    if (const Json* t = r.array("phase_times")) {
      for (const auto& v : *t) {
        check(v.is_number(), "multipoint.phase_times", "expected numbers");
        m.phase_times.push_back(v.get<double>());
      }
    }
    r.number("delta", m.delta);
    r.number("tol", m.tol);
    r.integer("max_iter", m.max_iter);
    r.number("damping", m.damping);
    r.finish();
    s.multipoint = m;
  }

  if (const Json* ig = root.object("integrator")) {
    ObjectReader r(*ig, "integrator");
    r.number("rel_tol", s.integrator.rel_tol);
    r.number("abs_tol", s.integrator.abs_tol);
    r.step_bound("max_step", s.integrator.max_step);
    r.integer("max_steps", s.integrator.max_steps);
    r.finish();
  }

  if (const Json* sp = root.object("sampling")) {
    ObjectReader r(*sp, "sampling");
    r.integer("seed", s.sampling.seed);
    r.integer("n_samples", s.sampling.n_samples);
    r.number("horizon", s.sampling.horizon);
    r.number("convergence_radius", s.sampling.convergence_radius);
    r.number("escape_multiplier", s.sampling.escape_multiplier);
    r.finish();
  }

  if (const Json* an = root.array("analyses")) {
    for (const auto& v : *an) {
      check(v.is_string(), "analyses", "expected strings");
      const auto name = v.get<std::string>();
      check(std::find(kAnalyses.begin(), kAnalyses.end(), name) != kAnalyses.end(), "analyses",
            "unknown analysis \"" + name + "\"");
      if (!s.wants(name)) s.analyses.push_back(name);
    }
  } else {
    s.analyses = {"simulate"};
  }

  if (const Json* st = root.object("structural")) {
    ObjectReader r(*st, "structural");
    Vec3 k{s.structural.box.K1, s.structural.box.K2, s.structural.box.K3};
    r.vec3("K", k);
    s.structural.box = {k[0], k[1], k[2]};
    r.integer("grid_n", s.structural.grid_n);
    r.integer("positivity_starts", s.structural.positivity_starts);
    r.number("positivity_horizon", s.structural.positivity_horizon);
    r.finish();
  }

  if (const Json* ly = root.object("lyapunov")) {
    ObjectReader r(*ly, "lyapunov");
    r.number("region_halfwidth", s.lyapunov.region_halfwidth);
    r.integer("grid_n", s.lyapunov.grid_n);
    r.finish();
  }

  if (const Json* ba = root.object("basin")) {
    ObjectReader r(*ba, "basin");
    r.number("r_max", s.basin.r_max);
    r.integer("n_shell_samples", s.basin.n_shell_samples);
    r.number("margin", s.basin.margin);
    r.finish();
  }

  if (const Json* sb = root.object("stability")) {
    ObjectReader r(*sb, "stability");
    r.integer("probe_starts", s.stability.probe_starts);
    r.number("probe_radius", s.stability.probe_radius);
    r.number("probe_horizon", s.stability.probe_horizon);
    r.finish();
  }

  if (const Json* out = root.object("output")) {
    ObjectReader r(*out, "output");
    r.integer("resample_points", s.output.resample_points);
    if (const Json* axes = r.array("phase_axes")) {
      for (const auto& pair : *axes) {
        check(pair.is_array() && pair.size() == 2 && pair[0].is_string() && pair[1].is_string(),
              "output.phase_axes", "expected pairs of axis names");
        const auto a = pair[0].get<std::string>();
        const auto b = pair[1].get<std::string>();
        check(!a.empty() && !b.empty(), "output.phase_axes", "empty axis name");
        check(valid_axis(a) && valid_axis(b), "output.phase_axes",
              "axis names must be x1, x2 or x3");
        check(a != b, "output.phase_axes", "axes must differ");
        s.output.phase_axes.emplace_back(a, b);
      }
    }
    r.integer("dump_trajectories", s.output.dump_trajectories);
    r.finish();
  }
  root.finish();

  // Semantic validation.
  try {
    s.params.validate();
    s.integrator.validate();
    s.sampling.integrator = s.integrator;
    s.sampling.validate();
    s.structural.box.validate();
  } catch (const Error& e) {
    config_error("scenario", e.what());
  }
  check(std::isfinite(s.t0), "t0", "must be finite");
  check(std::isfinite(s.t_end) && s.t_end > s.t0, "t_end", "must be finite and > t0");
  check(s.initial_state.finite(), "initial_state", "must be finite");
  check(s.initial_state.min_component() >= 0.0, "initial_state", "must be nonnegative");
  if (s.multipoint) {
    const MultipointConfig& m = *s.multipoint;
    check(m.tol > 0.0, "multipoint.tol", "must be > 0");
    check(m.max_iter > 0, "multipoint.max_iter", "must be > 0");
    check(m.damping > 0.0 && m.damping <= 1.0, "multipoint.damping", "must lie in (0, 1]");
    try {
      s.multipoint_condition().validate();
    } catch (const Error& e) {
      config_error("multipoint", e.what());
    }
    for (double t : m.phase_times) check(t <= s.t_end, "multipoint.phase_times", "beyond t_end");
  }
  check(s.structural.grid_n >= 2, "structural.grid_n", "must be >= 2");
  check(s.structural.positivity_starts >= 0, "structural.positivity_starts", "must be >= 0");
  check(s.structural.positivity_horizon > 0.0, "structural.positivity_horizon", "must be > 0");
  check(s.lyapunov.region_halfwidth >= 0.0, "lyapunov.region_halfwidth", "must be >= 0");
  check(s.lyapunov.grid_n >= 2, "lyapunov.grid_n", "must be >= 2");
  check(s.basin.r_max > 0.0 && std::isfinite(s.basin.r_max), "basin.r_max", "must be > 0");
  check(s.basin.n_shell_samples > 0, "basin.n_shell_samples", "must be > 0");
  check(s.basin.margin >= 0.0 && s.basin.margin < 1.0, "basin.margin", "must lie in [0, 1)");
  check(s.stability.probe_starts >= 0, "stability.probe_starts", "must be >= 0");
  check(s.stability.probe_radius > 0.0, "stability.probe_radius", "must be > 0");
  check(s.stability.probe_horizon > 0.0, "stability.probe_horizon", "must be > 0");
  check(s.output.resample_points >= 2, "output.resample_points", "must be >= 2");
  check(s.output.dump_trajectories >= 0, "output.dump_trajectories", "must be >= 0");
  if (s.wants("multipoint_probe")) {
    check(s.multipoint.has_value(), "analyses", "multipoint_probe requires a multipoint block");
  }
  return s;
}

Scenario load_scenario(const fs::path& path) {
  std::ifstream in(path);
  if (!in) config_error(path.string(), "cannot open config file");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    config_error(path.string(), e.what());
  }
  return parse_scenario(j);
}

Json scenario_to_json(const Scenario& s) {
  const ModelParams& p = s.params;
  Json j;
  j["params"] = {{"r1", p.r1},   {"r2", p.r2},   {"r3", p.r3},   {"k1", p.k1},
                 {"k2", p.k2},   {"k3", p.k3},   {"a12", p.a12}, {"a13", p.a13},
                 {"a21", p.a21}, {"a31", p.a31}, {"d3", p.d3}};
  j["h2_sign"] = s.h2_sign == H2Sign::GeneralMinus ? "general_minus" : "paper_plus";
  j["initial_state"] = vec_json(s.initial_state);
  j["t0"] = s.t0;
  j["t_end"] = s.t_end;
  if (s.multipoint) {
    const MultipointConfig& m = *s.multipoint;
    Json alphas = Json::array();
    for (const Vec3& a : m.alphas) alphas.push_back(vec_json(a));
    j["multipoint"] = {{"alphas", alphas},      {"phase_times", m.phase_times},
                       {"delta", m.delta},      {"tol", m.tol},
                       {"max_iter", m.max_iter}, {"damping", m.damping}};
  }
  j["integrator"] = {{"rel_tol", s.integrator.rel_tol},
                     {"abs_tol", s.integrator.abs_tol},
                     {"max_step", step_bound_json(s.integrator.max_step)},
                     {"max_steps", s.integrator.max_steps}};
  j["sampling"] = {{"seed", s.sampling.seed},
                   {"n_samples", s.sampling.n_samples},
                   {"horizon", s.sampling.horizon},
                   {"convergence_radius", s.sampling.convergence_radius},
                   {"escape_multiplier", s.sampling.escape_multiplier}};
  j["analyses"] = s.analyses;
  const InvariantBox& b = s.structural.box;
  j["structural"] = {{"K", Json::array({b.K1, b.K2, b.K3})},
                     {"grid_n", s.structural.grid_n},
                     {"positivity_starts", s.structural.positivity_starts},
                     {"positivity_horizon", s.structural.positivity_horizon}};
  j["lyapunov"] = {{"region_halfwidth", s.lyapunov.region_halfwidth},
                   {"grid_n", s.lyapunov.grid_n}};
  j["basin"] = {{"r_max", s.basin.r_max},
                {"n_shell_samples", s.basin.n_shell_samples},
                {"margin", s.basin.margin}};
  j["stability"] = {{"probe_starts", s.stability.probe_starts},
                    {"probe_radius", s.stability.probe_radius},
                    {"probe_horizon", s.stability.probe_horizon}};
  Json axes = Json::array();
  for (const auto& [a, c] : s.output.phase_axes) axes.push_back(Json::array({a, c}));
  j["output"] = {{"resample_points", s.output.resample_points},
                 {"phase_axes", axes},
                 {"dump_trajectories", s.output.dump_trajectories}};
  return j;
}

void write_trajectory_csv(const fs::path& path, const Trajectory& traj, int resample_points) {
  std::vector<double> times;
  times.reserve(traj.size() + static_cast<std::size_t>(resample_points));
  for (const auto& s : traj.samples()) times.push_back(s.t);
  const double a = traj.t_first(), b = traj.t_last();
  for (int i = 0; i < resample_points; ++i) {
    times.push_back(i == resample_points - 1 ? b : a + (b - a) * i / (resample_points - 1));
  }
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());

  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
  out << "t,x1,x2,x3\n";
  for (double t : times) {
    const Vec3 x = traj.at(t);
    out << fmt17(t) << ',' << fmt17(x[0]) << ',' << fmt17(x[1]) << ',' << fmt17(x[2]) << '\n';
  }
}

void write_phase_csv(const fs::path& path, const std::vector<Trajectory>& trajs,
                     const std::string& axis1, const std::string& axis2) {
  if (trajs.empty()) throw Error(ErrorCode::InvalidArgument, "phase data needs a trajectory");
  if (!valid_axis(axis1) || !valid_axis(axis2)) {
    throw Error(ErrorCode::InvalidArgument, "axis names must be x1, x2 or x3");
  }
  const std::size_t i1 = axis_index(axis1), i2 = axis_index(axis2);
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
  out << "traj_id,t," << axis1 << ',' << axis2 << '\n';
  for (std::size_t id = 0; id < trajs.size(); ++id) {
    for (const auto& s : trajs[id].samples()) {
      out << id << ',' << fmt17(s.t) << ',' << fmt17(s.x[i1]) << ',' << fmt17(s.x[i2]) << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Pipelines

namespace {

struct Context {
  const Scenario& s;
  const RateModel& model;
  Json& results;
  std::vector<Trajectory> phase_trajectories;
  std::vector<Equilibrium> equilibria;
  bool have_equilibria = false;
  std::vector<StabilityReport> stability;
  std::vector<std::optional<LyapunovCertificate>> certificates;
  std::optional<BasinCertificate> first_valid_basin;
  std::vector<std::pair<std::string, bool>> checks;
};

void stage_simulate(Context& c, const fs::path& out_dir) {
  const Scenario& s = c.s;
  Json r;
  Trajectory traj;
  if (s.multipoint) {
    FixedPointSettings fp;
    fp.tol = s.multipoint->tol;
    fp.max_iter = s.multipoint->max_iter;
    fp.damping = s.multipoint->damping;
    fp.integrator = s.integrator;
    const MultipointSolution sol =
        solve_multipoint(c.model, s.multipoint_condition(), s.t_end, fp);
    traj = sol.trajectory;
    r["multipoint"] = {{"v0", vec_json(sol.v0)},
                       {"residual", sol.residual},
                       {"iterations", sol.iterations},
                       {"contraction_estimate", sol.contraction_estimate},
                       {"warnings", sol.warnings}};
    c.checks.emplace_back("multipoint residual < 10 tol", sol.residual < 10.0 * fp.tol);
  } else {
    traj = integrate(as_vector_field(c.model), s.initial_state, s.t0, s.t_end, s.integrator);
  }
  double lowest = std::numeric_limits<double>::infinity();
  for (const auto& smp : traj.samples()) lowest = std::min(lowest, smp.x.min_component());
  r["t_first"] = traj.t_first();
  r["t_last"] = traj.t_last();
  r["accepted_samples"] = traj.size();
  r["final_state"] = vec_json(traj.final_state());
  r["min_component"] = lowest;
  r["trajectory_csv"] = "trajectory.csv";
  write_trajectory_csv(out_dir / "trajectory.csv", traj, s.output.resample_points);
  c.phase_trajectories.push_back(std::move(traj));
  c.results["simulate"] = r;
}

void stage_structural(Context& c) {
  const Scenario& s = c.s;
  const StructuralReport rep = verify_structural(c.model, s.structural.box, s.structural.grid_n);
  Json clauses = Json::array();
  for (const auto& cl : rep.clauses) {
    Json items = Json::array();
    for (const auto& it : cl.items) {
      Json ij = {{"description", it.description}, {"evaluated", it.evaluated},
                 {"passed", it.passed}};
      if (!it.passed) {
        ij["worst_violation"] = it.worst_violation;
        ij["witness"] = vec_json(it.witness);
      }
      items.push_back(ij);
    }
    Json cj = {{"clause", cl.number}, {"summary", cl.summary}, {"passed", cl.passed}};
    if (!cl.passed) {
      cj["worst_violation"] = cl.worst_violation;
      cj["witness"] = vec_json(cl.witness);
    }
    cj["items"] = items;
    clauses.push_back(cj);
  }

  Json r;
  r["grid_n"] = rep.grid_n;
  r["box"] = Json::array({rep.box.K1, rep.box.K2, rep.box.K3});
  r["all_passed"] = rep.all_passed();
  r["divergence_max"] = rep.divergence_max;
  r["divergence_argmax"] = vec_json(rep.divergence_argmax);
  r["clauses"] = clauses;

  if (s.structural.positivity_starts > 0) {
    Rng rng(substream_seed(s.sampling.seed, "structural"));
    std::vector<Vec3> starts;
    for (int i = 0; i < s.structural.positivity_starts; ++i) {
      starts.push_back({rng.uniform(0.0, rep.box.K1), rng.uniform(0.0, rep.box.K2),
                        rng.uniform(0.0, rep.box.K3)});
    }
    const double lowest =
        positivity_trajectory_check(c.model, starts, s.structural.positivity_horizon, s.integrator);
    r["positivity"] = {{"starts", s.structural.positivity_starts},
                       {"horizon", s.structural.positivity_horizon},
                       {"min_component", lowest}};
    c.checks.emplace_back("positivity min component >= -1e-9", lowest >= -1e-9);
  }
  c.results["structural"] = r;
}

void ensure_equilibria(Context& c) {
  if (c.have_equilibria) return;
  c.equilibria = closed_form_equilibria(c.s.params, c.s.h2_sign);
  c.have_equilibria = true;
}

void stage_equilibria(Context& c) {
  ensure_equilibria(c);
  Json list = Json::array();
  for (const auto& e : c.equilibria) {
    list.push_back({{"kind", std::string(to_string(e.kind))},
                    {"point", vec_json(e.point)},
                    {"rhs_norm", e.rhs_norm}});
    c.checks.emplace_back(std::string("equilibrium ") + std::string(to_string(e.kind)) +
                              " rhs_norm < 1e-10",
                          e.rhs_norm < 1e-10);
  }
  c.results["equilibria"] = list;
}

void ensure_stability(Context& c) {
  ensure_equilibria(c);
  if (!c.stability.empty() || c.equilibria.empty()) return;
  for (const auto& e : c.equilibria) c.stability.push_back(classify(c.model, e));
}

void stage_stability(Context& c) {
  ensure_stability(c);
  const StabilityConfig& cfg = c.s.stability;
  Json list = Json::array();
  for (const auto& rep : c.stability) {
    Json eig = Json::array();
    for (const Complex& l : rep.eigenvalues) eig.push_back(Json::array({l.real(), l.imag()}));
    Json j = {{"kind", std::string(to_string(rep.equilibrium.kind))},
              {"point", vec_json(rep.equilibrium.point)},
              {"jacobian", mat_json(rep.jacobian)},
              {"eigenvalues", eig},
              {"eig_classification", std::string(to_string(rep.eig_class))},
              {"criterion",
               {{"test", rep.criterion.test},
                {"verdict", std::string(to_string(rep.criterion.verdict))},
                {"clause", rep.criterion.clause}}},
              {"agreement", rep.agreement}};
    if (cfg.probe_starts > 0 && rep.eig_class != EigenClass::Marginal) {
      const ProbeResult pr =
          simulation_probe(c.model, rep.equilibrium.point, cfg.probe_starts, cfg.probe_radius,
                           cfg.probe_horizon, c.s.sampling.seed, 1e-6, 1e-2, c.s.integrator);
      j["probe"] = {{"starts", pr.starts},
                    {"converged", pr.converged},
                    {"escaped", pr.escaped},
                    {"max_final_distance", pr.max_final_distance}};
    }
    list.push_back(j);
  }
  c.results["stability"] = list;
}

void ensure_certificates(Context& c) {
  ensure_stability(c);
  if (!c.certificates.empty()) return;
  for (const auto& e : c.equilibria) {
    try {
      c.certificates.emplace_back(make_certificate(c.model, e));
    } catch (const Error& err) {
      if (err.code() != ErrorCode::SingularLyapunov) throw;
      c.certificates.emplace_back(std::nullopt);
    }
  }
}

void stage_lyapunov(Context& c) {
  ensure_certificates(c);
  const LyapunovConfig& cfg = c.s.lyapunov;
  Json list = Json::array();
  for (std::size_t i = 0; i < c.equilibria.size(); ++i) {
    const Equilibrium& e = c.equilibria[i];
    Json j = {{"kind", std::string(to_string(e.kind))}, {"point", vec_json(e.point)}};
    if (!c.certificates[i]) {
      j["error"] = "SingularLyapunov";
      list.push_back(j);
      continue;
    }
    const LyapunovCertificate& cert = *c.certificates[i];
    j["P"] = sym_json(cert.p);
    j["residual"] = cert.residual;
    j["lambda_min"] = cert.lambda_min;
    j["pd_sylvester"] = cert.pd_sylvester;
    j["pd_completed_square"] = cert.pd_completed_square;

    Box3 region;
    for (std::size_t k = 0; k < 3; ++k) {
      region.lo[k] = std::max(0.0, e.point[k] - cfg.region_halfwidth);
      region.hi[k] = e.point[k] + cfg.region_halfwidth;
    }
    const DecreaseReport dr = decrease_region_check(c.model, cert, region, cfg.grid_n);
    j["decrease_region"] = {{"lo", vec_json(region.lo)},
                            {"hi", vec_json(region.hi)},
                            {"grid_n", cfg.grid_n},
                            {"all_nonincreasing", dr.all_nonincreasing},
                            {"worst_value", dr.worst_value},
                            {"worst_point", vec_json(dr.worst_point)},
                            {"sufficient_points", dr.sufficient_points},
                            {"sufficient_violations", dr.sufficient_violations.size()}};
    list.push_back(j);

    const std::string tag = std::string(to_string(e.kind));
    c.checks.emplace_back("lyapunov residual < 1e-10 at " + tag, cert.residual < 1e-10);
    c.checks.emplace_back("completed-square test implies Sylvester at " + tag,
                          !cert.pd_completed_square || cert.pd_sylvester);
    c.checks.emplace_back("sign-based decrease conditions sound at " + tag,
                          dr.sufficient_violations.empty());
    if (c.stability[i].eig_class == EigenClass::Stable) {
      c.checks.emplace_back("stable equilibrium has positive definite P at " + tag,
                            cert.pd_sylvester);
    }
  }
  c.results["lyapunov"] = list;
}

void stage_basin(Context& c) {
  ensure_certificates(c);
  const BasinConfig& cfg = c.s.basin;
  SamplingPlan plan = c.s.sampling;
  plan.keep_trajectories = c.s.output.dump_trajectories;
  Json list = Json::array();
  for (std::size_t i = 0; i < c.equilibria.size(); ++i) {
    if (c.stability[i].eig_class != EigenClass::Stable) continue;
    if (!c.certificates[i] || !c.certificates[i]->pd_sylvester) continue;
    const LyapunovCertificate& cert = *c.certificates[i];
    const Equilibrium& e = c.equilibria[i];
    Json j = {{"kind", std::string(to_string(e.kind))}, {"point", vec_json(e.point)}};
    double r = 0.0;
    try {
      r = verified_decrease_radius(c.model, cert, cfg.r_max, cfg.n_shell_samples, plan.seed);
    } catch (const Error& err) {
      if (err.code() != ErrorCode::NoPositiveRadius) throw;
      j["error"] = "NoPositiveRadius";
      list.push_back(j);
      continue;
    }
    const double C = level_from_radius(cert, r, cfg.margin);
    BasinCertificate b = monte_carlo_verify(c.model, cert, C, plan);
    b.ball_radius_r = r;
    j["ball_radius_r"] = r;
    j["lambda_min"] = cert.lambda_min;
    j["margin"] = cfg.margin;
    j["level_C"] = C;
    j["mc_total"] = b.mc_total;
    j["mc_converged"] = b.mc_converged;
    j["mc_escaped_or_undecided"] = b.mc_escaped_or_undecided;
    j["mc_escaped"] = b.mc_escaped;
    j["valid"] = b.valid();
    list.push_back(j);
    c.checks.emplace_back("basin certificate valid at " + std::string(to_string(e.kind)),
                          b.valid());
    for (auto& t : b.trajectories) c.phase_trajectories.push_back(std::move(t));
    b.trajectories.clear();
    if (!c.first_valid_basin && b.valid()) c.first_valid_basin = std::move(b);
  }
  c.results["basin"] = list;
}

void stage_multipoint_probe(Context& c) {
  if (!c.first_valid_basin) {
    c.results["multipoint_probe"] = {{"error", "no valid basin certificate to probe"}};
    return;
  }
  const BasinCertificate& b = *c.first_valid_basin;
  FixedPointSettings fp;
  fp.tol = c.s.multipoint->tol;
  fp.max_iter = c.s.multipoint->max_iter;
  fp.damping = c.s.multipoint->damping;
  fp.integrator = c.s.integrator;
  const MultipointProbeTallies t = multipoint_basin_probe(
      c.model, c.s.multipoint_condition(), b.cert, b.level_C, c.s.sampling, fp);
  c.results["multipoint_probe"] = {{"kind", std::string(to_string(b.cert.equilibrium.kind))},
                                   {"level_C", b.level_C},
                                   {"total", t.total},
                                   {"in_level", t.in_level},
                                   {"in_level_converged", t.in_level_converged},
                                   {"left_level", t.left_level},
                                   {"negative_effective", t.negative_effective},
                                   {"no_contraction", t.no_contraction},
                                   {"failed", t.failed}};
  c.checks.emplace_back("multipoint probe: in-level runs converge",
                        t.in_level == t.in_level_converged);
}

void write_json(const fs::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

const char* mode_name(RunMode m) {
  switch (m) {
    case RunMode::Simulate: return "simulate";
    case RunMode::Analyze: return "analyze";
    case RunMode::Verify: return "verify";
  }
  return "unknown";
}

}  // namespace

int run(const fs::path& config_path, const RunOptions& options) {
  Scenario s;
  try {
    s = load_scenario(config_path);
    if (options.seed) s.sampling.seed = *options.seed;
    if (options.threads <= 0) config_error("--threads", "must be > 0");
    s.sampling.threads = options.threads;
    fs::create_directories(options.out_dir);
  } catch (const Error& e) {
    std::cerr << "stage config: " << e.what() << " (config " << config_path.string() << ")\n";
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "stage config: " << e.what() << '\n';
    return kExitConfig;
  }

  const RateModel model = concrete_model(s.params, s.h2_sign);
  Json report;
  report["tool"] = kToolVersion;
  report["mode"] = mode_name(options.mode);
  report["seed"] = s.sampling.seed;
  report["scenario"] = scenario_to_json(s);
  Json results = Json::object();
  Json timings = Json::object();
  Context ctx{s, model, results, {}, {}, false, {}, {}, {}, {}};

  std::vector<std::string> stages;
  if (options.mode == RunMode::Simulate) {
    stages = {"simulate"};
  } else {
    for (const auto& name : kAnalyses)
      if (s.wants(name)) stages.push_back(name);
  }

  std::string current;
  int exit_code = kExitOk;
  try {
    for (const auto& name : stages) {
      current = name;
      const auto start = std::chrono::steady_clock::now();
      if (name == "simulate") stage_simulate(ctx, options.out_dir);
      else if (name == "structural") stage_structural(ctx);
      else if (name == "equilibria") stage_equilibria(ctx);
      else if (name == "stability") stage_stability(ctx);
      else if (name == "lyapunov") stage_lyapunov(ctx);
      else if (name == "basin") stage_basin(ctx);
      else if (name == "multipoint_probe") stage_multipoint_probe(ctx);
      timings[name] =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    current = "output";
    for (const auto& [a, b] : s.output.phase_axes) {
      if (ctx.phase_trajectories.empty()) break;
      write_phase_csv(options.out_dir / ("phase_" + a + "_" + b + ".csv"),
                      ctx.phase_trajectories, a, b);
    }
  } catch (const Error& e) {
    report["results"] = results;
    report["error"] = {{"stage", current},
                       {"code", std::string(to_string(e.code()))},
                       {"message", e.what()}};
    std::cerr << "stage " << current << ": " << e.what() << '\n';
    exit_code = kExitNumerical;
  }

  if (exit_code == kExitOk) {
    report["results"] = results;
    if (options.mode == RunMode::Verify) {
      Json checks = Json::array();
      bool all = true;
      for (const auto& [name, ok] : ctx.checks) {
        checks.push_back({{"check", name}, {"passed", ok}});
        all = all && ok;
      }
      report["verification"] = {{"passed", all}, {"checks", checks}};
      if (!all) {
        std::cerr << "verification failed\n";
        exit_code = kExitNumerical;
      }
    }
  }

  try {
    write_json(options.out_dir / "report.json", report);
    write_json(options.out_dir / "timings.json", timings);
  } catch (const Error& e) {
    std::cerr << "stage output: " << e.what() << '\n';
    return kExitNumerical;
  }
  return exit_code;
}

}  // namespace oncodyn
