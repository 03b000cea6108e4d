#pragma once

// Scenario-driven commands behind the geomech executable: simulate, check and
// reduce. Every check maps onto one engine operation; this layer only wires
// scenario blocks to those operations and formats the results.
//
// Exit codes: 0 ok, 1 configuration error, 2 numerical abort,
// 3 implication violation, 4 a non-informational check failed.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "geomech/constraints.hpp"
#include "geomech/dynamics.hpp"
#include "geomech/errors.hpp"
#include "geomech/relativity_em.hpp"
#include "geomech/sampling.hpp"
#include "geomech/scenario.hpp"
#include "geomech/waves.hpp"

namespace geomech::cli {

using json = nlohmann::ordered_json;

enum ExitCode : int { kOk = 0, kConfig = 1, kNumeric = 2, kViolation = 3, kCheckFailed = 4 };

/// %.17g without locale.
inline std::string format_g17(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

struct Check {
  std::string name;
  double residual = 0.0;
  double gate = 0.0;
  bool pass = false;
  bool informational = false;
  bool violation = false;
  bool lower_bound = false;
};

class Report {
 public:
  explicit Report(std::string suite) : suite_(std::move(suite)) {}

  Check& add(const std::string& name, double residual, double gate, bool informational = false) {
    checks_.push_back({name, residual, gate, std::isfinite(residual) && residual < gate, informational, false});
    return checks_.back();
  }

  /// Passes when the value exceeds the gate.
  Check& add_lower_bound(const std::string& name, double value, double gate) {
    Check& c = add(name, value, gate);
    c.pass = std::isfinite(value) && value > gate;
    c.lower_bound = true;
    return c;
  }

  /// Implication structure: residual 1 on violation.
  void add_implication(const std::string& name, bool violated) {
    Check& c = add(name, violated ? 1.0 : 0.0, 0.5);
    c.violation = violated;
  }

  json& conventions() { return conventions_; }
  json& extra() { return extra_; }
  const std::vector<Check>& checks() const { return checks_; }

  int exit_code() const {
    for (const auto& c : checks_)
      if (c.violation) return kViolation;
    for (const auto& c : checks_)
      if (!c.informational && !c.pass) return kCheckFailed;
    return kOk;
  }

  json to_json() const {
    json j;
    j["suite"] = suite_;
    j["checks"] = json::array();
    for (const auto& c : checks_) {
      json e;
      e["name"] = c.name;
      e["residual"] = number_or_null(c.residual);
      e["gate"] = c.gate;
      e["pass"] = c.pass;
      if (c.informational) e["informational"] = true;
      if (c.violation) e["violation"] = true;
      if (c.lower_bound) e["lower_bound"] = true;
      j["checks"].push_back(std::move(e));
    }
    j["conventions"] = conventions_;
    if (!extra_.is_null()) j["details"] = extra_;
    j["exit"] = exit_code();
    return j;
  }

 private:
  std::string suite_;
  std::vector<Check> checks_;
  json conventions_ = json::object();
  json extra_;
};

struct Options {
  std::uint64_t seed = 1;
  std::optional<int> codiff_sign;
};

namespace detail {

inline State initial_state(const Scenario& s) {
  if (!s.run) throw ConfigError("scenario needs a [run] section");
  return {s.run->x0, s.run->v0};
}

inline bool has_any_force(const Scenario& s) { return s.potential || s.force || s.two_form; }

inline Expr potential_or_zero(const Scenario& s) { return s.potential.value_or(Expr(0.0)); }

inline double relative_drift(const std::vector<double>& series) {
  return drift(series) / (1.0 + std::abs(series.front()));
}

inline std::vector<std::string> strings_of(const std::vector<Expr>& es) {
  std::vector<std::string> out;
  for (const auto& e : es) out.push_back(to_string(e));
  return out;
}

inline void fill_conventions(Report& r, const Scenario& s, const Options& o) {
  auto& c = r.conventions();
  c["codiff_sign"] = o.codiff_sign.value_or(s.codiff_sign);
  c["c"] = s.c;
  c["E0"] = s.E0 ? json(*s.E0) : json(nullptr);
  c["seed"] = o.seed;
  c["time_index"] = s.time_index_or_default() + 1;
  c["sample_count"] = s.box.count;
  c["pass_gate"] = kWavePassGate;
  c["fail_gate"] = kWaveFailGate;
}

inline void suite_newton(const Scenario& s, const Options& o, Report& r) {
  const State s0 = initial_state(s);
  const SecondOrderField f = s.full_field();
  const Trajectory tr = integrate(f, s0, s.run->t_end, s.run->dt);
  const auto states = sample_states(s.box, o.seed);

  const bool contact = contact_membership_residual(s.total_force(), states) < kContactGate;
  const bool theta_conserved = s.constraint ? s.constraint->kind == TimeConstraint::Kind::liouville_theta : contact;
  r.add("theta_dot_drift", relative_drift(observable_series(s.metric(), tr, Observable::theta_dot())), 1e-8,
        !theta_conserved);

  const bool energy_conserved = !s.force && !s.constraint;
  r.add("energy_drift",
        relative_drift(observable_series(s.metric(), tr, Observable::hamiltonian(potential_or_zero(s)))), 1e-8,
        !energy_conserved);

  if (s.constraint) {
    double worst = 0.0;
    for (const auto& st : states) worst = std::max(worst, std::abs(f.constraint_rate(st)));
    r.add("constraint_rate", worst, 1e-10);
  }
  r.add("reversibility", reversibility_residual(f, tr), 1e-12, true);
  r.extra()["samples"] = tr.size();
  r.extra()["dt"] = tr.dt;
}

inline void suite_recover_force(const Scenario& s, const Options& o, Report& r) {
  if (!s.field) throw ConfigError("recover-force needs a [field] section");
  const auto points = sample_points(s.box, o.seed);
  const ForceForm alpha = force_from_field(s.metric(), *s.field);
  r.add("velocity_independent", alpha.velocity_independent() ? 0.0 : 1.0, 0.5);
  r.add("intermediate_residual", intermediate_residual_max(s.metric(), alpha, *s.field, points), 1e-10);

  if (has_any_force(s)) {
    const ForceForm given = s.total_force();
    if (given.velocity_independent()) {
      double worst = 0.0;
      for (const auto& x : points)
        for (std::size_t k = 0; k < s.dim(); ++k) {
          const double a = eval_at(given.A[k], x);
          worst = std::max(worst, std::abs(eval_at(alpha.A[k], x) - a) / (1.0 + std::abs(a)));
        }
      r.add("matches_given_force", worst, 1e-8);
    }
  }

  if (s.run) {
    const SecondOrderField f = newton_field(s.metric(), alpha);
    const State s0{s.run->x0, s.field->eval(s.run->x0)};
    const Trajectory tr = integrate(f, s0, s.run->t_end, s.run->dt);
    double worst = 0.0;
    for (const auto& st : tr.states) worst = std::max(worst, (st.xdot - s.field->eval(st.x)).norm());
    r.add("trajectory_on_section", worst, 1e-6);
  }
  r.extra()["recovered_force"] = strings_of(alpha.A);
}

inline void suite_time_constraint(const Scenario& s, const Options& o, Report& r) {
  const std::size_t i0 = s.time_index_or_default();
  const TimeConstraint tc = s.constraint.value_or(TimeConstraint::exact_differential(s.dim(), i0));
  const SecondOrderField f = s.unconstrained_field();
  const SecondOrderField bar = constrained_field(f, tc);
  const auto states = sample_states(s.box, o.seed);

  double worst = 0.0;
  for (const auto& st : states) worst = std::max(worst, std::abs(bar.constraint_rate(st)));
  r.add("constraint_rate", worst, 1e-10);

  if (tc.position_only()) r.add("crosscheck", campotiempo2_crosscheck(f, tc.tau, states), 1e-8);

  if (tc.kind == TimeConstraint::Kind::exact_differential && !s.force && !s.two_form) {
    double ml = 0.0;
    for (auto st : states) {
      st.xdot[static_cast<Eigen::Index>(tc.index)] = 1.0;
      ml = std::max(ml, modified_liouville(s.metric(), potential_or_zero(s), st, tc.index).residual);
    }
    r.add("modified_liouville", ml, 1e-8);
  }
}

inline double max_position_gap(const Trajectory& full, const Trajectory& reduced, std::size_t i0) {
  double worst = 0.0;
  for (std::size_t k = 0; k < full.size() && k < reduced.size(); ++k)
    worst = std::max(worst, (drop_component(full.states[k].x, i0) - reduced.states[k].x).norm());
  return worst;
}

inline void suite_reduce(const Scenario& s, const Options& o, Report& r) {
  const std::size_t i0 = s.time_index_or_default();
  check_block_form(s.metric(), i0, s.box);
  r.add("block_form", 0.0, 0.5);

  const auto k0 = static_cast<Eigen::Index>(i0);
  std::optional<double> E0 = s.E0;
  if (!E0 && s.run) {
    E0 = infer_E0(s.metric(), initial_state(s), i0, s.c);
    r.extra()["E0_inferred"] = *E0;
  }
  const ReducedSystem tc_sys = reduce_by_time_constraint(s.metric(), i0, s.box);

  if (E0) {
    const ReducedSystem proj = project_geodesic(s.metric(), i0, *E0, s.c, s.box);
    if (s.run) {
      State s0 = initial_state(s);
      const MetricEval me = metric_eval(s.metric(), s0.x);
      s0.xdot[k0] = *E0 / (s.c * me.g(k0, k0));
      const Trajectory full = integrate(geodesic_field(s.metric()), s0, s.run->t_end, s.run->dt);
      const Trajectory red = integrate(reduced_field(proj), drop_component(s0, i0), s.run->t_end, s.run->dt);
      r.add("projection_equivalence", max_position_gap(full, red, i0), 1e-5);
    }
    const Vec x = drop_component(sample_points(s.box, o.seed).front(), i0);
    Vec xt(static_cast<Eigen::Index>(s.dim()));
    xt << x, 0.0;
    r.add_lower_bound("potential_difference", std::abs(eval_at(proj.potential, xt) - eval_at(tc_sys.potential, xt)),
                      0.1);
    r.extra()["projected_potential"] = to_string(proj.potential);
  }
  if (s.run) {
    State s0 = initial_state(s);
    s0.xdot[k0] = 1.0;
    const SecondOrderField bar =
        constrained_field(geodesic_field(s.metric()), TimeConstraint::exact_differential(s.dim(), i0));
    const Trajectory full = integrate(bar, s0, s.run->t_end, s.run->dt);
    const Trajectory red = integrate(reduced_field(tc_sys), drop_component(s0, i0), s.run->t_end, s.run->dt);
    r.add("time_constraint_equivalence", max_position_gap(full, red, i0), 1e-6);
  }
  r.extra()["time_constraint_potential"] = to_string(tc_sys.potential);
}

inline void suite_relativistic(const Scenario& s, const Options& o, Report& r) {
  const auto states = sample_states(s.box, o.seed);
  const ForceForm alpha = s.total_force();
  const SecondOrderField f = s.unconstrained_field();

  r.add("force_in_contact_system", contact_membership_residual(alpha, states), kContactGate, true);
  r.add("relativistic", relativistic_residual(f, states), kContactGate, true);

  // Dθ̇ = −2α̇ at every state.
  const AlongField rate(theta_dot_expr(s.metric()), s.dim());
  double worst = 0.0;
  for (const auto& st : states) {
    double a_dot = 0.0;
    for (std::size_t i = 0; i < s.dim(); ++i) a_dot += eval_at(alpha.A[i], st) * st.xdot[static_cast<Eigen::Index>(i)];
    worst = std::max(worst, std::abs(rate(st, f.accel(st)) + 2.0 * a_dot) / (1.0 + std::abs(a_dot)));
  }
  r.add("dtheta_dot_equals_minus_twice_alpha_dot", worst, 1e-10);

  if (s.two_form) r.add("lorentz_contact", contact_membership_residual(lorentz_force_form(*s.two_form), states), 1e-12);

  const SecondOrderField corrected = relativistic_correction(f);
  double contact = 0.0;
  for (const auto& st : states) {
    const Vec A = effective_force(corrected, st);
    contact = std::max(contact, std::abs(A.dot(st.xdot)));
  }
  r.add("corrected_force_in_contact_system", contact, 1e-10);
  r.add("corrected_relativistic", relativistic_residual(corrected, states), 1e-10);
  if (s.run) {
    const State s0 = initial_state(s);
    const Trajectory tr = integrate(corrected, s0, s.run->t_end, s.run->dt);
    r.add("corrected_theta_dot_drift", relative_drift(observable_series(s.metric(), tr, Observable::theta_dot())),
          1e-8);
  }
}

inline void suite_maxwell(const Scenario& s, const Options& o, Report& r) {
  if (!s.two_form) throw ConfigError("maxwell needs a [two_form] section");
  const int sign = o.codiff_sign.value_or(s.codiff_sign);
  const auto points = sample_points(s.box, o.seed);
  const MaxwellReport m = maxwell_theorem_check(s.metric(), *s.two_form, points, sign);

  r.add("closed", m.closedness, kClosednessGate, true);
  r.add("minus_J_is_potential", m.minus_J_potential, kMaxwellGate, true);
  r.add("J_intermediate_integral", m.intermediate, kMaxwellGate, true);
  r.add("J_norm_constant", m.norm2_stddev, 1e-6 * (1.0 + std::abs(m.norm2_mean)), true);
  r.add("div_J", m.div_J, 1e-10);
  r.add_implication("implication", m.violation);

  const VectorFieldOnM J = maxwell_current_unchecked(s.metric(), *s.two_form, sign);
  if (s.vector_potential) {
    const auto& A = *s.vector_potential;
    std::vector<Expr> shifted = A.u;
    const auto gauge = grad_expr(s.metric(), sin(Expr::coord(0)) * Expr::coord(s.dim() - 1) + Expr(0.5));
    for (std::size_t i = 0; i < s.dim(); ++i) shifted[i] += gauge[i];
    const auto J1 = maxwell_current_unchecked(s.metric(), potential_two_form(s.metric(), A), sign);
    const auto J2 = maxwell_current_unchecked(s.metric(), potential_two_form(s.metric(), VectorFieldOnM(shifted)), sign);
    double worst = 0.0;
    for (const auto& x : points) worst = std::max(worst, (J1.eval(x) - J2.eval(x)).cwiseAbs().maxCoeff());
    r.add("gauge_invariance", worst, 1e-12);
  }
  r.extra()["J"] = strings_of(J.u);
  r.extra()["J_norm2_mean"] = m.norm2_mean;
}

inline void add_three_way(Report& r, const std::string& prefix, const ThreeWayReport& t) {
  for (std::size_t k = 0; k < 3; ++k) r.add(prefix + "." + t.names[k], t.residual[k], t.pass_gate, true);
  if (t.hypothesis_checked) r.add(prefix + ".hypothesis", t.hypothesis_residual, t.pass_gate, true);
  r.add_implication(prefix + ".implication", t.violation);
}

inline void suite_waves(const Scenario& s, const Options& o, Report& r) {
  if (!s.wave) throw ConfigError("waves needs a [wave] section");
  const WaveSpec& w = *s.wave;
  const auto points = sample_points(s.box, o.seed);
  const Expr U = potential_or_zero(s);
  const Metric& m = s.metric();
  bool any = false;

  if (w.S) {
    any = true;
    double identity = 0.0;
    for (const auto& x : points) identity = std::max(identity, std::abs(schrodinger_identity_residual(m, U, *w.S, x)));
    r.add("schrodinger_identity", identity, 1e-9);
    if (w.E) add_three_way(r, "schrodinger", three_way_check(m, U, *w.S, *w.E, points));

    if (w.rho && w.E) {
      const ThreeWayReport t = sqrt_rho_three_way(m, U, *w.S, *w.rho, *w.E, points);
      add_three_way(r, "sqrt_rho", t);
      double id = 0.0;
      for (const auto& x : points) id = std::max(id, std::abs(sqrt_rho_identity_residual(m, U, *w.S, *w.rho, x)));
      r.add("sqrt_rho_identity", id, 1e-9, !t.hypothesis_ok);
    }
    if (w.a_re && w.E) {
      add_three_way(r, "complex_amplitude", complex_amplitude_three_way(m, U, *w.S, *w.a_re, *w.a_im, *w.E, points));
      double id = 0.0;
      for (const auto& x : points)
        id = std::max(id, std::abs(complex_amplitude_identity_residual(m, U, *w.S, *w.a_re, *w.a_im, *w.E, x)));
      r.add("complex_amplitude_identity", id, 1e-9);
    }
    if (s.vector_potential) {
      double id = 0.0;
      for (const auto& x : points) id = std::max(id, std::abs(kg_identity_residual(m, *s.vector_potential, *w.S, x)));
      r.add("klein_gordon_identity", id, 1e-9);
      if (w.m) add_three_way(r, "klein_gordon", kg_three_way_check(m, *s.vector_potential, *w.S, *w.m, points));
    }
  }
  if (w.W) {
    any = true;
    const std::size_t i0 = s.time_index_or_default();
    double worst = 0.0;
    bool hypotheses = true;
    for (const auto& x : points) {
      const auto t = schrodinger_time_residual(m, U, *w.W, x, i0);
      worst = std::max(worst, std::abs(t.residual));
      hypotheses = hypotheses && t.hypotheses_hold;
    }
    r.add("schrodinger_time", worst, 1e-10, !hypotheses);
  }
  if (!any) throw ConfigError("[wave] needs S or W");
}

inline void suite_noether(const Scenario& s, const Options& o, Report& r) {
  if (!s.symmetry) throw ConfigError("noether needs a [symmetry] section");
  const auto states = sample_states(s.box, o.seed);
  const Expr U = potential_or_zero(s);
  const VectorFieldOnM& v = *s.symmetry;

  double dl = 0.0;
  for (const auto& st : states) dl = std::max(dl, std::abs(delta_L(s.metric(), U, v, st)));
  r.add("delta_L", dl, 1e-12, true);

  const State s0 = initial_state(s);
  const SecondOrderField f = s.unconstrained_field();
  const Trajectory tr = integrate(f, s0, s.run->t_end, s.run->dt);
  std::vector<double> charge;
  for (const auto& st : tr.states) charge.push_back(noether_charge(s.metric(), v, st));
  const bool expected = dl < 1e-12 && !s.force && !s.two_form;
  r.add("charge_drift", relative_drift(charge), 1e-8, !expected);

  const ForceForm alpha = s.total_force();
  const std::size_t stride = std::max<std::size_t>(1, tr.size() / 100);
  double z = 0.0;
  for (std::size_t k = 1; k + 1 < tr.size(); k += stride)
    z = std::max(z, std::abs(zentralgleichung_residual(s.metric(), alpha, v, tr, k)));
  r.add("zentralgleichung", z, 1e-6);
}

using Suite = std::function<void(const Scenario&, const Options&, Report&)>;

inline const std::map<std::string, Suite>& suites() {
  static const std::map<std::string, Suite> table = {
      {"newton", suite_newton},         {"recover-force", suite_recover_force},
      {"time-constraint", suite_time_constraint}, {"reduce", suite_reduce},
      {"relativistic", suite_relativistic}, {"maxwell", suite_maxwell},
      {"waves", suite_waves},           {"noether", suite_noether},
  };
  return table;
}

/// Runs `body`, mapping engine exceptions to exit codes with a diagnostic on `err`.
inline int guarded(const std::function<int()>& body, std::ostream& err) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kConfig;
  } catch (const PreconditionError& e) {
    err << "precondition failed: " << e.what() << "\n";
    return kConfig;
  } catch (const IntegrationError& e) {
    err << "integration aborted at t=" << format_g17(e.time()) << ": " << e.what() << "\n";
    return kNumeric;
  } catch (const Error& e) {
    err << "numerical error: " << e.what() << "\n";
    return kNumeric;
  }
}

}  // namespace detail

/// Builds the JSON report of one suite. Throws on configuration or numerical errors.
inline json check_report(const Scenario& s, const std::string& suite, const Options& o = {}) {
  const auto& table = detail::suites();
  const auto it = table.find(suite);
  if (it == table.end()) throw ConfigError("unknown suite '" + suite + "'");
  Report r(suite);
  detail::fill_conventions(r, s, o);
  it->second(s, o, r);
  return r.to_json();
}

inline void write_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + path + "'");
  f << text;
}

inline int cmd_check(const std::string& scenario_path, const std::string& suite, const std::string& out_path,
                     const Options& o = {}, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return detail::guarded(
      [&] {
        const Scenario s = load_scenario(scenario_path);
        const json report = check_report(s, suite, o);
        write_text(out_path, report.dump(2) + "\n", out);
        return report["exit"].get<int>();
      },
      err);
}

/// Trajectory CSV `t,x1..xn,v1..vn,T,theta_dot[,H]`.
inline std::string trajectory_csv(const Scenario& s, const Trajectory& tr) {
  const std::size_t n = s.dim();
  std::string csv = "t";
  for (std::size_t i = 0; i < n; ++i) csv += ",x" + std::to_string(i + 1);
  for (std::size_t i = 0; i < n; ++i) csv += ",v" + std::to_string(i + 1);
  csv += ",T,theta_dot";
  if (s.potential) csv += ",H";
  csv += "\n";
  for (std::size_t k = 0; k < tr.size(); ++k) {
    const State& st = tr.states[k];
    const Liouville l = liouville(s.metric(), st);
    csv += format_g17(tr.times[k]);
    for (Eigen::Index i = 0; i < st.x.size(); ++i) csv += "," + format_g17(st.x[i]);
    for (Eigen::Index i = 0; i < st.xdot.size(); ++i) csv += "," + format_g17(st.xdot[i]);
    csv += "," + format_g17(l.T) + "," + format_g17(l.theta_dot);
    if (s.potential) csv += "," + format_g17(l.T + eval_at(*s.potential, st));
    csv += "\n";
  }
  return csv;
}

inline std::string sidecar_path(const std::string& csv_path) {
  const auto dot = csv_path.find_last_of('.');
  const auto slash = csv_path.find_last_of('/');
  if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) return csv_path.substr(0, dot) + ".json";
  return csv_path + ".json";
}

inline json trajectory_summary(const Scenario& s, const Trajectory& tr) {
  json j;
  j["scenario"] = s.name;
  j["rows"] = tr.size();
  j["dt"] = tr.dt;
  j["t_end"] = tr.times.back();
  j["integrator"] = tr.integrator;
  json d;
  d["T"] = drift(observable_series(s.metric(), tr, Observable::kinetic()));
  d["theta_dot"] = drift(observable_series(s.metric(), tr, Observable::theta_dot()));
  if (s.potential) d["H"] = drift(observable_series(s.metric(), tr, Observable::hamiltonian(*s.potential)));
  j["drift"] = d;
  j["conventions"] = {{"c", s.c}, {"codiff_sign", s.codiff_sign}};
  return j;
}

inline int cmd_simulate(const std::string& scenario_path, const std::string& out_path,
                        std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return detail::guarded(
      [&] {
        const Scenario s = load_scenario(scenario_path);
        if (!s.run) throw ConfigError("simulate needs a [run] section");
        const State s0 = detail::initial_state(s);
        const Trajectory tr = integrate(s.full_field(), s0, s.run->t_end, s.run->dt);
        write_text(out_path, trajectory_csv(s, tr), out);
        if (!out_path.empty() && out_path != "-")
          write_text(sidecar_path(out_path), trajectory_summary(s, tr).dump(2) + "\n", out);
        return int(kOk);
      },
      err);
}

/// The reduced system as a scenario fragment that parses on its own.
inline std::string reduced_scenario_text(const Scenario& s, const ReducedSystem& r) {
  const std::size_t n = r.metric.dim();
  std::ostringstream t;
  t << "name = \"" << (s.name.empty() ? "reduced" : s.name + "-reduced") << "\"\n\n";
  t << "[chart]\ndim = " << n << "\n";
  std::vector<std::string> names;
  for (std::size_t i = 0; i < s.dim(); ++i)
    if (i != r.time_index) names.push_back(s.chart.coord_names[i]);
  t << "names = [";
  for (std::size_t i = 0; i < names.size(); ++i) t << (i ? ", " : "") << '"' << names[i] << '"';
  t << "]\n\n[metric]\n";
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      const Expr& e = r.metric.entry(i, j);
      if (i != j && e.is_zero()) continue;
      t << "g_" << i + 1 << "_" << j + 1 << " = \"" << to_string(e) << "\"\n";
    }
  t << "\n[potential]\nU = \"" << to_string(r.potential) << "\"\n";
  if (s.run) {
    t << "\n[run]\n";
    const auto write_vec = [&](const char* key, const Vec& v) {
      t << key << " = [";
      for (Eigen::Index i = 0; i < v.size(); ++i) t << (i ? ", " : "") << format_g17(v[i]);
      t << "]\n";
    };
    write_vec("x0", drop_component(s.run->x0, r.time_index));
    write_vec("v0", drop_component(s.run->v0, r.time_index));
    t << "t_end = " << format_g17(s.run->t_end) << "\ndt = " << format_g17(s.run->dt) << "\n";
  }
  t << "\n[sample_box]\nlo = [";
  std::size_t k = 0;
  for (std::size_t i = 0; i < s.dim(); ++i)
    if (i != r.time_index) t << (k++ ? ", " : "") << format_g17(s.box.lo[i]);
  t << "]\nhi = [";
  k = 0;
  for (std::size_t i = 0; i < s.dim(); ++i)
    if (i != r.time_index) t << (k++ ? ", " : "") << format_g17(s.box.hi[i]);
  t << "]\ncount = " << s.box.count << "\n";
  return t.str();
}

inline json reduce_report(const Scenario& s, const std::string& mode) {
  const std::size_t i0 = s.time_index_or_default();
  json j;
  j["mode"] = mode;
  std::optional<ReducedSystem> r;
  if (mode == "project") {
    double E0 = 0.0;
    if (s.E0) {
      E0 = *s.E0;
      j["E0_source"] = "constants";
    } else if (s.run) {
      E0 = infer_E0(s.metric(), detail::initial_state(s), i0, s.c);
      j["E0_source"] = "inferred from run.v0";
    } else {
      throw ConfigError("project mode needs constants.E0 or a [run] block to infer it");
    }
    r = project_geodesic(s.metric(), i0, E0, s.c, s.box);
  } else if (mode == "constrain") {
    r = reduce_by_time_constraint(s.metric(), i0, s.box);
  } else {
    throw ConfigError("mode must be project or constrain");
  }
  j["provenance"] = to_string(r->provenance);
  j["time_index"] = i0 + 1;
  j["constants"] = {{"E0", r->E0}, {"c", r->c}};
  json metric = json::object();
  for (std::size_t a = 0; a < r->metric.dim(); ++a)
    for (std::size_t b = a; b < r->metric.dim(); ++b)
      metric["g_" + std::to_string(a + 1) + "_" + std::to_string(b + 1)] = to_string(r->metric.entry(a, b));
  j["metric"] = metric;
  j["potential"] = to_string(r->potential);
  j["scenario"] = reduced_scenario_text(s, *r);
  return j;
}

inline int cmd_reduce(const std::string& scenario_path, const std::string& mode, const std::string& out_path,
                      std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return detail::guarded(
      [&] {
        const Scenario s = load_scenario(scenario_path);
        write_text(out_path, reduce_report(s, mode).dump(2) + "\n", out);
        return int(kOk);
      },
      err);
}

}  // namespace geomech::cli
