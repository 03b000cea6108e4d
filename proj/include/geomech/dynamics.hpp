#pragma once

// Second-order fields assembled from a metric and a horizontal force form:
//
//   g_lk ẍ^l + Γ_{ij,k} ẋ^i ẋ^j + A_k(x, ẋ) = 0
//
// plus fixed-step RK4 trajectories and the observables, intermediate
// integral residuals and Noether quantities computed along them.

#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "geomech/errors.hpp"
#include "geomech/expr.hpp"
#include "geomech/geometry.hpp"

namespace geomech {

/// Horizontal 1-form α = A_i dx^i with components in (x, v).
struct ForceForm {
  std::vector<Expr> A;

  std::size_t dim() const { return A.size(); }
  bool velocity_independent() const {
    for (const auto& a : A)
      if (a.depends_on_velocity()) return false;
    return true;
  }

  static ForceForm zero(std::size_t n) { return {std::vector<Expr>(n, Expr(0.0))}; }
  /// α = dU.
  static ForceForm exact(const Expr& U, std::size_t n) {
    detail::require_position_only(U, "potential");
    return {partials(U, n)};
  }
};

/// Vector field on M with position-only components u^i.
struct VectorFieldOnM {
  std::vector<Expr> u;

  VectorFieldOnM() = default;
  explicit VectorFieldOnM(std::vector<Expr> comps) : u(std::move(comps)) {
    for (const auto& c : u) detail::require_position_only(c, "vector field on M");
  }
  std::size_t dim() const { return u.size(); }
  Vec eval(const Vec& x) const {
    Vec out(static_cast<Eigen::Index>(u.size()));
    for (std::size_t i = 0; i < u.size(); ++i) out[static_cast<Eigen::Index>(i)] = eval_at(u[i], x);
    return out;
  }
};

/// Vector potentials are plain position-only fields.
using VectorPotential = VectorFieldOnM;

/// Horizontal form τ selecting admissible states τ̇ = const.
struct TimeConstraint {
  enum class Kind { exact_differential, liouville_theta, general };

  Kind kind = Kind::general;
  std::vector<Expr> tau;
  std::size_t index = 0;  // the x^{i0} of dx^{i0}, exact_differential only

  static TimeConstraint exact_differential(std::size_t n, std::size_t i0) {
    if (i0 >= n) throw PreconditionError("time index outside chart");
    std::vector<Expr> t(n, Expr(0.0));
    t[i0] = Expr(1.0);
    return {Kind::exact_differential, std::move(t), i0};
  }
  static TimeConstraint liouville_theta(const Metric& m) { return {Kind::liouville_theta, theta_expr(m), 0}; }
  static TimeConstraint general(std::vector<Expr> t) { return {Kind::general, std::move(t), 0}; }

  bool position_only() const {
    for (const auto& t : tau)
      if (t.depends_on_velocity()) return false;
    return true;
  }
  /// τ̇ = τ_i v^i.
  Expr rate_expr() const {
    Expr s(0.0);
    for (std::size_t i = 0; i < tau.size(); ++i) s += tau[i] * Expr::vel(i);
    return s;
  }
};

/// Derivative of a function h(x, v) along a second-order field: ẋ^i ∂_{x^i} h + ẍ^i ∂_{v^i} h.
class AlongField {
 public:
  AlongField(const Expr& h, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      dx_.push_back(diff(h, Symbol::x(i)));
      dv_.push_back(diff(h, Symbol::v(i)));
    }
  }

  double operator()(const State& s, const Vec& accel) const {
    double r = 0.0;
    for (std::size_t i = 0; i < dx_.size(); ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      if (!dx_[i].is_zero()) r += s.xdot[k] * eval_at(dx_[i], s);
      if (!dv_[i].is_zero()) r += accel[k] * eval_at(dv_[i], s);
    }
    return r;
  }

  /// ∂h/∂v^i at s.
  Vec vertical_gradient(const State& s) const {
    Vec out(static_cast<Eigen::Index>(dv_.size()));
    for (std::size_t i = 0; i < dv_.size(); ++i) out[static_cast<Eigen::Index>(i)] = eval_at(dv_[i], s);
    return out;
  }

 private:
  std::vector<Expr> dx_;
  std::vector<Expr> dv_;
};

inline constexpr double kNullConstraint = 1e-10;

class SecondOrderField {
 public:
  SecondOrderField(Metric m, ForceForm f, std::optional<TimeConstraint> tc = std::nullopt) {
    if (f.dim() != m.dim()) throw PreconditionError("force form dimension does not match metric");
    if (tc && tc->tau.size() != m.dim()) throw PreconditionError("time constraint dimension does not match metric");
    auto impl = std::make_shared<Impl>(Impl{std::move(m), std::move(f), std::move(tc), std::nullopt});
    if (impl->constraint) impl->rate = AlongField(impl->constraint->rate_expr(), impl->metric.dim());
    impl_ = std::move(impl);
  }

  const Metric& metric() const { return impl_->metric; }
  const ForceForm& force() const { return impl_->force; }
  const std::optional<TimeConstraint>& constraint() const { return impl_->constraint; }
  std::size_t dim() const { return impl_->metric.dim(); }

  /// ẍ of the geodesic field: −g^{-1} Γ_{ij,·} ẋ^i ẋ^j.
  Vec geodesic_accel(const State& s) const {
    const MetricEval me = metric_eval(metric(), s.x);
    return -(me.g_inv * Christoffel(me).contract(s.xdot));
  }

  /// ẍ before any constraint modification.
  Vec unconstrained_accel(const State& s) const {
    check(s);
    const MetricEval me = metric_eval(metric(), s.x);
    Vec rhs = Christoffel(me).contract(s.xdot);
    for (std::size_t k = 0; k < dim(); ++k) {
      const Expr& a = force().A[k];
      if (!a.is_zero()) rhs[static_cast<Eigen::Index>(k)] += eval_at(a, s);
    }
    return -(me.g_inv * rhs);
  }

  /// ẍ of the field, including the time-constraint modification
  ///   ẍ̄ = ẍ − (Dτ̇ / (Grad τ)τ̇) g^{-1}τ.
  Vec accel(const State& s) const {
    Vec a = unconstrained_accel(s);
    if (!impl_->constraint) return a;
    const std::size_t n = dim();
    const MetricEval me = metric_eval(metric(), s.x);
    Vec tau(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) tau[static_cast<Eigen::Index>(i)] = eval_at(impl_->constraint->tau[i], s);
    const Vec grad_tau = me.g_inv * tau;
    const double denom = grad_tau.dot(impl_->rate->vertical_gradient(s));
    if (!(std::abs(denom) > kNullConstraint))
      throw NullConstraintError("null time constraint at state " + describe(s));
    const double rate = (*impl_->rate)(s, a);
    return a - (rate / denom) * grad_tau;
  }

  /// D̄τ̇ at s, zero identically for a constrained field.
  double constraint_rate(const State& s) const {
    if (!impl_->constraint) throw PreconditionError("field has no time constraint");
    return (*impl_->rate)(s, accel(s));
  }

 private:
  struct Impl {
    Metric metric;
    ForceForm force;
    std::optional<TimeConstraint> constraint;
    std::optional<AlongField> rate;
  };

  void check(const State& s) const {
    if (s.dim() != dim() || static_cast<std::size_t>(s.xdot.size()) != dim())
      throw PreconditionError("state dimension does not match field");
  }

  static std::string describe(const State& s) {
    std::string out = "x=(";
    for (Eigen::Index i = 0; i < s.x.size(); ++i) out += (i ? "," : "") + std::to_string(s.x[i]);
    out += ") v=(";
    for (Eigen::Index i = 0; i < s.xdot.size(); ++i) out += (i ? "," : "") + std::to_string(s.xdot[i]);
    return out + ")";
  }

  std::shared_ptr<const Impl> impl_;
};

inline SecondOrderField newton_field(const Metric& m, const ForceForm& alpha) { return SecondOrderField(m, alpha); }
inline SecondOrderField geodesic_field(const Metric& m) { return SecondOrderField(m, ForceForm::zero(m.dim())); }

/// D^∇: geometric representative of the force D − D_G. Equals −g^{kl}A_l for unconstrained fields.
inline Vec covariant_value(const SecondOrderField& f, const State& s) { return f.accel(s) - f.geodesic_accel(s); }

/// Force form actually realised by a field at s: A_k = −g_kl (D^∇)^l.
inline Vec effective_force(const SecondOrderField& f, const State& s) {
  const MetricEval me = metric_eval(f.metric(), s.x);
  return -(me.g * covariant_value(f, s));
}

struct Trajectory {
  std::vector<double> times;
  std::vector<State> states;
  double dt = 0.0;
  std::string integrator = "rk4";

  std::size_t size() const { return times.size(); }
};

/// Classical RK4 on (x, ẋ). The step is t_end / ceil(t_end / dt), so the grid is
/// uniform and ends exactly at t_end.
inline Trajectory integrate(const SecondOrderField& f, const State& s0, double t_end, double dt) {
  if (!(dt > 0.0) || !(t_end > 0.0)) throw PreconditionError("t_end and dt must be positive");
  if (dt > t_end) throw PreconditionError("dt exceeds t_end");
  const auto steps = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
  const double h = t_end / static_cast<double>(steps);

  Trajectory tr;
  tr.dt = h;
  tr.times.reserve(steps + 1);
  tr.states.reserve(steps + 1);
  tr.times.push_back(0.0);
  tr.states.push_back(s0);

  State s = s0;
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * h;
    try {
      const Vec a1 = f.accel(s);
      const State s2{s.x + 0.5 * h * s.xdot, s.xdot + 0.5 * h * a1};
      const Vec a2 = f.accel(s2);
      const State s3{s.x + 0.5 * h * s2.xdot, s.xdot + 0.5 * h * a2};
      const Vec a3 = f.accel(s3);
      const State s4{s.x + h * s3.xdot, s.xdot + h * a3};
      const Vec a4 = f.accel(s4);
      s.x += (h / 6.0) * (s.xdot + 2.0 * s2.xdot + 2.0 * s3.xdot + s4.xdot);
      s.xdot += (h / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
    } catch (const IntegrationError&) {
      throw;
    } catch (const Error& e) {
      throw IntegrationError(e.what(), t);
    }
    if (!s.x.allFinite() || !s.xdot.allFinite()) throw IntegrationError("non-finite state", t);
    tr.times.push_back(static_cast<double>(k + 1) * h);
    tr.states.push_back(s);
  }
  return tr;
}

struct Observable {
  enum class Kind { kinetic, theta_dot, hamiltonian, custom };
  Kind kind = Kind::kinetic;
  Expr expr;  // potential U for hamiltonian, the function itself for custom

  static Observable kinetic() { return {Kind::kinetic, Expr()}; }
  static Observable theta_dot() { return {Kind::theta_dot, Expr()}; }
  static Observable hamiltonian(Expr U) { return {Kind::hamiltonian, std::move(U)}; }
  static Observable custom(Expr e) { return {Kind::custom, std::move(e)}; }
};

inline std::vector<double> observable_series(const Metric& m, const Trajectory& tr, const Observable& obs) {
  std::vector<double> out;
  out.reserve(tr.size());
  for (const auto& s : tr.states) {
    switch (obs.kind) {
      case Observable::Kind::kinetic: out.push_back(liouville(m, s).T); break;
      case Observable::Kind::theta_dot: out.push_back(liouville(m, s).theta_dot); break;
      case Observable::Kind::hamiltonian: out.push_back(liouville(m, s).T + eval_at(obs.expr, s)); break;
      case Observable::Kind::custom: out.push_back(eval_at(obs.expr, s)); break;
    }
  }
  return out;
}

/// max_t |f(t) − f(0)|.
inline double drift(const std::vector<double>& series) {
  double d = 0.0;
  for (double v : series) d = std::max(d, std::abs(v - series.front()));
  return d;
}

/// Velocity-independent force for which u is an intermediate integral:
///   α_k = −u^i(∂_i u_k − ∂_k u_i) − ∂_k(½ g_ij u^i u^j).
inline ForceForm force_from_field(const Metric& m, const VectorFieldOnM& u) {
  const std::size_t n = m.dim();
  if (u.dim() != n) throw PreconditionError("vector field dimension does not match metric");
  const auto low = lower(m, u.u);
  const Expr Tu = Expr(0.5) * inner_expr(m, u.u, u.u);
  ForceForm alpha{std::vector<Expr>(n, Expr(0.0))};
  for (std::size_t k = 0; k < n; ++k) {
    Expr rot(0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (i == k || u.u[i].is_zero()) continue;
      rot += u.u[i] * (diff(low[k], Symbol::x(i)) - diff(low[i], Symbol::x(k)));
    }
    alpha.A[k] = -rot - diff(Tu, Symbol::x(k));
  }
  return alpha;
}

/// Pull-back u*α: velocity symbols replaced by the components of u.
inline std::vector<Expr> pullback(const ForceForm& alpha, const VectorFieldOnM& u) {
  std::vector<Expr> out;
  for (const auto& a : alpha.A)
    out.push_back(substitute(a, [&](Symbol s) -> std::optional<Expr> {
      if (s.kind == SymbolKind::vel) return u.u.at(s.index);
      return std::nullopt;
    }));
  return out;
}

/// Components of i_u d(i_u T₂) + dT(u) + u*α as position-only expressions.
inline std::vector<Expr> intermediate_residual_expr(const Metric& m, const ForceForm& alpha, const VectorFieldOnM& u) {
  const std::size_t n = m.dim();
  if (u.dim() != n || alpha.dim() != n) throw PreconditionError("dimension mismatch in intermediate residual");
  const auto low = lower(m, u.u);
  const Expr Tu = Expr(0.5) * inner_expr(m, u.u, u.u);
  const auto pulled = pullback(alpha, u);
  std::vector<Expr> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    Expr rot(0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (i == k || u.u[i].is_zero()) continue;
      rot += u.u[i] * (diff(low[k], Symbol::x(i)) - diff(low[i], Symbol::x(k)));
    }
    out[k] = rot + diff(Tu, Symbol::x(k)) + pulled[k];
  }
  return out;
}

inline Vec intermediate_residual(const Metric& m, const ForceForm& alpha, const VectorFieldOnM& u, const Vec& x) {
  const auto r = intermediate_residual_expr(m, alpha, u);
  Vec out(static_cast<Eigen::Index>(r.size()));
  for (std::size_t k = 0; k < r.size(); ++k) out[static_cast<Eigen::Index>(k)] = eval_at(r[k], x);
  return out;
}

/// Max over points of the Euclidean norm of the intermediate residual.
inline double intermediate_residual_max(const Metric& m, const ForceForm& alpha, const VectorFieldOnM& u,
                                        const std::vector<Vec>& points) {
  const auto r = intermediate_residual_expr(m, alpha, u);
  double worst = 0.0;
  for (const auto& x : points) {
    double s = 0.0;
    for (const auto& e : r) {
      const double v = eval_at(e, x);
      s += v * v;
    }
    worst = std::max(worst, std::sqrt(s));
  }
  return worst;
}

inline constexpr double kIntermediateGate = 1e-8;

inline bool is_intermediate_integral(const Metric& m, const ForceForm& alpha, const VectorFieldOnM& u,
                                     const std::vector<Vec>& points) {
  return intermediate_residual_max(m, alpha, u, points) < kIntermediateGate;
}

/// ⟨θ, δ_v⟩ = g_ij ẋ^j v^i.
inline double noether_charge(const Metric& m, const VectorFieldOnM& v, const State& s) {
  const MetricEval me = metric_eval(m, s.x);
  return v.eval(s.x).dot(me.g * s.xdot);
}

/// Components of the lift δ_v = v^i ∂/∂x^i + (ẋ^j ∂_j v^i) ∂/∂ẋ^i, as (horizontal, vertical).
inline std::pair<std::vector<Expr>, std::vector<Expr>> variation_lift(const VectorFieldOnM& v) {
  const std::size_t n = v.dim();
  std::vector<Expr> vertical(n, Expr(0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) vertical[i] += Expr::vel(j) * diff(v.u[i], Symbol::x(j));
  return {v.u, vertical};
}

/// δ_v applied to a function h(x, v), symbolic.
inline Expr apply_variation(const VectorFieldOnM& v, const Expr& h) {
  const auto [horizontal, vertical] = variation_lift(v);
  Expr out(0.0);
  for (std::size_t i = 0; i < v.dim(); ++i) {
    if (!horizontal[i].is_zero()) out += horizontal[i] * diff(h, Symbol::x(i));
    if (!vertical[i].is_zero()) out += vertical[i] * diff(h, Symbol::v(i));
  }
  return out;
}

/// δ_v L for L = T − U.
inline double delta_L(const Metric& m, const Expr& U, const VectorFieldOnM& v, const State& s) {
  detail::require_position_only(U, "potential");
  if (v.dim() != m.dim()) throw PreconditionError("variation field dimension does not match metric");
  return eval_at(apply_variation(v, kinetic_expr(m) - U), s);
}

/// d/dt⟨θ, δ_v⟩ by central differences at sample `index` minus ⟨dT − α, δ_v⟩ there.
inline double zentralgleichung_residual(const Metric& m, const ForceForm& alpha, const VectorFieldOnM& v,
                                        const Trajectory& tr, std::size_t index) {
  if (index == 0 || index + 1 >= tr.size()) throw PreconditionError("sample index needs both neighbours");
  const double q_prev = noether_charge(m, v, tr.states[index - 1]);
  const double q_next = noether_charge(m, v, tr.states[index + 1]);
  const double lhs = (q_next - q_prev) / (tr.times[index + 1] - tr.times[index - 1]);
  const State& s = tr.states[index];
  double work = 0.0;
  const Vec vx = v.eval(s.x);
  for (std::size_t i = 0; i < v.dim(); ++i) work += eval_at(alpha.A[i], s) * vx[static_cast<Eigen::Index>(i)];
  const double rhs = eval_at(apply_variation(v, kinetic_expr(m)), s) - work;
  return lhs - rhs;
}

/// max over samples of ‖accel(x, −ẋ) − accel(x, ẋ)‖.
inline double reversibility_residual(const SecondOrderField& f, const Trajectory& tr) {
  double worst = 0.0;
  for (const auto& s : tr.states) {
    const State back{s.x, -s.xdot};
    worst = std::max(worst, (f.accel(back) - f.accel(s)).norm());
  }
  return worst;
}

/// Trapezoidal ∫ θ̇ dt along the trajectory.
inline double action_integral(const Metric& m, const Trajectory& tr) {
  if (tr.size() < 2) return 0.0;
  double sum = 0.0;
  double prev = liouville(m, tr.states.front()).theta_dot;
  for (std::size_t k = 1; k < tr.size(); ++k) {
    const double cur = liouville(m, tr.states[k]).theta_dot;
    sum += 0.5 * (prev + cur) * (tr.times[k] - tr.times[k - 1]);
    prev = cur;
  }
  return sum;
}

/// A curve sampled at uniform parameter spacing `ds`, with its parameter derivative.
struct PathSamples {
  std::vector<Vec> points;
  std::vector<Vec> tangents;
  double ds = 0.0;
};

/// ∫θ over the curve when it is traversed on the energy surface H = E:
/// ∫ sqrt(2(E − U)) ‖q'(s)‖ ds, composite Simpson (needs an even number of intervals).
inline double abbreviated_action(const Metric& m, const Expr& U, double E, const PathSamples& path) {
  const std::size_t intervals = path.points.size() - 1;
  if (path.points.size() < 3 || intervals % 2 != 0 || path.tangents.size() != path.points.size())
    throw PreconditionError("Simpson rule needs an even number of intervals");
  double sum = 0.0;
  for (std::size_t k = 0; k <= intervals; ++k) {
    const MetricEval me = metric_eval(m, path.points[k]);
    const double speed2 = path.tangents[k].dot(me.g * path.tangents[k]);
    const double kin = 2.0 * (E - eval_at(U, path.points[k]));
    if (speed2 < 0.0 || kin < 0.0) throw DomainError("path leaves the energy-accessible region");
    const double w = (k == 0 || k == intervals) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
    sum += w * std::sqrt(kin * speed2);
  }
  return sum * path.ds / 3.0;
}

}  // namespace geomech
