#pragma once

// Time constraints τ̇ = const: the modified field, the reductions of a block
// metric g₀₀(dx⁰)² + g_{μν}dx^μdx^ν to a conservative system on the spatial
// coordinates, the modified Liouville form and the HJ-with-time residual.

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "geomech/dynamics.hpp"
#include "geomech/errors.hpp"
#include "geomech/expr.hpp"
#include "geomech/geometry.hpp"
#include "geomech/sampling.hpp"

namespace geomech {

inline SecondOrderField constrained_field(const SecondOrderField& f, const TimeConstraint& tc) {
  if (f.constraint()) throw PreconditionError("field already carries a time constraint");
  return SecondOrderField(f.metric(), f.force(), tc);
}

/// Max over states of ‖ẍ̄₁ − ẍ̄₂‖ where ẍ̄₁ comes from the constrained field and ẍ̄₂
/// rebuilds Dτ̇ from the split ⟨τ, D^∇⟩ + ẋ^iẋ^j ∇_i τ_j.
inline double campotiempo2_crosscheck(const SecondOrderField& f, const std::vector<Expr>& tau,
                                      const std::vector<State>& states) {
  if (tau.size() != f.dim()) throw PreconditionError("covector has wrong number of components");
  for (const auto& t : tau) detail::require_position_only(t, "time-constraint covector");
  const std::size_t n = f.dim();
  const SecondOrderField bar = constrained_field(f, TimeConstraint::general(tau));

  std::vector<std::vector<Expr>> dtau(n);
  for (std::size_t i = 0; i < n; ++i) dtau[i] = partials(tau[i], n);

  double worst = 0.0;
  for (const auto& s : states) {
    const MetricEval me = metric_eval(f.metric(), s.x);
    const Christoffel gamma(me);
    Vec t(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) t[static_cast<Eigen::Index>(i)] = eval_at(tau[i], s);
    const Vec grad_tau = me.g_inv * t;
    const double norm2 = t.dot(grad_tau);
    if (!(std::abs(norm2) > kNullConstraint)) throw NullConstraintError("null covector in crosscheck");

    const Vec force_part = f.unconstrained_accel(s) - f.geodesic_accel(s);
    double second = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        double nabla = eval_at(dtau[j][i], s);  // ∂_i τ_j
        for (std::size_t k = 0; k < n; ++k) nabla -= gamma.second_kind(me, k, i, j) * t[static_cast<Eigen::Index>(k)];
        second += s.xdot[static_cast<Eigen::Index>(i)] * s.xdot[static_cast<Eigen::Index>(j)] * nabla;
      }
    }
    const double rate = t.dot(force_part) + second;
    const Vec route2 = f.unconstrained_accel(s) - (rate / norm2) * grad_tau;
    worst = std::max(worst, (bar.accel(s) - route2).norm());
  }
  return worst;
}

struct ReducedSystem {
  enum class Provenance { geodesic_projection, time_constraint };

  Metric metric;
  Expr potential;
  Provenance provenance;
  double E0 = 0.0;
  double c = 1.0;
  std::size_t time_index = 0;
};

inline const char* to_string(ReducedSystem::Provenance p) {
  return p == ReducedSystem::Provenance::geodesic_projection ? "geodesic_projection" : "time_constraint";
}

namespace detail {

inline std::string entry_name(std::size_t i, std::size_t j) {
  return "g" + std::to_string(i + 1) + std::to_string(j + 1);
}

}  // namespace detail

/// Throws PreconditionError unless g_{0μ} is structurally zero and no entry depends on x^{i0}.
/// The x^{i0}-derivatives are evaluated at 50 quasi-random points of `box` (default [0.5, 2]^n).
inline void check_block_form(const Metric& m, std::size_t i0, const std::optional<SampleBox>& box = std::nullopt) {
  const std::size_t n = m.dim();
  if (i0 >= n) throw PreconditionError("time index outside chart");
  if (n < 2) throw PreconditionError("block form needs at least two coordinates");
  for (std::size_t j = 0; j < n; ++j)
    if (j != i0 && !m.entry(i0, j).is_zero())
      throw PreconditionError("block hypothesis violated: " + detail::entry_name(std::min(i0, j), std::max(i0, j)) +
                              " is not zero");
  SampleBox b = box.value_or(SampleBox::cube(n, 0.5, 2.0, 50));
  b.count = 50;
  const auto points = sample_points(b, 7);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const Expr d = diff(m.entry(i, j), Symbol::x(i0));
      if (d.is_zero()) continue;
      for (const auto& x : points)
        if (std::abs(eval_at(d, x)) > 1e-12)
          throw PreconditionError("block hypothesis violated: " + detail::entry_name(i, j) + " depends on x" +
                                  std::to_string(i0 + 1));
    }
  }
}

/// g₀₀ rewritten in the reduced numbering (time coordinate moved last).
inline Expr reduced_g00(const Metric& m, std::size_t i0) {
  return permute_symbols(m.entry(i0, i0), move_to_last(m.dim(), i0));
}

/// Geodesics of the block metric with p₀ = g₀₀ẋ⁰ = E0/c project onto the conservative
/// system (g_{μν}, U = E0²/(2c²) g⁰⁰).
inline ReducedSystem project_geodesic(const Metric& m, std::size_t i0, double E0, double c = 1.0,
                                      const std::optional<SampleBox>& box = std::nullopt) {
  if (!(c > 0.0)) throw PreconditionError("c must be positive");
  check_block_form(m, i0, box);
  const Expr U = Expr(E0 * E0 / (2.0 * c * c)) / reduced_g00(m, i0);
  return {drop_coordinate(m, i0), U, ReducedSystem::Provenance::geodesic_projection, E0, c, i0};
}

/// The field constrained by τ = dx⁰ on ẋ⁰ = 1 reduces to (g_{μν}, U = −g₀₀/2).
inline ReducedSystem reduce_by_time_constraint(const Metric& m, std::size_t i0,
                                               const std::optional<SampleBox>& box = std::nullopt) {
  check_block_form(m, i0, box);
  const Expr U = Expr(-0.5) * reduced_g00(m, i0);
  return {drop_coordinate(m, i0), U, ReducedSystem::Provenance::time_constraint, 0.0, 1.0, i0};
}

/// E0 = g₀₀ẋ⁰c from an initial state.
inline double infer_E0(const Metric& m, const State& s, std::size_t i0, double c = 1.0) {
  const MetricEval me = metric_eval(m, s.x);
  const auto k = static_cast<Eigen::Index>(i0);
  return me.g(k, k) * s.xdot[k] * c;
}

/// Drops the coordinate i0 from a point or state, keeping the rest in order.
inline Vec drop_component(const Vec& x, std::size_t i0) {
  Vec out(x.size() - 1);
  for (Eigen::Index i = 0, j = 0; i < x.size(); ++i)
    if (static_cast<std::size_t>(i) != i0) out[j++] = x[i];
  return out;
}

inline State drop_component(const State& s, std::size_t i0) {
  return {drop_component(s.x, i0), drop_component(s.xdot, i0)};
}

inline SecondOrderField reduced_field(const ReducedSystem& r) {
  return newton_field(r.metric, ForceForm::exact(r.potential, r.metric.dim()));
}

struct ModifiedLiouville {
  Vec theta_bar;
  double residual = 0.0;
};

/// θ̄ = θ − H dx^{i0}/ẋ^{i0} and the norm of i_D̄ dθ̄ + (H/ẋ^{i0}) dẋ^{i0} on
/// D̄ = Newton field of dU constrained by dx^{i0}.
inline ModifiedLiouville modified_liouville(const Metric& m, const Expr& U, const State& s, std::size_t i0) {
  const std::size_t n = m.dim();
  if (i0 >= n) throw PreconditionError("time index outside chart");
  detail::require_position_only(U, "potential");
  const auto k0 = static_cast<Eigen::Index>(i0);
  if (!(std::abs(s.xdot[k0]) > 1e-10)) throw PreconditionError("vanishing time velocity");

  const Expr H = kinetic_expr(m) + U;
  const Expr H_over = H / Expr::vel(i0);
  auto theta_bar = theta_expr(m);
  theta_bar[i0] = theta_bar[i0] - H_over;

  const SecondOrderField bar = constrained_field(newton_field(m, ForceForm::exact(U, n)),
                                                 TimeConstraint::exact_differential(n, i0));
  const Vec accel = bar.accel(s);

  ModifiedLiouville out;
  out.theta_bar = Vec(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) out.theta_bar[static_cast<Eigen::Index>(i)] = eval_at(theta_bar[i], s);

  Vec r = Vec::Zero(static_cast<Eigen::Index>(2 * n));
  for (std::size_t k = 0; k < n; ++k) {
    double dx = AlongField(theta_bar[k], n)(s, accel);
    double dv = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double vi = s.xdot[static_cast<Eigen::Index>(i)];
      dx -= vi * eval_at(diff(theta_bar[i], Symbol::x(k)), s);
      dv -= vi * eval_at(diff(theta_bar[i], Symbol::v(k)), s);
    }
    if (k == i0) dv += eval_at(H_over, s);
    r[static_cast<Eigen::Index>(k)] = dx;
    r[static_cast<Eigen::Index>(n + k)] = dv;
  }
  out.residual = r.norm();
  return out;
}

/// ∂W/∂x⁰ + ½ g^{μν}∂_μW ∂_νW + U − ½g₀₀ at x, all in the full chart.
inline double hj_time_residual(const Metric& m, const Expr& U, const Expr& W, const Vec& x, std::size_t i0) {
  const std::size_t n = m.dim();
  if (i0 >= n) throw PreconditionError("time index outside chart");
  detail::require_position_only(W, "action");
  detail::require_position_only(U, "potential");
  const MetricEval me = metric_eval(m, x);
  const auto dW = partials(W, n);
  Vec p(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) p[static_cast<Eigen::Index>(i)] = eval_at(dW[i], x);
  double h = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != i0 && j != i0)
        h += 0.5 * me.g_inv(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) *
             p[static_cast<Eigen::Index>(i)] * p[static_cast<Eigen::Index>(j)];
  const auto k0 = static_cast<Eigen::Index>(i0);
  return p[k0] + h + eval_at(U, x) - 0.5 * me.g(k0, k0);
}

/// The field constrained by τ = θ, so that proper time is preserved.
inline SecondOrderField relativistic_correction(const SecondOrderField& f) {
  return constrained_field(f, TimeConstraint::liouville_theta(f.metric()));
}

}  // namespace geomech
