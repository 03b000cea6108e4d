#pragma once

// Residual evaluators for the wave identities attached to a phase S:
// Hamilton-Jacobi, Schrödinger for e^{iS}, its magnetic (Klein-Gordon) version,
// the conservation condition for a density ρ and the complex-amplitude case.
// Complex functions are (re, im) pairs of real expressions.

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "geomech/constraints.hpp"
#include "geomech/dynamics.hpp"
#include "geomech/errors.hpp"
#include "geomech/expr.hpp"
#include "geomech/geometry.hpp"

namespace geomech {

using Complex = std::complex<double>;

struct ComplexExpr {
  Expr re;
  Expr im;

  Complex eval(const Vec& x) const { return {eval_at(re, x), eval_at(im, x)}; }
};

inline ComplexExpr operator+(const ComplexExpr& a, const ComplexExpr& b) { return {a.re + b.re, a.im + b.im}; }
inline ComplexExpr operator-(const ComplexExpr& a, const ComplexExpr& b) { return {a.re - b.re, a.im - b.im}; }
inline ComplexExpr operator*(const ComplexExpr& a, const ComplexExpr& b) {
  return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}
inline ComplexExpr operator*(const Expr& s, const ComplexExpr& a) { return {s * a.re, s * a.im}; }

/// e^{iS}.
inline ComplexExpr phase(const Expr& S) { return {cos(S), sin(S)}; }

inline ComplexExpr laplacian_expr(const Metric& m, const ComplexExpr& f) {
  return {laplacian_expr(m, f.re), laplacian_expr(m, f.im)};
}

/// The derivation A(f) = A^i ∂_i f.
inline ComplexExpr derivation(const VectorFieldOnM& A, const ComplexExpr& f) {
  ComplexExpr out{Expr(0.0), Expr(0.0)};
  for (std::size_t i = 0; i < A.dim(); ++i) {
    if (A.u[i].is_zero()) continue;
    out.re += A.u[i] * diff(f.re, Symbol::x(i));
    out.im += A.u[i] * diff(f.im, Symbol::x(i));
  }
  return out;
}

inline constexpr double kWavePassGate = 1e-8;
inline constexpr double kWaveFailGate = 1e-6;

/// H(grad S) = ½ g^{ij}∂_iS ∂_jS + U.
inline Expr hamiltonian_of_phase(const Metric& m, const Expr& U, const Expr& S) {
  const auto dS = partials(S, m.dim());
  Expr h(0.0);
  for (std::size_t i = 0; i < m.dim(); ++i)
    for (std::size_t j = 0; j < m.dim(); ++j) {
      const Expr& gij = m.inverse_entry(i, j);
      if (gij.is_zero() || dS[i].is_zero() || dS[j].is_zero()) continue;
      h += Expr(0.5) * gij * dS[i] * dS[j];
    }
  return h + U;
}

inline double hj_residual(const Metric& m, const Expr& U, const Expr& S, double E, const Vec& x) {
  detail::require_position_only(S, "phase");
  metric_eval(m, x);
  return eval_at(hamiltonian_of_phase(m, U, S), x) - E;
}

/// (−½Δ + U)Ψ minus [(1/2i)ΔS + H(grad S)]Ψ for Ψ = e^{iS}.
inline Complex schrodinger_identity_residual(const Metric& m, const Expr& U, const Expr& S, const Vec& x) {
  detail::require_position_only(S, "phase");
  metric_eval(m, x);
  const ComplexExpr psi = phase(S);
  const ComplexExpr lap = laplacian_expr(m, psi);
  const Complex psi_x = psi.eval(x);
  const Complex lhs = -0.5 * lap.eval(x) + eval_at(U, x) * psi_x;
  const double dS = eval_at(laplacian_expr(m, S), x);
  const double h = eval_at(hamiltonian_of_phase(m, U, S), x);
  const Complex rhs = (Complex(0.0, -0.5) * dS + h) * psi_x;
  return lhs - rhs;
}

struct ThreeWayReport {
  std::array<std::string, 3> names;
  std::array<double, 3> residual{};
  std::array<bool, 3> pass{};
  std::array<bool, 3> fail{};
  bool hypothesis_checked = false;  // only reports with a hypothesis gate
  bool hypothesis_ok = true;
  double hypothesis_residual = 0.0;
  bool violation = false;
  double pass_gate = kWavePassGate;
  double fail_gate = kWaveFailGate;
};

namespace detail {

inline void finish(ThreeWayReport& r) {
  int passing = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    r.pass[k] = r.residual[k] < r.pass_gate;
    r.fail[k] = r.residual[k] > r.fail_gate;
    passing += r.pass[k] ? 1 : 0;
  }
  r.violation = false;
  if (r.hypothesis_ok && passing == 2)
    for (std::size_t k = 0; k < 3; ++k)
      if (!r.pass[k] && r.fail[k]) r.violation = true;
}

}  // namespace detail

/// A: H(grad S) = E, B: ΔS = 0, C: (−½Δ + U)Ψ = EΨ for Ψ = e^{iS}.
inline ThreeWayReport three_way_check(const Metric& m, const Expr& U, const Expr& S, double E,
                                      const std::vector<Vec>& points) {
  detail::require_position_only(S, "phase");
  const Expr h = hamiltonian_of_phase(m, U, S);
  const Expr lapS = laplacian_expr(m, S);
  const ComplexExpr psi = phase(S);
  const ComplexExpr lap = laplacian_expr(m, psi);
  ThreeWayReport r;
  r.names = {"hamilton_jacobi", "harmonic", "schrodinger"};
  for (const auto& x : points) {
    metric_eval(m, x);
    r.residual[0] = std::max(r.residual[0], std::abs(eval_at(h, x) - E));
    r.residual[1] = std::max(r.residual[1], std::abs(eval_at(lapS, x)));
    const Complex c = -0.5 * lap.eval(x) + (eval_at(U, x) - E) * psi.eval(x);
    r.residual[2] = std::max(r.residual[2], std::abs(c));
  }
  detail::finish(r);
  return r;
}

/// ½‖grad S − A‖² − ½m².
inline double hj_lorentz_residual(const Metric& m, const VectorPotential& A, const Expr& S, double m_const,
                                  const Vec& x) {
  detail::require_position_only(S, "phase");
  const auto gS = grad_expr(m, S);
  std::vector<Expr> u;
  for (std::size_t i = 0; i < m.dim(); ++i) u.push_back(gS[i] - A.u.at(i));
  metric_eval(m, x);
  return 0.5 * eval_at(inner_expr(m, u, u), x) - 0.5 * m_const * m_const;
}

namespace detail {

struct KgParts {
  ComplexExpr psi;
  ComplexExpr lap;
  ComplexExpr a_psi;
  Expr norm_A;
  Expr norm_u;
  Expr div_total;
};

inline KgParts kg_parts(const Metric& m, const VectorPotential& A, const Expr& S) {
  require_position_only(S, "phase");
  if (A.dim() != m.dim()) throw PreconditionError("vector potential dimension does not match metric");
  KgParts p;
  p.psi = phase(S);
  p.lap = laplacian_expr(m, p.psi);
  p.a_psi = derivation(A, p.psi);
  const auto gS = grad_expr(m, S);
  std::vector<Expr> u;
  for (std::size_t i = 0; i < m.dim(); ++i) u.push_back(gS[i] - A.u[i]);
  p.norm_A = inner_expr(m, A.u, A.u);
  p.norm_u = inner_expr(m, u, u);
  std::vector<Expr> total;
  for (std::size_t i = 0; i < m.dim(); ++i) total.push_back(u[i] + A.u[i]);
  p.div_total = divergence_expr(m, total);
  return p;
}

}  // namespace detail

/// [Δ − 2iA − ‖A‖² + ‖u‖² − i div(u+A)]Ψ with u = grad S − A, Ψ = e^{iS}.
inline Complex kg_identity_residual(const Metric& m, const VectorPotential& A, const Expr& S, const Vec& x) {
  const auto p = detail::kg_parts(m, A, S);
  metric_eval(m, x);
  const Complex psi = p.psi.eval(x);
  const Complex i(0.0, 1.0);
  return p.lap.eval(x) - 2.0 * i * p.a_psi.eval(x) +
         (eval_at(p.norm_u, x) - eval_at(p.norm_A, x) - i * eval_at(p.div_total, x)) * psi;
}

/// A: ½‖grad S − A‖² = ½m², B: ΔS = 0, C: (Δ − 2iA − ‖A‖² + m²)Ψ = 0.
inline ThreeWayReport kg_three_way_check(const Metric& m, const VectorPotential& A, const Expr& S, double m_const,
                                         const std::vector<Vec>& points) {
  const auto p = detail::kg_parts(m, A, S);
  const Expr lapS = laplacian_expr(m, S);
  const Complex i(0.0, 1.0);
  ThreeWayReport r;
  r.names = {"hamilton_jacobi_lorentz", "harmonic", "klein_gordon"};
  for (const auto& x : points) {
    metric_eval(m, x);
    r.residual[0] = std::max(r.residual[0], std::abs(0.5 * eval_at(p.norm_u, x) - 0.5 * m_const * m_const));
    r.residual[1] = std::max(r.residual[1], std::abs(eval_at(lapS, x)));
    const Complex c = p.lap.eval(x) - 2.0 * i * p.a_psi.eval(x) +
                      (m_const * m_const - eval_at(p.norm_A, x)) * p.psi.eval(x);
    r.residual[2] = std::max(r.residual[2], std::abs(c));
  }
  detail::finish(r);
  return r;
}

namespace detail {

inline void require_positive_density(const Expr& rho, const Vec& x) {
  const double value = eval_at(rho, x);
  if (!(value > 0.0)) throw DomainError("density must be positive, got " + std::to_string(value));
}

}  // namespace detail

/// T₂(grad S, grad ρ)/ρ + ΔS.
inline double conservation_residual(const Metric& m, const Expr& S, const Expr& rho, const Vec& x) {
  detail::require_position_only(S, "phase");
  detail::require_position_only(rho, "density");
  detail::require_positive_density(rho, x);
  metric_eval(m, x);
  const Expr flux = inner_expr(m, grad_expr(m, S), grad_expr(m, rho));
  return eval_at(flux, x) / eval_at(rho, x) + eval_at(laplacian_expr(m, S), x);
}

/// (−½Δ + U)Φ minus (H − Δ√ρ/(2√ρ))Φ for Φ = √ρ e^{iS}; vanishes when the conservation condition holds.
inline Complex sqrt_rho_identity_residual(const Metric& m, const Expr& U, const Expr& S, const Expr& rho,
                                          const Vec& x) {
  detail::require_positive_density(rho, x);
  metric_eval(m, x);
  const Expr a = sqrt(rho);
  const ComplexExpr phi = a * phase(S);
  const Complex phi_x = phi.eval(x);
  const Complex lhs = -0.5 * laplacian_expr(m, phi).eval(x) + eval_at(U, x) * phi_x;
  const double h = eval_at(hamiltonian_of_phase(m, U, S), x);
  const double quantum = eval_at(laplacian_expr(m, a), x) / (2.0 * eval_at(a, x));
  return lhs - (h - quantum) * phi_x;
}

/// Hypothesis: conservation condition. A: H = E, B: Δ√ρ = 0, C: (−½Δ + U)Φ = EΦ, Φ = √ρ e^{iS}.
inline ThreeWayReport sqrt_rho_three_way(const Metric& m, const Expr& U, const Expr& S, const Expr& rho, double E,
                                         const std::vector<Vec>& points) {
  detail::require_position_only(S, "phase");
  detail::require_position_only(rho, "density");
  const Expr h = hamiltonian_of_phase(m, U, S);
  const Expr a = sqrt(rho);
  const Expr lap_a = laplacian_expr(m, a);
  const ComplexExpr phi = a * phase(S);
  const ComplexExpr lap_phi = laplacian_expr(m, phi);
  ThreeWayReport r;
  r.names = {"hamilton_jacobi", "sqrt_rho_harmonic", "schrodinger"};
  r.hypothesis_checked = true;
  for (const auto& x : points) {
    r.hypothesis_residual = std::max(r.hypothesis_residual, std::abs(conservation_residual(m, S, rho, x)));
    r.residual[0] = std::max(r.residual[0], std::abs(eval_at(h, x) - E));
    r.residual[1] = std::max(r.residual[1], std::abs(eval_at(lap_a, x)));
    const Complex c = -0.5 * lap_phi.eval(x) + (eval_at(U, x) - E) * phi.eval(x);
    r.residual[2] = std::max(r.residual[2], std::abs(c));
  }
  r.hypothesis_ok = r.hypothesis_residual < kWavePassGate;
  detail::finish(r);
  return r;
}

namespace detail {

struct AmplitudeParts {
  ComplexExpr phi;
  ComplexExpr lap_phi;
  ComplexExpr b;  // div(a² grad S) − i a Δa
};

inline AmplitudeParts amplitude_parts(const Metric& m, const Expr& S, const ComplexExpr& a) {
  require_position_only(S, "phase");
  require_position_only(a.re, "amplitude");
  require_position_only(a.im, "amplitude");
  AmplitudeParts p;
  p.phi = a * phase(S);
  p.lap_phi = laplacian_expr(m, p.phi);
  const ComplexExpr a2 = a * a;
  const auto gS = grad_expr(m, S);
  std::vector<Expr> flux_re, flux_im;
  for (const auto& g : gS) {
    flux_re.push_back(a2.re * g);
    flux_im.push_back(a2.im * g);
  }
  const ComplexExpr lap_a = laplacian_expr(m, a);
  const ComplexExpr ia_lap = ComplexExpr{Expr(0.0), Expr(1.0)} * (a * lap_a);
  p.b = ComplexExpr{divergence_expr(m, flux_re), divergence_expr(m, flux_im)} - ia_lap;
  return p;
}

}  // namespace detail

/// A: H = E, B: div(a² grad S) = i a Δa, C: (−½Δ + U)Φ = EΦ for Φ = a e^{iS}.
inline ThreeWayReport complex_amplitude_three_way(const Metric& m, const Expr& U, const Expr& S, const Expr& a_re,
                                                  const Expr& a_im, double E, const std::vector<Vec>& points) {
  const auto p = detail::amplitude_parts(m, S, {a_re, a_im});
  const Expr h = hamiltonian_of_phase(m, U, S);
  ThreeWayReport r;
  r.names = {"hamilton_jacobi", "amplitude_equation", "schrodinger"};
  for (const auto& x : points) {
    metric_eval(m, x);
    r.residual[0] = std::max(r.residual[0], std::abs(eval_at(h, x) - E));
    r.residual[1] = std::max(r.residual[1], std::abs(p.b.eval(x)));
    const Complex c = -0.5 * p.lap_phi.eval(x) + (eval_at(U, x) - E) * p.phi.eval(x);
    r.residual[2] = std::max(r.residual[2], std::abs(c));
  }
  detail::finish(r);
  return r;
}

/// e^{−iS}(−½Δ + U − E)Φ minus [a(H − E) − i B/(2a)], B the amplitude-equation residual.
/// Vanishes for every (S, a) with a ≠ 0.
inline Complex complex_amplitude_identity_residual(const Metric& m, const Expr& U, const Expr& S, const Expr& a_re,
                                                   const Expr& a_im, double E, const Vec& x) {
  const ComplexExpr a{a_re, a_im};
  const auto p = detail::amplitude_parts(m, S, a);
  metric_eval(m, x);
  const Complex ax = a.eval(x);
  if (std::abs(ax) == 0.0) throw DomainError("amplitude vanishes");
  const Complex c = -0.5 * p.lap_phi.eval(x) + (eval_at(U, x) - E) * p.phi.eval(x);
  const double s = eval_at(S, x);
  const Complex reduced = c * Complex(std::cos(s), -std::sin(s));
  const double h = eval_at(hamiltonian_of_phase(m, U, S), x);
  const Complex i(0.0, 1.0);
  return reduced - (ax * (h - E) - i * p.b.eval(x) / (2.0 * ax));
}

struct TimeSchrodingerResult {
  Complex residual;
  bool hypotheses_hold = false;
  double harmonicity = 0.0;  // |ΔW| in the full metric
  std::string note;
};

/// (−½Δ′ + U − g₀₀/2)Φ − i ∂Φ/∂x⁰ for Φ = e^{iW}, Δ′ the Laplacian of the spatial block.
/// The residual is always computed; `hypotheses_hold` reports the block and harmonicity gates.
inline TimeSchrodingerResult schrodinger_time_residual(const Metric& m, const Expr& U, const Expr& W, const Vec& x,
                                                       std::size_t i0) {
  detail::require_position_only(W, "action");
  detail::require_position_only(U, "potential");
  const std::size_t n = m.dim();
  TimeSchrodingerResult out;
  try {
    check_block_form(m, i0);
    if (!diff(U, Symbol::x(i0)).is_zero()) throw PreconditionError("potential depends on the time coordinate");
    out.hypotheses_hold = true;
  } catch (const PreconditionError& e) {
    out.note = e.what();
  }

  const auto perm = move_to_last(n, i0);
  const Metric spatial = drop_coordinate(m, i0);
  const Expr Wp = permute_symbols(W, perm);
  const Expr Up = permute_symbols(U, perm);
  const Expr g00 = permute_symbols(m.entry(i0, i0), perm);
  Vec xp(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) xp[static_cast<Eigen::Index>(perm[i])] = x[static_cast<Eigen::Index>(i)];

  const ComplexExpr phi = phase(Wp);
  const ComplexExpr lap = laplacian_expr(spatial, phi);
  const ComplexExpr dt{diff(phi.re, Symbol::x(n - 1)), diff(phi.im, Symbol::x(n - 1))};
  metric_eval(spatial, xp);
  const Complex i(0.0, 1.0);
  out.residual = -0.5 * lap.eval(xp) + (eval_at(Up, xp) - 0.5 * eval_at(g00, xp)) * phi.eval(xp) - i * dt.eval(xp);

  out.harmonicity = std::abs(laplacian(m, W, x));
  if (out.hypotheses_hold && out.harmonicity >= kWavePassGate) {
    out.hypotheses_hold = false;
    out.note = "action is not harmonic";
  }
  return out;
}

}  // namespace geomech
