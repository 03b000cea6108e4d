#pragma once

// Contact-system membership of force forms, Lorentz forces of 2-forms, vector
// potentials and the Maxwell current J = grad δF.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "geomech/dynamics.hpp"
#include "geomech/errors.hpp"
#include "geomech/expr.hpp"
#include "geomech/geometry.hpp"

namespace geomech {

/// Antisymmetric F_ij with only i < j stored.
class TwoForm {
 public:
  TwoForm() = default;
  explicit TwoForm(std::size_t n) : n_(n), upper_(n * (n - 1) / 2, Expr(0.0)) {
    if (n == 0) throw PreconditionError("two-form dimension must be at least 1");
  }
  /// `strict_upper` holds F_ij for i < j in row-major order.
  TwoForm(std::size_t n, std::vector<Expr> strict_upper) : TwoForm(n) {
    if (strict_upper.size() != upper_.size()) throw PreconditionError("two-form upper triangle has wrong size");
    for (std::size_t k = 0; k < upper_.size(); ++k) {
      detail::require_position_only(strict_upper[k], "two-form entry");
      upper_[k] = std::move(strict_upper[k]);
    }
  }

  static TwoForm zero(std::size_t n) { return TwoForm(n); }

  std::size_t dim() const { return n_; }

  Expr operator()(std::size_t i, std::size_t j) const {
    if (i == j) return Expr(0.0);
    if (i < j) return upper_[index(i, j)];
    return -upper_[index(j, i)];
  }

  void set(std::size_t i, std::size_t j, Expr e) {
    if (i == j) throw PreconditionError("diagonal of a two-form is zero");
    detail::require_position_only(e, "two-form entry");
    if (i < j) upper_[index(i, j)] = std::move(e);
    else upper_[index(j, i)] = -e;
  }

  double eval(std::size_t i, std::size_t j, const Vec& x) const { return eval_at((*this)(i, j), x); }

 private:
  std::size_t index(std::size_t i, std::size_t j) const { return i * n_ - i * (i + 1) / 2 + (j - i - 1); }

  std::size_t n_ = 0;
  std::vector<Expr> upper_;
};

inline constexpr double kContactGate = 1e-10;

/// max over states of |α̇| = |A_i(x, ẋ) ẋ^i|.
inline double contact_membership_residual(const ForceForm& alpha, const std::vector<State>& states) {
  if (states.empty()) throw PreconditionError("contact membership needs at least one state");
  double worst = 0.0;
  for (const auto& s : states) {
    double sum = 0.0;
    for (std::size_t i = 0; i < alpha.dim(); ++i) sum += eval_at(alpha.A[i], s) * s.xdot[static_cast<Eigen::Index>(i)];
    worst = std::max(worst, std::abs(sum));
  }
  return worst;
}

/// max over states of |Dθ̇|.
inline double relativistic_residual(const SecondOrderField& f, const std::vector<State>& states) {
  const AlongField rate(theta_dot_expr(f.metric()), f.dim());
  double worst = 0.0;
  for (const auto& s : states) worst = std::max(worst, std::abs(rate(s, f.accel(s))));
  return worst;
}

/// α = i_ḋF: A_j = ẋ^i F_ij.
inline ForceForm lorentz_force_form(const TwoForm& F) {
  const std::size_t n = F.dim();
  ForceForm alpha{std::vector<Expr>(n, Expr(0.0))};
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i)
      if (i != j) alpha.A[j] += Expr::vel(i) * F(i, j);
  return alpha;
}

/// Components (dF)_{ijk} = ∂_iF_jk + ∂_jF_ki + ∂_kF_ij for i < j < k.
inline std::vector<Expr> exterior_derivative(const TwoForm& F) {
  const std::size_t n = F.dim();
  std::vector<Expr> out;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      for (std::size_t k = j + 1; k < n; ++k)
        out.push_back(diff(F(j, k), Symbol::x(i)) + diff(F(k, i), Symbol::x(j)) + diff(F(i, j), Symbol::x(k)));
  return out;
}

inline double closedness_residual(const TwoForm& F, const std::vector<Vec>& points) {
  const auto dF = exterior_derivative(F);
  double worst = 0.0;
  for (const auto& e : dF) {
    if (e.is_zero()) continue;
    for (const auto& x : points) worst = std::max(worst, std::abs(eval_at(e, x)));
  }
  return worst;
}

inline constexpr double kClosednessGate = 1e-10;

/// d(i_A T₂): F_ik = ∂_iA_k − ∂_kA_i with A_k = g_kj A^j.
inline TwoForm potential_two_form(const Metric& m, const VectorPotential& A) {
  const std::size_t n = m.dim();
  if (A.dim() != n) throw PreconditionError("vector potential dimension does not match metric");
  const auto low = lower(m, A.u);
  TwoForm F(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = i + 1; k < n; ++k) F.set(i, k, diff(low[k], Symbol::x(i)) - diff(low[i], Symbol::x(k)));
  return F;
}

inline double potential_residual(const Metric& m, const VectorPotential& A, const TwoForm& F,
                                 const std::vector<Vec>& points) {
  if (F.dim() != m.dim()) throw PreconditionError("two-form dimension does not match metric");
  const TwoForm dA = potential_two_form(m, A);
  double worst = 0.0;
  for (std::size_t i = 0; i < m.dim(); ++i)
    for (std::size_t k = i + 1; k < m.dim(); ++k) {
      const Expr diffe = dA(i, k) - F(i, k);
      if (diffe.is_zero()) continue;
      for (const auto& x : points) worst = std::max(worst, std::abs(eval_at(diffe, x)));
    }
  return worst;
}

/// J^j = (δF)^j = −sign·|g|^{-1/2} ∂_i(|g|^{1/2} F^{ij}), F^{ij} = g^{il}g^{jm}F_lm.
/// Both indices are raised before the divergence; with a mixed index the Christoffel
/// term would not cancel on a curved metric. Closedness of F is not checked here.
inline VectorFieldOnM maxwell_current_unchecked(const Metric& m, const TwoForm& F, int codiff_sign = 1) {
  const std::size_t n = m.dim();
  if (F.dim() != n) throw PreconditionError("two-form dimension does not match metric");
  if (codiff_sign != 1 && codiff_sign != -1) throw PreconditionError("codiff_sign must be +1 or -1");
  std::vector<std::vector<Expr>> mixed(n, std::vector<Expr>(n, Expr(0.0)));  // g^{il}F_lm
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t mm = 0; mm < n; ++mm)
      for (std::size_t l = 0; l < n; ++l)
        if (l != mm) mixed[i][mm] += m.inverse_entry(i, l) * F(l, mm);
  std::vector<Expr> J(n, Expr(0.0));
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<Expr> column(n, Expr(0.0));  // F^{ij}
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t mm = 0; mm < n; ++mm) column[i] += m.inverse_entry(j, mm) * mixed[i][mm];
    J[j] = Expr(-static_cast<double>(codiff_sign)) * divergence_expr(m, column);
  }
  return VectorFieldOnM(std::move(J));
}

/// As above, after checking dF = 0 at `points`.
inline VectorFieldOnM maxwell_current(const Metric& m, const TwoForm& F, const std::vector<Vec>& points,
                                      int codiff_sign = 1) {
  const double closed = closedness_residual(F, points);
  if (closed > kClosednessGate)
    throw PreconditionError("two-form is not closed: |dF| = " + std::to_string(closed));
  return maxwell_current_unchecked(m, F, codiff_sign);
}

inline constexpr double kPotentialGate = 1e-8;

/// max |∂_i(u+A)_k − ∂_k(u+A)_i|, lowered components.
inline double omega_F_lagrangian_residual(const Metric& m, const TwoForm& F, const VectorFieldOnM& u,
                                          const VectorPotential& A, const std::vector<Vec>& points) {
  if (potential_residual(m, A, F, points) >= kPotentialGate)
    throw PreconditionError("A is not a vector potential of F");
  std::vector<Expr> sum(m.dim());
  for (std::size_t i = 0; i < m.dim(); ++i) sum[i] = u.u.at(i) + A.u.at(i);
  return potential_residual(m, VectorFieldOnM(std::move(sum)), TwoForm::zero(m.dim()), points);
}

struct MaxwellReport {
  double closedness = 0.0;
  double minus_J_potential = 0.0;   // (a) and the ω_F-lagrangian condition
  double norm2_stddev = 0.0;        // (b)
  double norm2_mean = 0.0;
  double intermediate = 0.0;        // (c): J against the Lorentz field
  double div_J = 0.0;
  bool closed = false;
  bool pass_a = false;
  bool pass_b = false;
  bool pass_c = false;
  bool implication_checked = false;
  bool violation = false;
  int codiff_sign = 1;
};

inline constexpr double kMaxwellGate = 1e-8;

/// J is ω_F-lagrangian exactly when −J is a potential of F, so (a) doubles as that hypothesis.
inline MaxwellReport maxwell_theorem_check(const Metric& m, const TwoForm& F, const std::vector<Vec>& points,
                                           int codiff_sign = 1) {
  if (points.empty()) throw PreconditionError("maxwell check needs sample points");
  MaxwellReport r;
  r.codiff_sign = codiff_sign;
  r.closedness = closedness_residual(F, points);
  r.closed = r.closedness <= kClosednessGate;

  const VectorFieldOnM J = maxwell_current_unchecked(m, F, codiff_sign);
  std::vector<Expr> minus;
  for (const auto& c : J.u) minus.push_back(-c);
  r.minus_J_potential = potential_residual(m, VectorFieldOnM(minus), F, points);

  const Expr norm2 = inner_expr(m, J.u, J.u);
  const Expr divJ = divergence_expr(m, J.u);
  std::vector<double> values;
  for (const auto& x : points) {
    values.push_back(eval_at(norm2, x));
    r.div_J = std::max(r.div_J, std::abs(eval_at(divJ, x)));
  }
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  r.norm2_mean = mean;
  r.norm2_stddev = std::sqrt(var / static_cast<double>(values.size()));

  r.intermediate = intermediate_residual_max(m, lorentz_force_form(F), J, points);

  r.pass_a = r.minus_J_potential < kMaxwellGate;
  r.pass_b = r.norm2_stddev < 1e-6 * (1.0 + std::abs(mean));
  r.pass_c = r.intermediate < kMaxwellGate;
  r.implication_checked = r.closed && r.pass_a && r.pass_c;
  r.violation = r.implication_checked && !r.pass_b;
  return r;
}

}  // namespace geomech
