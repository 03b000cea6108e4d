#pragma once

// Metric calculus on a single coordinate chart.
//
// g is stored as its upper triangle of position-only expressions. Its first
// partials, symbolic determinant and symbolic inverse are built once at
// construction; numeric quantities at a point come from metric_eval().

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "geomech/errors.hpp"
#include "geomech/expr.hpp"

namespace geomech {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kDegenerateDet = 1e-12;

inline std::span<const double> as_span(const Vec& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

/// A point of the tangent bundle chart.
struct State {
  Vec x;
  Vec xdot;

  std::size_t dim() const { return static_cast<std::size_t>(x.size()); }
};

inline double eval_at(const Expr& e, const State& s) { return e.eval(as_span(s.x), as_span(s.xdot)); }
inline double eval_at(const Expr& e, const Vec& x) { return e.eval(as_span(x)); }

struct ChartSpec {
  std::size_t dim = 0;
  std::vector<std::string> coord_names;

  static ChartSpec make(std::size_t dim, std::vector<std::string> names = {}) {
    if (dim == 0) throw PreconditionError("chart dimension must be at least 1");
    if (names.empty())
      for (std::size_t i = 0; i < dim; ++i) names.push_back("x" + std::to_string(i + 1));
    if (names.size() != dim) throw PreconditionError("chart needs one name per coordinate");
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = i + 1; j < dim; ++j)
        if (names[i] == names[j]) throw PreconditionError("duplicate coordinate name '" + names[i] + "'");
    return {dim, std::move(names)};
  }
};

namespace detail {

inline std::size_t upper_index(std::size_t n, std::size_t i, std::size_t j) {
  if (i > j) std::swap(i, j);
  return i * n - i * (i + 1) / 2 + j;
}

// Laplace expansion along the first remaining row, skipping structural zeros.
inline Expr cofactor_det(const std::vector<std::vector<Expr>>& a, const std::vector<std::size_t>& rows,
                         const std::vector<std::size_t>& cols) {
  if (rows.size() == 1) return a[rows[0]][cols[0]];
  const std::vector<std::size_t> sub_rows(rows.begin() + 1, rows.end());
  Expr sum(0.0);
  for (std::size_t c = 0; c < cols.size(); ++c) {
    const Expr& entry = a[rows[0]][cols[c]];
    if (entry.is_zero()) continue;
    std::vector<std::size_t> sub_cols;
    for (std::size_t k = 0; k < cols.size(); ++k)
      if (k != c) sub_cols.push_back(cols[k]);
    const Expr term = entry * cofactor_det(a, sub_rows, sub_cols);
    sum = c % 2 == 0 ? sum + term : sum - term;
  }
  return sum;
}

}  // namespace detail

class Metric {
 public:
  /// `upper` holds g_ij for i <= j in row-major order, n(n+1)/2 entries.
  Metric(std::size_t n, std::vector<Expr> upper) {
    if (n == 0) throw PreconditionError("metric dimension must be at least 1");
    if (upper.size() != n * (n + 1) / 2) throw PreconditionError("metric upper triangle has wrong size");
    for (const auto& e : upper) {
      if (e.depends_on_velocity()) throw PreconditionError("metric coefficients must be position-only");
      if (e.symbol_bound() > n) throw PreconditionError("metric coefficient references a symbol beyond the chart");
    }
    auto d = std::make_shared<Data>();
    d->n = n;
    d->g = std::move(upper);
    build(*d);
    data_ = std::move(d);
  }

  static Metric diagonal(std::vector<Expr> diag) {
    const std::size_t n = diag.size();
    std::vector<Expr> upper(n * (n + 1) / 2, Expr(0.0));
    for (std::size_t i = 0; i < n; ++i) upper[detail::upper_index(n, i, i)] = diag[i];
    return Metric(n, std::move(upper));
  }

  static Metric euclidean(std::size_t n) { return diagonal(std::vector<Expr>(n, Expr(1.0))); }

  /// Builds from a full matrix; the lower triangle is ignored.
  static Metric from_upper(const std::vector<std::vector<Expr>>& rows) {
    const std::size_t n = rows.size();
    std::vector<Expr> upper;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) upper.push_back(rows[i].at(j));
    return Metric(n, std::move(upper));
  }

  std::size_t dim() const { return data_->n; }
  const Expr& entry(std::size_t i, std::size_t j) const { return data_->g[detail::upper_index(data_->n, i, j)]; }
  /// ∂_k g_ij.
  const Expr& d_entry(std::size_t k, std::size_t i, std::size_t j) const {
    return data_->dg[k * data_->g.size() + detail::upper_index(data_->n, i, j)];
  }
  const Expr& det_expr() const { return data_->det; }
  /// ∂_k det g.
  const Expr& d_det(std::size_t k) const { return data_->ddet[k]; }
  /// g^ij as an expression.
  const Expr& inverse_entry(std::size_t i, std::size_t j) const { return data_->inv[i * data_->n + j]; }
  bool is_diagonal() const { return data_->diagonal; }

 private:
  struct Data {
    std::size_t n = 0;
    bool diagonal = true;
    std::vector<Expr> g;
    std::vector<Expr> dg;
    Expr det;
    std::vector<Expr> ddet;
    std::vector<Expr> inv;
  };

  static void build(Data& d) {
    const std::size_t n = d.n;
    for (std::size_t k = 0; k < n; ++k)
      for (const auto& e : d.g) d.dg.push_back(diff(e, Symbol::x(k)));

    std::vector<std::vector<Expr>> full(n, std::vector<Expr>(n));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        full[i][j] = d.g[detail::upper_index(n, i, j)];
        if (i != j && !full[i][j].is_zero()) d.diagonal = false;
      }

    d.inv.assign(n * n, Expr(0.0));
    if (d.diagonal) {
      d.det = Expr(1.0);
      for (std::size_t i = 0; i < n; ++i) {
        d.det = d.det * full[i][i];
        d.inv[i * n + i] = Expr(1.0) / full[i][i];
      }
    } else {
      std::vector<std::size_t> all(n);
      for (std::size_t i = 0; i < n; ++i) all[i] = i;
      d.det = detail::cofactor_det(full, all, all);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          // g^ij = (-1)^(i+j) M_ji / det, M_ji the minor without row j, column i.
          std::vector<std::size_t> rows, cols;
          for (std::size_t k = 0; k < n; ++k) {
            if (k != j) rows.push_back(k);
            if (k != i) cols.push_back(k);
          }
          Expr minor = n == 1 ? Expr(1.0) : detail::cofactor_det(full, rows, cols);
          if ((i + j) % 2 == 1) minor = -minor;
          d.inv[i * n + j] = minor / d.det;
        }
    }
    for (std::size_t k = 0; k < n; ++k) d.ddet.push_back(diff(d.det, Symbol::x(k)));
  }

  std::shared_ptr<const Data> data_;
};

/// Metric data evaluated at one point.
struct MetricEval {
  Vec x;
  Mat g;
  Mat g_inv;
  std::vector<double> dg_data;  // [k][i][j]
  double det = 0.0;
  double sqrt_abs_det = 0.0;

  std::size_t dim() const { return static_cast<std::size_t>(g.rows()); }
  double dg(std::size_t k, std::size_t i, std::size_t j) const {
    const std::size_t n = dim();
    return dg_data[(k * n + i) * n + j];
  }
};

inline MetricEval metric_eval(const Metric& m, const Vec& x) {
  const std::size_t n = m.dim();
  if (static_cast<std::size_t>(x.size()) < n) throw PreconditionError("point has fewer coordinates than the metric");
  MetricEval me;
  me.x = x;
  me.g.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      const double gij = eval_at(m.entry(i, j), x);
      me.g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = gij;
      me.g(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = gij;
    }
  const Eigen::PartialPivLU<Mat> lu(me.g);
  me.det = lu.determinant();
  if (!(std::abs(me.det) > kDegenerateDet))
    throw DegenerateMetricError("degenerate metric: |det g| = " + std::to_string(std::abs(me.det)));
  me.g_inv = lu.inverse();
  me.sqrt_abs_det = std::sqrt(std::abs(me.det));
  me.dg_data.assign(n * n * n, 0.0);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) {
        const Expr& d = m.d_entry(k, i, j);
        const double value = d.is_number() ? d.number() : eval_at(d, x);
        me.dg_data[(k * n + i) * n + j] = value;
        me.dg_data[(k * n + j) * n + i] = value;
      }
  return me;
}

/// Christoffel symbols of the first kind Γ_{ij,k} = ½(∂_i g_jk + ∂_j g_ik − ∂_k g_ij).
class Christoffel {
 public:
  explicit Christoffel(const MetricEval& me) : n_(me.dim()), data_(n_ * n_ * n_) {
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i; j < n_; ++j)
        for (std::size_t k = 0; k < n_; ++k) {
          const double value = 0.5 * (me.dg(i, j, k) + me.dg(j, i, k) - me.dg(k, i, j));
          data_[(i * n_ + j) * n_ + k] = value;
          data_[(j * n_ + i) * n_ + k] = value;
        }
  }

  std::size_t dim() const { return n_; }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const { return data_[(i * n_ + j) * n_ + k]; }

  /// Γ_{ij,k} v^i v^j for each k.
  Vec contract(const Vec& v) const {
    Vec out = Vec::Zero(static_cast<Eigen::Index>(n_));
    for (std::size_t k = 0; k < n_; ++k) {
      double s = 0.0;
      for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j) s += (*this)(i, j, k) * v[static_cast<Eigen::Index>(i)] * v[static_cast<Eigen::Index>(j)];
      out[static_cast<Eigen::Index>(k)] = s;
    }
    return out;
  }

  /// Second kind Γ^l_{ij} = g^{lk} Γ_{ij,k}.
  double second_kind(const MetricEval& me, std::size_t l, std::size_t i, std::size_t j) const {
    double s = 0.0;
    for (std::size_t k = 0; k < n_; ++k) s += me.g_inv(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k)) * (*this)(i, j, k);
    return s;
  }

 private:
  std::size_t n_;
  std::vector<double> data_;
};

inline Christoffel christoffel_first(const MetricEval& me) { return Christoffel(me); }

namespace detail {

inline void require_position_only(const Expr& e, const char* what) {
  if (e.depends_on_velocity()) throw PreconditionError(std::string(what) + " must be position-only");
}

}  // namespace detail

/// Partial derivatives ∂_j f as expressions.
inline std::vector<Expr> partials(const Expr& f, std::size_t n) {
  std::vector<Expr> out;
  out.reserve(n);
  for (std::size_t j = 0; j < n; ++j) out.push_back(diff(f, Symbol::x(j)));
  return out;
}

/// (grad f)^i = g^ij ∂_j f, symbolic.
inline std::vector<Expr> grad_expr(const Metric& m, const Expr& f) {
  detail::require_position_only(f, "gradient argument");
  const std::size_t n = m.dim();
  const auto df = partials(f, n);
  std::vector<Expr> out(n, Expr(0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i] += m.inverse_entry(i, j) * df[j];
  return out;
}

inline Vec grad(const Metric& m, const Expr& f, const Vec& x) {
  detail::require_position_only(f, "gradient argument");
  const MetricEval me = metric_eval(m, x);
  const std::size_t n = m.dim();
  Vec df(static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) df[static_cast<Eigen::Index>(j)] = eval_at(diff(f, Symbol::x(j)), x);
  return me.g_inv * df;
}

/// div u = |g|^{-1/2} ∂_i(|g|^{1/2} u^i), expanded as ∂_i u^i + ½ u^i ∂_i(det g)/det g.
inline Expr divergence_expr(const Metric& m, const std::vector<Expr>& u) {
  const std::size_t n = m.dim();
  if (u.size() != n) throw PreconditionError("vector field has wrong number of components");
  Expr sum(0.0);
  Expr volume(0.0);
  for (std::size_t i = 0; i < n; ++i) {
    detail::require_position_only(u[i], "divergence argument");
    sum += diff(u[i], Symbol::x(i));
    volume += u[i] * m.d_det(i);
  }
  if (volume.is_zero()) return sum;
  return sum + Expr(0.5) * volume / m.det_expr();
}

inline double divergence(const Metric& m, const std::vector<Expr>& u, const Vec& x) {
  metric_eval(m, x);  // degeneracy gate
  return eval_at(divergence_expr(m, u), x);
}

inline Expr laplacian_expr(const Metric& m, const Expr& f) { return divergence_expr(m, grad_expr(m, f)); }

inline double laplacian(const Metric& m, const Expr& f, const Vec& x) {
  metric_eval(m, x);
  return eval_at(laplacian_expr(m, f), x);
}

/// Lowered components u_k = g_kj u^j.
inline std::vector<Expr> lower(const Metric& m, const std::vector<Expr>& u) {
  const std::size_t n = m.dim();
  if (u.size() != n) throw PreconditionError("vector field has wrong number of components");
  std::vector<Expr> out(n, Expr(0.0));
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t j = 0; j < n; ++j) out[k] += m.entry(k, j) * u[j];
  return out;
}

/// T₂(a, b) = g_ij a^i b^j, symbolic.
inline Expr inner_expr(const Metric& m, const std::vector<Expr>& a, const std::vector<Expr>& b) {
  const auto a_low = lower(m, a);
  Expr s(0.0);
  for (std::size_t i = 0; i < m.dim(); ++i) s += a_low[i] * b[i];
  return s;
}

/// Velocity symbols v1..vn.
inline std::vector<Expr> velocity_symbols(std::size_t n) {
  std::vector<Expr> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back(Expr::vel(i));
  return v;
}

/// θ_i = g_ij v^j as expressions in (x, v).
inline std::vector<Expr> theta_expr(const Metric& m) { return lower(m, velocity_symbols(m.dim())); }

/// θ̇ = g_ij v^i v^j.
inline Expr theta_dot_expr(const Metric& m) {
  const auto v = velocity_symbols(m.dim());
  return inner_expr(m, v, v);
}

/// T = ½ θ̇.
inline Expr kinetic_expr(const Metric& m) { return Expr(0.5) * theta_dot_expr(m); }

struct Liouville {
  Vec theta;
  double theta_dot = 0.0;
  double T = 0.0;
};

inline Liouville liouville(const Metric& m, const State& s) {
  if (s.dim() != m.dim() || static_cast<std::size_t>(s.xdot.size()) != m.dim())
    throw PreconditionError("state dimension does not match metric");
  const MetricEval me = metric_eval(m, s.x);
  Liouville out;
  out.theta = me.g * s.xdot;
  out.theta_dot = out.theta.dot(s.xdot);
  out.T = 0.5 * out.theta_dot;
  return out;
}

/// ‖τ‖² = g^ij τ_i τ_j; τ may depend on velocities.
inline double oneform_norm2(const Metric& m, const std::vector<Expr>& tau, const State& s) {
  const std::size_t n = m.dim();
  if (tau.size() != n) throw PreconditionError("covector has wrong number of components");
  const MetricEval me = metric_eval(m, s.x);
  Vec t(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) t[static_cast<Eigen::Index>(i)] = eval_at(tau[i], s);
  return t.dot(me.g_inv * t);
}

inline double oneform_norm2(const Metric& m, const std::vector<Expr>& tau, const Vec& x) {
  return oneform_norm2(m, tau, State{x, Vec::Zero(static_cast<Eigen::Index>(m.dim()))});
}

/// Renames coordinate symbols: x_i becomes x_{perm[i]}. Velocity symbols follow the same map.
inline Expr permute_symbols(const Expr& e, const std::vector<std::size_t>& perm) {
  return substitute(e, [&](Symbol s) -> std::optional<Expr> {
    if (s.index >= perm.size()) return std::nullopt;
    return Expr::symbol({s.kind, perm[s.index]});
  });
}

/// Permutation that moves index `i0` to the last slot and keeps the rest in order.
inline std::vector<std::size_t> move_to_last(std::size_t n, std::size_t i0) {
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i < i0 ? i : (i == i0 ? n - 1 : i - 1);
  return perm;
}

/// The block g_{μν} with coordinate `i0` removed; remaining coordinates are renumbered.
/// Expressions that still reference x_{i0} see it as the extra trailing coordinate x_{n-1}.
inline Metric drop_coordinate(const Metric& m, std::size_t i0) {
  const std::size_t n = m.dim();
  if (n < 2) throw PreconditionError("cannot drop a coordinate from a 1-dimensional metric");
  const auto perm = move_to_last(n, i0);
  std::vector<Expr> upper;
  for (std::size_t i = 0; i < n; ++i) {
    if (i == i0) continue;
    for (std::size_t j = i; j < n; ++j) {
      if (j == i0) continue;
      upper.push_back(permute_symbols(m.entry(i, j), perm));
    }
  }
  for (const auto& e : upper)
    if (e.symbol_bound() > n - 1) throw PreconditionError("spatial block depends on the dropped coordinate");
  return Metric(n - 1, std::move(upper));
}

}  // namespace geomech
