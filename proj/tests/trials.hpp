#pragma once

// Seeded random instances for the three-way wave theorems. Each generator mixes
// cases built so that one or two conditions hold exactly with generic ones, so the
// implication checks are exercised, not satisfied vacuously.

#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "geomech/geometry.hpp"
#include "geomech/parser.hpp"
#include "geomech/sampling.hpp"
#include "geomech/waves.hpp"

namespace trials {

using namespace geomech;

inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "(%.17g)", v);
  return buf;
}

inline double uni(std::mt19937& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline std::string x(std::size_t i) { return "x" + std::to_string(i + 1); }

inline std::string linear(std::size_t n, std::mt19937& rng, double c0 = 0.0) {
  std::string out = num(c0);
  for (std::size_t i = 0; i < n; ++i) out += " + " + num(uni(rng, -2, 2)) + "*" + x(i);
  return out;
}

inline std::string poly(std::size_t n, std::mt19937& rng) {
  std::string out = num(uni(rng, -1, 1));
  for (int t = 0; t < 4; ++t) {
    out += " + " + num(uni(rng, -1, 1));
    const int deg = 1 + static_cast<int>(rng() % 3);
    for (int d = 0; d < deg; ++d) out += "*" + x(rng() % n);
  }
  return out;
}

// Harmonic in flat coordinates x1, x2.
inline std::string harmonic(std::mt19937& rng) {
  const double a = uni(rng, -1, 1), b = uni(rng, -1, 1), c = uni(rng, -0.5, 0.5);
  return num(a) + "*(x1^2 - x2^2) + " + num(b) + "*x1*x2 + " + num(c) + "*(x1^3 - 3*x1*x2^2)";
}

inline Metric pick_metric(std::size_t n, std::mt19937& rng) {
  if (rng() % 3 == 0) {
    std::vector<Expr> d;
    for (std::size_t i = 0; i < n; ++i) d.push_back(parse("1 + " + num(uni(rng, 0, 0.3)) + "*" + x((i + 1) % n) + "^2", n));
    return Metric::diagonal(d);
  }
  return Metric::euclidean(n);
}

inline std::vector<Vec> box(std::size_t n, double lo, double hi, std::size_t count, std::uint64_t seed) {
  return sample_points(SampleBox::cube(n, lo, hi, count), seed);
}

// Phase from the shared pool: linear, harmonic quadratic/cubic or generic polynomial.
inline Expr phase_from_pool(std::size_t n, std::mt19937& rng) {
  switch (rng() % 3) {
    case 0: return parse(linear(n, rng, uni(rng, -1, 1)), n);
    case 1: return parse(harmonic(rng), n);
    default: return parse(poly(n, rng), n);
  }
}

struct Schrodinger {
  Metric m;
  Expr U;
  Expr S;
  double E;
  std::vector<Vec> points;
};

inline Schrodinger schrodinger(std::mt19937& rng) {
  const std::size_t n = 2 + rng() % 2;
  Schrodinger t{pick_metric(n, rng), Expr(), phase_from_pool(n, rng), uni(rng, -1, 2), {}};
  if (rng() % 2)
    t.U = Expr(t.E) - hamiltonian_of_phase(t.m, Expr(0.0), t.S);  // H(grad S) = E exactly
  else
    t.U = rng() % 2 ? Expr(uni(rng, -1, 1)) : parse(poly(n, rng), n);
  t.points = box(n, -1, 1, 20, rng() % 1000 + 1);
  return t;
}

struct KleinGordon {
  Metric m;
  VectorPotential A;
  Expr S;
  double m_const;
  std::vector<Vec> points;
};

inline KleinGordon klein_gordon(std::mt19937& rng) {
  const std::size_t n = 2 + rng() % 2;
  Metric m = rng() % 4 == 0 ? Metric::diagonal([&] {
    std::vector<Expr> d(n, Expr(1.0));
    d[0] = Expr(-1.0);
    return d;
  }())
                            : pick_metric(n, rng);
  const Expr S = phase_from_pool(n, rng);
  std::vector<Expr> A;
  const auto gS = grad_expr(m, S);
  switch (rng() % 3) {
    case 0:
      for (std::size_t i = 0; i < n; ++i) A.push_back(Expr(uni(rng, -1, 1)));
      break;
    case 1:  // grad S − A constant
      for (std::size_t i = 0; i < n; ++i) A.push_back(gS[i] - Expr(uni(rng, -1, 1)));
      break;
    default:
      for (std::size_t i = 0; i < n; ++i) A.push_back(parse(poly(n, rng), n));
  }
  KleinGordon t{m, VectorPotential(A), S, uni(rng, 0, 2), box(n, -1, 1, 20, rng() % 1000 + 1)};
  if (rng() % 2) {
    std::vector<Expr> u;
    for (std::size_t i = 0; i < n; ++i) u.push_back(gS[i] - A[i]);
    const double u2 = eval_at(inner_expr(m, u, u), t.points.front());
    t.m_const = std::sqrt(std::abs(u2));
  }
  return t;
}

struct SqrtRho {
  Metric m;
  Expr U;
  Expr S;
  Expr rho;
  double E;
  std::vector<Vec> points;
};

// Admissible pairs in closed form. S = f(c·x) with c a unit vector and
// ρ = h(x)/f'(c·x), h constant along c; then ⟨grad S, grad log ρ⟩ = −ΔS.
inline SqrtRho sqrt_rho(std::mt19937& rng) {
  const std::size_t n = 2 + rng() % 2;
  const Metric m = Metric::euclidean(n);
  SqrtRho t{m, Expr(), Expr(), Expr(), uni(rng, 0, 2), {}};
  if (rng() % 5 == 0) {
    const std::string r = "sqrt(x1^2 + x2^2 + x3^2)";
    t.m = Metric::euclidean(3);
    t.S = parse(num(uni(rng, 0.5, 2)) + "*" + r, 3);
    t.rho = parse("1/(x1^2 + x2^2 + x3^2)", 3);
    t.points = box(3, 0.5, 1.5, 20, rng() % 1000 + 1);
  } else {
    std::vector<double> c(n), d(n);
    double cn = 0;
    for (auto& v : c) {
      v = uni(rng, -1, 1);
      cn += v * v;
    }
    for (auto& v : c) v /= std::sqrt(cn);
    double dc = 0;
    for (std::size_t i = 0; i < n; ++i) dc += (d[i] = uni(rng, -1, 1)) * c[i];
    for (std::size_t i = 0; i < n; ++i) d[i] -= dc * c[i];
    std::string s = "0", dx = "0";
    for (std::size_t i = 0; i < n; ++i) {
      s += " + " + num(c[i]) + "*" + x(i);
      dx += " + " + num(d[i]) + "*" + x(i);
    }
    s = "(" + s + ")";
    dx = "(" + dx + ")";
    std::string f, fp;
    switch (rng() % 3) {
      case 0: {
        const double k = uni(rng, 0.5, 2);
        f = num(k) + "*" + s;
        fp = num(k);
        break;
      }
      case 1: {
        const double a = uni(rng, 0.05, 0.5);
        f = s + " + " + num(a) + "*" + s + "^3";
        fp = "(1 + 3*" + num(a) + "*" + s + "^2)";
        break;
      }
      default: {
        const double b = uni(rng, -0.8, 0.8);
        f = s + " + " + num(b) + "*sin(" + s + ")";
        fp = "(1 + " + num(b) + "*cos(" + s + "))";
      }
    }
    std::string h;
    switch (rng() % 3) {
      case 0: h = num(uni(rng, 0.5, 2)); break;
      case 1: h = "(1 + " + dx + "^2)"; break;
      default: h = "exp(" + dx + ")";
    }
    t.S = parse(f, n);
    t.rho = parse(h + "/" + fp, n);
    t.points = box(n, -1, 1, 20, rng() % 1000 + 1);
  }
  const std::size_t n2 = t.m.dim();
  if (rng() % 2)
    t.U = Expr(t.E) - hamiltonian_of_phase(t.m, Expr(0.0), t.S);
  else
    t.U = rng() % 2 ? Expr(uni(rng, -1, 1)) : parse(poly(n2, rng), n2);
  return t;
}

struct Amplitude {
  Metric m;
  Expr U;
  Expr S;
  Expr a_re;
  Expr a_im;
  double E;
  std::vector<Vec> points;
};

inline Amplitude amplitude(std::mt19937& rng) {
  const std::size_t n = 2 + rng() % 2;
  Amplitude t{pick_metric(n, rng), Expr(), phase_from_pool(n, rng), Expr(), Expr(), uni(rng, -1, 2), {}};
  switch (rng() % 3) {
    case 0:
      t.a_re = Expr(uni(rng, 0.5, 2));
      t.a_im = Expr(uni(rng, -1, 1));
      break;
    case 1: {
      const std::string k = linear(n, rng);
      t.a_re = parse("cos(" + k + ")", n);
      t.a_im = parse("sin(" + k + ")", n);
      break;
    }
    default:
      t.a_re = parse("2 + sin(" + poly(n, rng) + ")", n);
      t.a_im = parse(poly(n, rng), n);
  }
  if (rng() % 2)
    t.U = Expr(t.E) - hamiltonian_of_phase(t.m, Expr(0.0), t.S);
  else
    t.U = rng() % 2 ? Expr(uni(rng, -1, 1)) : parse(poly(n, rng), n);
  t.points = box(n, -1, 1, 20, rng() % 1000 + 1);
  return t;
}

struct Tally {
  int trials = 0;
  int violations = 0;
  int two_pass = 0;  // instances where the implication had something to say
  int all_pass = 0;
  double worst_third = 0.0;  // largest residual of the third condition when two passed

  void add(const ThreeWayReport& r) {
    ++trials;
    int passing = 0;
    for (bool p : r.pass) passing += p ? 1 : 0;
    if (r.violation) ++violations;
    if (passing == 3) ++all_pass;
    if (passing >= 2 && r.hypothesis_ok) {
      ++two_pass;
      for (std::size_t k = 0; k < 3; ++k)
        if (!r.pass[k]) worst_third = std::max(worst_third, r.residual[k]);
    }
  }
};

}  // namespace trials
