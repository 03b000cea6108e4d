#pragma once

// Quasi-random sample points for residual checks: a Halton sequence with a
// seeded Cranley-Patterson rotation, so the stream is reproducible per seed.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "geomech/errors.hpp"
#include "geomech/geometry.hpp"

namespace geomech {

struct SampleBox {
  std::vector<double> lo;
  std::vector<double> hi;
  std::vector<double> vlo;  // velocity box; empty means [-1, 1] per component
  std::vector<double> vhi;
  std::size_t count = 100;

  static SampleBox cube(std::size_t n, double lo, double hi, std::size_t count = 100) {
    return {std::vector<double>(n, lo), std::vector<double>(n, hi), {}, {}, count};
  }

  std::size_t dim() const { return lo.size(); }
};

namespace detail {

inline constexpr unsigned kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37,
                                       41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89};

inline double radical_inverse(std::uint64_t i, unsigned base) {
  double inv = 1.0 / base;
  double f = inv;
  double r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

}  // namespace detail

class HaltonStream {
 public:
  HaltonStream(std::size_t dims, std::uint64_t seed) : shift_(dims) {
    if (dims > std::size(detail::kPrimes)) throw PreconditionError("too many sampling dimensions");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto& s : shift_) s = seed == 0 ? 0.0 : u(rng);
  }

  /// Next point in the unit cube.
  std::vector<double> next() {
    ++index_;
    std::vector<double> p(shift_.size());
    for (std::size_t d = 0; d < p.size(); ++d) {
      const double r = detail::radical_inverse(index_, detail::kPrimes[d]) + shift_[d];
      p[d] = r - std::floor(r);
    }
    return p;
  }

 private:
  std::vector<double> shift_;
  std::uint64_t index_ = 0;
};

inline std::vector<Vec> sample_points(const SampleBox& box, std::uint64_t seed = 1) {
  const std::size_t n = box.dim();
  if (box.hi.size() != n) throw PreconditionError("sample box bounds differ in length");
  HaltonStream h(n, seed);
  std::vector<Vec> out;
  out.reserve(box.count);
  for (std::size_t k = 0; k < box.count; ++k) {
    const auto u = h.next();
    Vec x(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) x[static_cast<Eigen::Index>(i)] = box.lo[i] + u[i] * (box.hi[i] - box.lo[i]);
    out.push_back(std::move(x));
  }
  return out;
}

inline std::vector<State> sample_states(const SampleBox& box, std::uint64_t seed = 1) {
  const std::size_t n = box.dim();
  HaltonStream h(2 * n, seed);
  std::vector<State> out;
  out.reserve(box.count);
  for (std::size_t k = 0; k < box.count; ++k) {
    const auto u = h.next();
    State s{Vec(static_cast<Eigen::Index>(n)), Vec(static_cast<Eigen::Index>(n))};
    for (std::size_t i = 0; i < n; ++i) {
      const double vlo = box.vlo.empty() ? -1.0 : box.vlo[i];
      const double vhi = box.vhi.empty() ? 1.0 : box.vhi[i];
      s.x[static_cast<Eigen::Index>(i)] = box.lo[i] + u[i] * (box.hi[i] - box.lo[i]);
      s.xdot[static_cast<Eigen::Index>(i)] = vlo + u[n + i] * (vhi - vlo);
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace geomech
