#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

#include "fdcr/linalg.hpp"

namespace fdcr {

// splitmix64 finalizer; used to fold stream-path components into substream seeds
inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a + 0x9e3779b97f4a7c15ULL * (b + 0x9e3779b97f4a7c15ULL);
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

// Substream seed from a root seed and a path such as {trial, family, user}.
// Streams derived from distinct paths behave independently, which lets one
// trial's channel draws stay identical when unrelated dimensions change.
inline std::uint64_t derive_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = mix64(seed, 0x5851f42d4c957f2dULL);
  for (std::uint64_t p : path) s = mix64(s, p);
  return s;
}

// Deterministic generator: mt19937_64 raws plus hand-rolled transforms, since
// the standard distribution objects are not bit-portable across libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t raw() { return gen_(); }

  // [0,1)
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // (0,1]
  double uniform_open() { return 1.0 - uniform(); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // standard normal via Box-Muller, second value cached
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    const double u1 = uniform_open();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    cached_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
  }

  // CN(0,1): unit-variance circularly-symmetric complex normal
  cplx cnormal() {
    const double re = normal();
    const double im = normal();
    return cplx(re * M_SQRT1_2, im * M_SQRT1_2);
  }

  CVec cnormal_vec(int n) {
    CVec v(n);
    for (cplx& x : v) x = cnormal();
    return v;
  }

  // uniform over the closed ball {x in C^n : ||x|| <= radius}
  CVec uniform_ball(int n, double radius) {
    CVec dir = cnormal_vec(n);
    double nrm = vnorm(dir);
    while (nrm < 1e-300) {
      dir = cnormal_vec(n);
      nrm = vnorm(dir);
    }
    // ball in C^n is a ball in R^{2n}: radial density r^{2n-1}
    const double r = radius * std::pow(uniform(), 1.0 / (2.0 * n));
    for (cplx& x : dir) x *= r / nrm;
    return dir;
  }

  cplx uniform_disk(double radius) { return uniform_ball(1, radius)[0]; }

 private:
  std::mt19937_64 gen_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace fdcr
