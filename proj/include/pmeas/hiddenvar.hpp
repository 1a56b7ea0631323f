// hiddenvar.hpp
// Local hidden-variable model for a single spin-1/2: a preparation unit
// vector n and a hidden unit vector h, uniform on the sphere. An observable
// A = a0 + a1.sigma reads a0 + |a1| when (n + h).a1 > 0 and a0 - |a1|
// otherwise; ties break toward +|a1| (a measure-zero event).
#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "pmeas/povm.hpp"
#include "pmeas/qcore.hpp"
#include "pmeas/rng.hpp"

namespace pmeas {

using Vec3 = std::array<double, 3>;

inline double dot(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

inline double length(const Vec3& v) { return std::sqrt(dot(v, v)); }

inline Vec3 unit(const Vec3& v) {
  const double len = length(v);
  if (len <= 0.0) throw std::invalid_argument("unit: zero vector");
  return {v[0] / len, v[1] / len, v[2] / len};
}

struct Observable3 {
  double a0 = 0.0;
  Vec3 a1 = {0.0, 0.0, 1.0};
};

struct HVState {
  Vec3 n = {0.0, 0.0, 1.0};  // preparation direction, unit
  Vec3 h = {0.0, 0.0, 1.0};  // hidden variable, unit
};

// Uniform direction on the sphere: normalized triple of standard normals.
inline Vec3 sample_h(Rng& rng) {
  while (true) {
    const Vec3 g = {rng.gaussian(), rng.gaussian(), rng.gaussian()};
    const double len = length(g);
    if (len > 1e-12) return {g[0] / len, g[1] / len, g[2] / len};
  }
}

inline double hv_outcome(const HVState& state, const Observable3& a) {
  const double mag = length(a.a1);
  if (mag <= 0.0) throw std::invalid_argument("hv_outcome: |a1| must be positive");
  if (std::abs(length(state.n) - 1.0) > kTol || std::abs(length(state.h) - 1.0) > kTol)
    throw std::invalid_argument("hv_outcome: n and h must be unit vectors");
  const Vec3 sum = {state.n[0] + state.h[0], state.n[1] + state.h[1],
                    state.n[2] + state.h[2]};
  return dot(sum, a.a1) >= 0.0 ? a.a0 + mag : a.a0 - mag;
}

struct HVAverage {
  double mean = 0.0;
  double std_error = 0.0;  // sample standard deviation / sqrt(trials)
};

inline HVAverage hv_average_detail(const Vec3& n, const Observable3& a,
                                   std::uint64_t trials, Rng& rng) {
  if (trials < 1) throw std::invalid_argument("hv_average: trials must be >= 1");
  double sum = 0.0, sum2 = 0.0;
  for (std::uint64_t i = 0; i < trials; ++i) {
    const double v = hv_outcome({n, sample_h(rng)}, a);
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / static_cast<double>(trials);
  const double var = std::max(sum2 / static_cast<double>(trials) - mean * mean, 0.0);
  return {mean, std::sqrt(var / static_cast<double>(trials))};
}

// Monte Carlo average of hv_outcome; the model reproduces a0 + a1.n.
inline double hv_average(const Vec3& n, const Observable3& a, std::uint64_t trials,
                         Rng& rng) {
  return hv_average_detail(n, a, trials, rng).mean;
}

// Selection experiment at strength p: the hidden-variable arm prepares
// n = x, keeps samples with (x + h).z >= 0, and reads sigma_x on survivors
// (always +1 there, since x.(x + h) = 1 + x.h >= 0). The quantum arm measures
// |+> partially, post-selects the null outcome, then reads sigma_x sharply:
// P(+1) = (1 + sqrt(1-p))^2 / (2 (2-p)), which reaches 1/2 at p = 1.
struct SelectionReport {
  double p = 0.0;
  std::uint64_t trials = 0;
  std::uint64_t hv_selected = 0;
  double hv_selected_fraction = 0.0;   // Monte Carlo; 1/2 in the limit
  double hv_sigma_x_plus_frequency = 0.0;  // exactly 1 by the outcome rule
  double qm_survival_probability = 0.0;    // exact branch value, 1 - p/2
  double qm_sigma_x_plus_probability = 0.0;  // exact branch value
  double divergence = 0.0;  // hv frequency minus qm probability
};

inline SelectionReport selection_experiment(double p, std::uint64_t trials, Rng& rng) {
  if (p <= 0.0 || p > 1.0)
    throw std::invalid_argument("selection_experiment: p must lie in (0, 1]");
  SelectionReport rep;
  rep.p = p;
  rep.trials = trials;

  const Vec3 x_hat = {1.0, 0.0, 0.0};
  const Observable3 sigma_x{0.0, x_hat};
  std::uint64_t plus = 0;
  for (std::uint64_t i = 0; i < trials; ++i) {
    const Vec3 h = sample_h(rng);
    if (x_hat[2] + h[2] < 0.0) continue;  // (n + h).z < 0: switched, discarded
    ++rep.hv_selected;
    if (hv_outcome({x_hat, h}, sigma_x) > 0.0) ++plus;
  }
  rep.hv_selected_fraction =
      trials == 0 ? 0.0 : static_cast<double>(rep.hv_selected) / static_cast<double>(trials);
  rep.hv_sigma_x_plus_frequency =
      rep.hv_selected == 0 ? 0.0
                           : static_cast<double>(plus) / static_cast<double>(rep.hv_selected);

  // Quantum arm, exact branch tracking on |+>.
  const double r = 1.0 / std::sqrt(2.0);
  const StateVector plus_state = StateVector::from_amplitudes(1, {{r, 0}, {r, 0}});
  const PartialMeasurement meas{p, 0.0, 0, std::nullopt};
  const Branch surviving = apply_branch(plus_state, meas, Outcome::m);
  rep.qm_survival_probability = surviving.probability;
  rep.qm_sigma_x_plus_probability = fidelity(surviving.post_state, plus_state);
  rep.divergence = rep.hv_sigma_x_plus_frequency - rep.qm_sigma_x_plus_probability;
  return rep;
}

}  // namespace pmeas
