// tomography.hpp
// Single-qubit Bloch-angle reconstruction from partial-measurement
// statistics, and the state-independent survival law that blocks tomography
// on a single surviving copy.
//
// Settings and their switch probabilities for |psi> = cos(t/2)|0> +
// sin(t/2) e^{i f}|1> measured at strength p:
//   z:  P(mbar) = p sin^2(t/2)          -> cos t  = 1 - 2 P/p
//   H:  P(mbar) = p (1 - <sx>)/2        -> sin t cos f = 1 - 2 P/p
//   y:  P(mbar) = p (1 - <sy>)/2        -> sin t sin f = 1 - 2 P/p
// The H setting applies a Hadamard before the measurement; the y setting
// applies S† then H, mapping the sigma_y eigenbasis to the computational one.
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "pmeas/povm.hpp"
#include "pmeas/qcore.hpp"
#include "pmeas/rng.hpp"

namespace pmeas {

struct BlochAngles {
  double theta = 0.0;  // [0, pi]
  double phi = 0.0;    // (-pi, pi]
};

inline void check_bloch_angles(const BlochAngles& a) {
  if (a.theta < 0.0 || a.theta > std::numbers::pi)
    throw std::invalid_argument("BlochAngles: theta must lie in [0, pi]");
  if (a.phi <= -std::numbers::pi || a.phi > std::numbers::pi)
    throw std::invalid_argument("BlochAngles: phi must lie in (-pi, pi]");
}

inline StateVector bloch_state(const BlochAngles& a) {
  check_bloch_angles(a);
  const double c = std::cos(a.theta / 2.0), s = std::sin(a.theta / 2.0);
  return StateVector::from_amplitudes(
      1, {{c, 0.0}, {s * std::cos(a.phi), s * std::sin(a.phi)}});
}

struct SettingCounts {
  std::uint64_t n_m = 0;
  std::uint64_t n_mbar = 0;
  std::uint64_t total() const { return n_m + n_mbar; }
};

struct CountTable {
  SettingCounts z;
  SettingCounts h;
  SettingCounts y;
};

// The y-setting pre-rotation applied to the state: S† then H as a circuit,
// i.e. the operator H S†. It maps |+y> -> |0> and |-y> -> |1>.
inline OperatorMatrix y_setting_rotation() { return gates::h() * gates::sdg(); }

// Exact switch probabilities for the three settings.
struct SettingProbabilities {
  double z = 0.0;
  double h = 0.0;
  double y = 0.0;
};

inline SettingProbabilities setting_probabilities(const BlochAngles& a, double p) {
  const StateVector psi = bloch_state(a);
  const PartialMeasurement mz{p, 0.0, 0, std::nullopt};
  SettingProbabilities out;
  out.z = branch_probabilities(psi, mz).second;
  out.h = branch_probabilities(apply_op(psi, gates::h(), {0}), mz).second;
  out.y = branch_probabilities(apply_op(psi, y_setting_rotation(), {0}), mz).second;
  return out;
}

inline double estimate_theta(double p_mbar_z, double p) {
  if (p <= 0.0 || p > 1.0)
    throw std::invalid_argument("estimate_theta: p must lie in (0, 1]");
  if (p_mbar_z < 0.0 || p_mbar_z > p)
    throw std::invalid_argument("estimate_theta: P(mbar) must lie in [0, p]");
  return std::acos(1.0 - 2.0 * p_mbar_z / p);
}

// The H setting supplies sin(theta) cos(phi) = 1 - 2 P_H / p and the y
// setting sin(theta) sin(phi) = 1 - 2 P_y / p; their atan2 recovers phi with
// the y setting fixing the sign of sin(phi). (Inverting the cosine alone
// loses half the significant digits near sin(phi) = 0.)
inline double estimate_phi(double p_mbar_h, double p_mbar_y, double p, double theta) {
  if (p <= 0.0 || p > 1.0)
    throw std::invalid_argument("estimate_phi: p must lie in (0, 1]");
  if (std::abs(std::sin(theta)) < 1e-9)
    throw PoleError("estimate_phi: phi undefined at pole");
  const double cos_term = 1.0 - 2.0 * p_mbar_h / p;  // sin(theta) cos(phi)
  const double sin_term = 1.0 - 2.0 * p_mbar_y / p;  // sin(theta) sin(phi)
  double phi = std::atan2(sin_term, cos_term);
  if (phi <= -std::numbers::pi) phi = std::numbers::pi;
  return phi;
}

struct EnsembleEstimate {
  BlochAngles angles;
  double se_theta = 0.0;
  double se_phi = 0.0;
  bool clamped_z = false;  // z-setting frequency clamped into [0, p]
  bool clamped_h = false;  // H-setting frequency clamped into [0, p]
  bool clamped_y = false;  // y-setting frequency clamped into [0, p]
};

// Plugs empirical frequencies into the estimators; standard errors by
// binomial error propagation (delta method). Frequencies outside [0, p]
// (sampling noise) are clamped to the boundary and flagged.
inline EnsembleEstimate ensemble_estimate(const CountTable& counts, double p) {
  if (counts.z.total() == 0 || counts.h.total() == 0 || counts.y.total() == 0)
    throw std::invalid_argument("ensemble_estimate: empty counts");
  const double nz = static_cast<double>(counts.z.total());
  const double nh = static_cast<double>(counts.h.total());
  const double ny = static_cast<double>(counts.y.total());
  double fz = static_cast<double>(counts.z.n_mbar) / nz;
  double fh = static_cast<double>(counts.h.n_mbar) / nh;
  double fy = static_cast<double>(counts.y.n_mbar) / ny;

  EnsembleEstimate out;
  if (fz > p) {
    fz = p;
    out.clamped_z = true;
  }
  if (fh > p) {
    fh = p;
    out.clamped_h = true;
  }
  if (fy > p) {
    fy = p;
    out.clamped_y = true;
  }
  const double theta = estimate_theta(fz, p);
  const double st = std::max(std::sin(theta), 1e-12);
  const double var_fz = fz * (1.0 - fz) / nz;
  out.se_theta = (2.0 / (p * st)) * std::sqrt(var_fz);

  const double phi = estimate_phi(fh, fy, p, theta);

  // phi = atan2(S, C) with C = 1 - 2 f_h / p and S = 1 - 2 f_y / p; theta
  // noise drops out because both terms share the sin(theta) factor.
  const double cos_term = 1.0 - 2.0 * fh / p;
  const double sin_term = 1.0 - 2.0 * fy / p;
  const double r2 = std::max(cos_term * cos_term + sin_term * sin_term, 1e-12);
  const double var_fh = fh * (1.0 - fh) / nh;
  const double var_fy = fy * (1.0 - fy) / ny;
  out.se_phi = (2.0 / p) *
               std::sqrt(sin_term * sin_term * var_fh + cos_term * cos_term * var_fy) / r2;

  out.angles = BlochAngles{theta, phi};
  return out;
}

// Seeded per-setting counts for a known preparation: one Bernoulli draw per
// copy against the exact switch probability of the setting.
inline CountTable sample_counts(const BlochAngles& a, double p, std::uint64_t n_per_setting,
                                Rng& rng) {
  const SettingProbabilities probs = setting_probabilities(a, p);
  CountTable table;
  const auto draw = [&rng, n_per_setting](double p_mbar, SettingCounts& out) {
    for (std::uint64_t i = 0; i < n_per_setting; ++i) {
      if (rng.uniform() < p_mbar)
        ++out.n_mbar;
      else
        ++out.n_m;
    }
  };
  draw(probs.z, table.z);
  draw(probs.h, table.h);
  draw(probs.y, table.y);
  return table;
}

// Probability that a single copy survives `rounds` do/undo sequences; the
// per-round survival 1 - p carries no dependence on the state, which is why
// a lucky surviving copy reveals nothing about it.
inline double survival_probability(double p, int rounds) {
  if (p < 0.0 || p >= 1.0)
    throw std::invalid_argument("survival_probability: p must lie in [0, 1)");
  if (rounds < 0) throw std::invalid_argument("survival_probability: rounds must be >= 0");
  return std::pow(1.0 - p, rounds);
}

}  // namespace pmeas
