// povm.hpp
// Partial (unsharp) measurements: Kraus pairs, effects, branch statistics,
// stochastic sampling, probabilistic reversal, ancilla dilation, entropy,
// and the two-strength generalization with its composition identities.
//
// A measurement of strengths (p, q) has Kraus operators, in the measurement
// basis,
//   M_m    = diag(sqrt(1-q), sqrt(1-p))   (null outcome, no switch)
//   M_mbar = diag(sqrt(q),    sqrt(p))    (switch outcome)
// conjugated by the optional basis rotation. q defaults to 0, which is the
// single-strength measurement.
#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pmeas/qcore.hpp"
#include "pmeas/rng.hpp"

namespace pmeas {

struct PartialMeasurement {
  double p = 0.0;                                // strength on |1>
  double q = 0.0;                                // strength on |0>
  int target = 0;                                // qubit index
  std::optional<OperatorMatrix> basis_rotation;  // 2x2 unitary, identity if absent
};

enum class Outcome { m, mbar };

inline const char* outcome_label(Outcome o) { return o == Outcome::m ? "m" : "mbar"; }

struct Branch {
  Outcome outcome;
  double probability;
  StateVector post_state;  // normalized
};

struct TrajectoryStep {
  std::string label;
  Outcome outcome;
  double probability;  // conditional on the preceding steps
};

struct TrajectoryRecord {
  std::uint64_t seed = 0;
  std::vector<TrajectoryStep> steps;
  StateVector final_state = StateVector::basis(1, 0);
  bool survived = false;
  double joint_probability = 1.0;  // product of the step probabilities
};

struct TunnelingModel {
  double gamma = 0.0;  // rate, 1/time
  double tau = 0.0;    // duration
};

namespace detail {

inline void check_strengths(const PartialMeasurement& meas) {
  if (meas.p < 0.0 || meas.p > 1.0 || meas.q < 0.0 || meas.q > 1.0)
    throw std::invalid_argument("PartialMeasurement: strengths must lie in [0, 1]");
  if (meas.basis_rotation) {
    if (meas.basis_rotation->dim() != 2)
      throw std::invalid_argument("PartialMeasurement: basis rotation must be 2x2");
    if (max_abs_diff(meas.basis_rotation->adjoint() * *meas.basis_rotation,
                     OperatorMatrix::identity(2)) > kTol)
      throw std::invalid_argument("PartialMeasurement: basis rotation must be unitary");
  }
}

inline bool rotation_is_identity(const PartialMeasurement& meas) {
  return !meas.basis_rotation ||
         max_abs_diff(*meas.basis_rotation, OperatorMatrix::identity(2)) <= kTol;
}

inline OperatorMatrix rotate_frame(const PartialMeasurement& meas, const OperatorMatrix& op) {
  if (!meas.basis_rotation) return op;
  return *meas.basis_rotation * op * meas.basis_rotation->adjoint();
}

inline OperatorMatrix diag2(double a, double b) {
  return OperatorMatrix(2, {{a, 0}, {0, 0}, {0, 0}, {b, 0}});
}

// Rounding within 1e-12 of the [0, 1] boundary is clamped; larger
// violations indicate a bug and raise.
inline double clamp_probability(double x) {
  if (x < 0.0) {
    if (x >= -kTol) return 0.0;
    throw SimError("probability below 0 beyond tolerance");
  }
  if (x > 1.0) {
    if (x <= 1.0 + kTol) return 1.0;
    throw SimError("probability above 1 beyond tolerance");
  }
  return x;
}

}  // namespace detail

inline std::pair<OperatorMatrix, OperatorMatrix> kraus_pair(const PartialMeasurement& meas) {
  detail::check_strengths(meas);
  const OperatorMatrix m = detail::diag2(std::sqrt(1.0 - meas.q), std::sqrt(1.0 - meas.p));
  const OperatorMatrix mbar = detail::diag2(std::sqrt(meas.q), std::sqrt(meas.p));
  return {detail::rotate_frame(meas, m), detail::rotate_frame(meas, mbar)};
}

inline std::pair<OperatorMatrix, OperatorMatrix> effects(const PartialMeasurement& meas) {
  const auto [m, mbar] = kraus_pair(meas);
  const OperatorMatrix e_m = m.adjoint() * m;
  const OperatorMatrix e_mbar = mbar.adjoint() * mbar;
  if (max_abs_diff(e_m + e_mbar, OperatorMatrix::identity(2)) > kTol)
    throw SimError("effects: semispectral resolution violated");
  if (meas.q == 0.0 && detail::rotation_is_identity(meas)) {
    // In sigma_z form: E_m = I - (p/2)(I - sigma_z), E_mbar = (p/2)(I - sigma_z).
    const OperatorMatrix half_p_proj =
        (OperatorMatrix::identity(2) + gates::z().scaled({-1.0, 0.0})).scaled({meas.p / 2.0, 0.0});
    if (max_abs_diff(e_mbar, half_p_proj) > kTol ||
        max_abs_diff(e_m, OperatorMatrix::identity(2) + half_p_proj.scaled({-1.0, 0.0})) > kTol)
      throw SimError("effects: sigma_z form mismatch");
  }
  return {e_m, e_mbar};
}

// Returns (P_m, P_mbar); for a state with measurement-basis marginal
// amplitudes (alpha, beta) on the target qubit, P_mbar = q|alpha|^2 + p|beta|^2.
inline std::pair<double, double> branch_probabilities(const StateVector& s,
                                                      const PartialMeasurement& meas) {
  if (std::abs(norm(s) - 1.0) > 1e-9)
    throw std::invalid_argument("branch_probabilities: state is not normalized");
  const auto [e_m, e_mbar] = effects(meas);
  const double p_m = detail::clamp_probability(expectation(s, e_m, {meas.target}));
  const double p_mbar = detail::clamp_probability(expectation(s, e_mbar, {meas.target}));
  if (std::abs(p_m + p_mbar - 1.0) > kTol)
    throw SimError("branch_probabilities: probabilities do not sum to 1");
  return {p_m, p_mbar};
}

inline Branch apply_branch(const StateVector& s, const PartialMeasurement& meas,
                           Outcome outcome) {
  const auto [m, mbar] = kraus_pair(meas);
  const auto [p_m, p_mbar] = branch_probabilities(s, meas);
  const double prob = outcome == Outcome::m ? p_m : p_mbar;
  if (prob <= 1e-15)
    throw ImpossibleBranchError("apply_branch: impossible branch (zero probability)");
  const StateVector raw = apply_op(s, outcome == Outcome::m ? m : mbar, {meas.target});
  const double born = norm(raw) * norm(raw);
  if (std::abs(born - prob) > kTol)
    throw SimError("apply_branch: Born rule mismatch against effects");
  return Branch{outcome, prob, normalize(raw)};
}

// Draws the outcome by the Born rule; mbar occupies the low end of the
// uniform draw so results are reproducible given the seed.
inline Branch sample(const StateVector& s, const PartialMeasurement& meas, Rng& rng) {
  const auto [p_m, p_mbar] = branch_probabilities(s, meas);
  (void)p_m;
  const Outcome outcome = rng.uniform() < p_mbar ? Outcome::mbar : Outcome::m;
  return apply_branch(s, meas, outcome);
}

// Reversal operator for one branch: R = X M X in the measurement frame, so
// R_m M_m = sqrt((1-p)(1-q)) I and R_mbar M_mbar = sqrt(pq) I.
inline OperatorMatrix reversal_kraus(const PartialMeasurement& meas, Outcome outcome) {
  detail::check_strengths(meas);
  double factor;
  OperatorMatrix diag(2, {{0, 0}, {0, 0}, {0, 0}, {0, 0}});
  if (outcome == Outcome::m) {
    if (meas.p >= 1.0 || meas.q >= 1.0)
      throw IrreversibleMeasurementError("reversal_kraus: irreversible measurement (m branch)");
    diag = detail::diag2(std::sqrt(1.0 - meas.p), std::sqrt(1.0 - meas.q));
    factor = std::sqrt((1.0 - meas.p) * (1.0 - meas.q));
  } else {
    if (meas.p <= 0.0 || meas.q <= 0.0)
      throw IrreversibleMeasurementError(
          "reversal_kraus: irreversible measurement (mbar branch)");
    diag = detail::diag2(std::sqrt(meas.p), std::sqrt(meas.q));
    factor = std::sqrt(meas.p * meas.q);
  }
  const OperatorMatrix r = detail::rotate_frame(meas, diag);
  const auto [m, mbar] = kraus_pair(meas);
  const OperatorMatrix prod = r * (outcome == Outcome::m ? m : mbar);
  if (max_abs_diff(prod, OperatorMatrix::identity(2).scaled({factor, 0.0})) > kTol)
    throw SimError("reversal_kraus: proportionality check failed");
  return r;
}

// Post-selected reversal branch: the physical X, measure, X sequence with
// the stated outcome of the middle measurement.
inline Branch reversal_branch(const StateVector& s, const PartialMeasurement& meas,
                              Outcome outcome = Outcome::m) {
  const OperatorMatrix r = reversal_kraus(meas, outcome);
  const StateVector raw = apply_op(s, r, {meas.target});
  const double prob = detail::clamp_probability(norm(raw) * norm(raw));
  if (prob <= 1e-15)
    throw ImpossibleBranchError("reversal_branch: impossible branch (zero probability)");
  return Branch{outcome, prob, normalize(raw)};
}

// Measure, then on the null outcome apply the X M_m X reversal. The joint
// success probability is 1 - p independently of the input state; this is
// checked analytically for every call.
inline TrajectoryRecord do_undo(const StateVector& s, const PartialMeasurement& meas,
                                Rng& rng, std::uint64_t seed = 0) {
  if (meas.q != 0.0) throw std::invalid_argument("do_undo: requires q = 0");
  if (meas.p >= 1.0)
    throw IrreversibleMeasurementError("do_undo: irreversible measurement (p = 1)");

  // The reversal flip lives in the measurement frame.
  const OperatorMatrix flip = detail::rotate_frame(meas, gates::x());

  // Analytic survival: P(m) * P(m after the flipped remeasurement) must
  // equal 1 - p.
  const auto [p_m1, p_mbar1] = branch_probabilities(s, meas);
  (void)p_mbar1;
  double survival = 0.0;
  if (p_m1 > 1e-15) {
    const Branch first = apply_branch(s, meas, Outcome::m);
    const StateVector flipped = apply_op(first.post_state, flip, {meas.target});
    const auto [p_m2, p_mbar2] = branch_probabilities(flipped, meas);
    (void)p_mbar2;
    survival = p_m1 * p_m2;
  }
  if (std::abs(survival - (1.0 - meas.p)) > kTol)
    throw SimError("do_undo: analytic survival differs from 1 - p");

  TrajectoryRecord rec;
  rec.seed = seed;
  const Branch first = sample(s, meas, rng);
  rec.steps.push_back({"measure", first.outcome, first.probability});
  rec.joint_probability = first.probability;
  if (first.outcome == Outcome::mbar) {
    rec.final_state = first.post_state;
    rec.survived = false;
    return rec;
  }
  const StateVector flipped = apply_op(first.post_state, flip, {meas.target});
  const Branch second = sample(flipped, meas, rng);
  rec.steps.push_back({"reversal-measure", second.outcome, second.probability});
  rec.joint_probability *= second.probability;
  if (second.outcome == Outcome::mbar) {
    rec.final_state = second.post_state;
    rec.survived = false;
    return rec;
  }
  rec.final_state = apply_op(second.post_state, flip, {meas.target});
  rec.survived = true;
  return rec;
}

// Two-qubit dilation in the basis {|0 m>, |1 m>, |0 mbar>, |1 mbar>}
// (ancilla bit most significant, mbar = 1), acting as
//   U |psi>|m> = M_m |psi>|m> + M_mbar |psi>|mbar>.
inline OperatorMatrix dilation_unitary(const PartialMeasurement& meas) {
  detail::check_strengths(meas);
  const double sq = std::sqrt(meas.q), cq = std::sqrt(1.0 - meas.q);
  const double sp = std::sqrt(meas.p), cp = std::sqrt(1.0 - meas.p);
  OperatorMatrix u(4,
                   {{cq, 0}, {0, 0},  {-sq, 0}, {0, 0},
                    {0, 0},  {cp, 0}, {0, 0},   {-sp, 0},
                    {sq, 0}, {0, 0},  {cq, 0},  {0, 0},
                    {0, 0},  {sp, 0}, {0, 0},   {cp, 0}},
                   true);
  if (!meas.basis_rotation) return u;
  const OperatorMatrix lift = kron(OperatorMatrix::identity(2), *meas.basis_rotation);
  return lift * u * lift.adjoint();
}

struct DilatedMeasurement {
  double p_m;
  double p_mbar;
  std::optional<StateVector> post_m;     // absent on a zero-probability branch
  std::optional<StateVector> post_mbar;
};

// Runs the measurement as ancilla dilation: append |m>, apply the dilation
// unitary, read the ancilla sharply. Must reproduce the direct POVM path.
inline DilatedMeasurement dilated_measure(const StateVector& s,
                                          const PartialMeasurement& meas) {
  if (std::abs(norm(s) - 1.0) > 1e-9)
    throw std::invalid_argument("dilated_measure: state is not normalized");
  const int n = s.n_qubits();
  const StateVector joint = tensor(s, StateVector::basis(1, 0));
  const StateVector evolved =
      apply_op(joint, dilation_unitary(meas), {n, meas.target});

  DilatedMeasurement out{0.0, 0.0, std::nullopt, std::nullopt};
  // Ancilla is the last qubit: system index i maps to joint indices 2i, 2i+1.
  std::vector<Amplitude> amp_m(s.dim()), amp_mbar(s.dim());
  double w_m = 0.0, w_mbar = 0.0;
  for (std::size_t i = 0; i < s.dim(); ++i) {
    amp_m[i] = evolved.amp(2 * i);
    amp_mbar[i] = evolved.amp(2 * i + 1);
    w_m += std::norm(amp_m[i]);
    w_mbar += std::norm(amp_mbar[i]);
  }
  out.p_m = detail::clamp_probability(w_m);
  out.p_mbar = detail::clamp_probability(w_mbar);
  if (out.p_m > 1e-15)
    out.post_m = normalize(StateVector::from_amplitudes(n, std::move(amp_m)));
  if (out.p_mbar > 1e-15)
    out.post_mbar = normalize(StateVector::from_amplitudes(n, std::move(amp_mbar)));
  return out;
}

// Natural-log binary entropy of the outcome distribution; x ln x -> 0 at 0.
inline double measurement_entropy(const StateVector& s, const PartialMeasurement& meas) {
  if (meas.q != 0.0) throw std::invalid_argument("measurement_entropy: requires q = 0");
  const auto [p_m, p_mbar] = branch_probabilities(s, meas);
  double h = 0.0;
  if (p_m > 0.0) h -= p_m * std::log(p_m);
  if (p_mbar > 0.0) h -= p_mbar * std::log(p_mbar);
  return h;
}

// Same-strength measurement along the rotated axis: Kraus pair u M u†.
inline PartialMeasurement rotated(const PartialMeasurement& meas, const OperatorMatrix& u) {
  if (u.dim() != 2) throw std::invalid_argument("rotated: rotation must be 2x2");
  if (max_abs_diff(u.adjoint() * u, OperatorMatrix::identity(2)) > kTol)
    throw std::invalid_argument("rotated: rotation must be unitary");
  PartialMeasurement out = meas;
  out.basis_rotation =
      meas.basis_rotation ? (u * *meas.basis_rotation) : u;

  // Hadamard case: M_mbar = sqrt(p)|-><-|, M_m = |+><+| + sqrt(1-p)|-><-|.
  if (meas.q == 0.0 && detail::rotation_is_identity(meas) &&
      max_abs_diff(u, gates::h()) <= kTol) {
    const auto [m, mbar] = kraus_pair(out);
    const double half = 0.5;
    const OperatorMatrix minus_proj(2, {{half, 0}, {-half, 0}, {-half, 0}, {half, 0}});
    const OperatorMatrix plus_proj(2, {{half, 0}, {half, 0}, {half, 0}, {half, 0}});
    const double sp = std::sqrt(meas.p), cp = std::sqrt(1.0 - meas.p);
    if (max_abs_diff(mbar, minus_proj.scaled({sp, 0.0})) > kTol ||
        max_abs_diff(m, plus_proj + minus_proj.scaled({cp, 0.0})) > kTol)
      throw SimError("rotated: Hadamard-frame Kraus form mismatch");
  }
  return out;
}

// Composition of two single-strength measurements against the two-strength
// forms, reported under both index orders.
struct CompositionReport {
  double p = 0.0;
  double q = 0.0;
  double m_dev_direct = 0.0;     // X M_m(p) X M_m(q)  vs  M_m(p, q)
  double m_dev_swapped = 0.0;    //                    vs  M_m(q, p)
  double mbar_dev_direct = 0.0;  // three-term sum     vs  M_mbar(p, q)
  double mbar_dev_swapped = 0.0;
  double cross_term_max = 0.0;   // X M_mbar(p) X M_mbar(q), expected zero
  bool m_matches_direct() const { return m_dev_direct <= kTol; }
  bool m_matches_swapped() const { return m_dev_swapped <= kTol; }
  bool mbar_matches_direct() const { return mbar_dev_direct <= kTol; }
  bool mbar_matches_swapped() const { return mbar_dev_swapped <= kTol; }
};

inline CompositionReport compose_identity_check(double p, double q) {
  const PartialMeasurement mp{p, 0.0, 0, std::nullopt};
  const PartialMeasurement mq{q, 0.0, 0, std::nullopt};
  const auto [m_p, mbar_p] = kraus_pair(mp);
  const auto [m_q, mbar_q] = kraus_pair(mq);
  const OperatorMatrix& x = gates::x();

  const OperatorMatrix m_product = x * m_p * x * m_q;
  const OperatorMatrix mbar_sum =
      x * mbar_p * x * m_q + x * m_p * x * mbar_q + x * mbar_p * x * mbar_q;
  const OperatorMatrix cross = x * mbar_p * x * mbar_q;

  const PartialMeasurement direct{p, q, 0, std::nullopt};
  const PartialMeasurement swapped{q, p, 0, std::nullopt};
  const auto [m_pq, mbar_pq] = kraus_pair(direct);
  const auto [m_qp, mbar_qp] = kraus_pair(swapped);

  CompositionReport rep;
  rep.p = p;
  rep.q = q;
  rep.m_dev_direct = max_abs_diff(m_product, m_pq);
  rep.m_dev_swapped = max_abs_diff(m_product, m_qp);
  rep.mbar_dev_direct = max_abs_diff(mbar_sum, mbar_pq);
  rep.mbar_dev_swapped = max_abs_diff(mbar_sum, mbar_qp);
  rep.cross_term_max = max_abs_diff(cross, OperatorMatrix::identity(2).scaled({0.0, 0.0}));
  return rep;
}

inline double p_from_tunneling(const TunnelingModel& model) {
  if (model.gamma < 0.0 || model.tau < 0.0)
    throw std::invalid_argument("p_from_tunneling: gamma and tau must be nonnegative");
  const double p = 1.0 - std::exp(-model.gamma * model.tau);
  return std::min(p, 1.0);
}

}  // namespace pmeas
