// protocols.hpp
// The three nonlocal thought experiments as executable pipelines: EPR with
// partial measurement and reversal, teleportation with partial measurements,
// and entanglement swapping with projective or partial Bell measurements.
//
// Deterministic pipelines follow the post-selected null-outcome branch and
// record its probability; Monte Carlo mode samples every outcome with no
// post-selection. Wire order for teleportation is (Alice's unknown qubit,
// Alice's EPR half, Bob's qubit) = (0, 1, 2); for swapping, (a, b, c, d) =
// (0, 1, 2, 3) with the Bell measurement on (b, c).
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pmeas/entanglement.hpp"
#include "pmeas/povm.hpp"
#include "pmeas/qcore.hpp"
#include "pmeas/rng.hpp"

namespace pmeas {

enum class Scenario { Epr, Teleport, Swap };
enum class Ordering { AliceFirst, BobFirst };

struct ScenarioConfig {
  Scenario scenario = Scenario::Epr;
  double p = 0.5;
  double p_tilde = 0.5;                 // second strength (teleportation)
  double theta = std::numbers::pi / 2;  // input Bloch angles (teleportation)
  double phi = 0.0;
  Ordering ordering = Ordering::AliceFirst;
  std::optional<int> bob_measures;      // sharp sigma_z outcome 0 or 1
  bool destructive = true;              // discard switch-branch states in reports
  std::uint64_t trajectories = 0;
  std::uint64_t seed = 0;
};

struct StepRecord {
  std::string label;
  StateVector state;
  std::vector<std::pair<std::string, double>> probabilities;
};

struct PatternStat {
  double probability = 0.0;  // branch-tracked joint probability
  std::uint64_t count = 0;   // Monte Carlo tally
};

struct MonteCarloTally {
  std::uint64_t trajectories = 0;
  std::uint64_t seed = 0;
  std::map<std::string, PatternStat> patterns;
  std::uint64_t survivors = 0;
  double survival_rate = 0.0;
};

struct ScenarioReport {
  std::string scenario;
  std::vector<StepRecord> steps;
  std::vector<std::pair<std::string, double>> metrics;
  MonteCarloTally tally;

  double metric(const std::string& name) const {
    for (const auto& [key, value] : metrics)
      if (key == name) return value;
    throw std::out_of_range("ScenarioReport: no metric named " + name);
  }
};

namespace detail {

inline void ensure(bool condition, const char* message) {
  if (!condition) throw SimError(message);
}

inline double max_state_diff(const StateVector& a, const StateVector& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) m = std::max(m, std::abs(a.amp(i) - b.amp(i)));
  return m;
}

struct ReportBuilder {
  ScenarioReport report;

  explicit ReportBuilder(std::string scenario) { report.scenario = std::move(scenario); }

  void step(std::string label, const StateVector& state,
            std::vector<std::pair<std::string, double>> probabilities = {}) {
    ensure(std::abs(norm(state) - 1.0) <= 1e-12, "scenario: recorded state not normalized");
    report.steps.push_back({std::move(label), state, std::move(probabilities)});
  }

  void metric(std::string name, double value) {
    report.metrics.emplace_back(std::move(name), value);
  }
};

// <ket| rho_qubit |ket> for a single qubit of a pure multi-qubit state.
inline double marginal_fidelity(const StateVector& s, int qubit, const StateVector& ket) {
  if (ket.n_qubits() != 1)
    throw std::invalid_argument("marginal_fidelity: reference must be 1 qubit");
  const int n = s.n_qubits();
  const std::size_t bit = std::size_t{1} << (n - 1 - qubit);
  double f = 0.0;
  for (std::size_t rest = 0; rest < s.dim(); ++rest) {
    if (rest & bit) continue;
    const Amplitude overlap =
        std::conj(ket.amp(0)) * s.amp(rest) + std::conj(ket.amp(1)) * s.amp(rest | bit);
    f += std::norm(overlap);
  }
  return f;
}

// Concurrence of the pair1 marginal for 4-qubit states whose Bell expansion
// is diagonal; the reduced state is then Bell-diagonal and the concurrence
// has the closed form max(0, 2 max_weight - 1). The diagonality is asserted,
// so this never silently evaluates a state outside its validity domain.
inline double bell_diagonal_concurrence(const StateVector& s, std::pair<int, int> pair1,
                                        std::pair<int, int> pair2) {
  const BellExpansion coeffs = bell_expansion(s, pair1, pair2);
  double max_weight = 0.0;
  double off_diag = 0.0;
  for (std::size_t l = 0; l < 4; ++l)
    for (std::size_t m = 0; m < 4; ++m) {
      Amplitude entry{0.0, 0.0};
      for (std::size_t k = 0; k < 4; ++k) entry += coeffs[l][k] * std::conj(coeffs[m][k]);
      if (l == m)
        max_weight = std::max(max_weight, entry.real());
      else
        off_diag = std::max(off_diag, std::abs(entry));
    }
  ensure(off_diag <= 1e-10, "bell_diagonal_concurrence: reduced state not Bell-diagonal");
  return std::max(0.0, 2.0 * max_weight - 1.0);
}

// Alice's sharp sigma_x readout as a full-strength measurement rotated by H:
// the null outcome is +x, the switch outcome is -x.
inline PartialMeasurement projective_x(int target) {
  return rotated({1.0, 0.0, target, std::nullopt}, gates::h());
}

inline PartialMeasurement projective_z(int target) {
  return PartialMeasurement{1.0, 0.0, target, std::nullopt};
}

inline Outcome z_outcome(int value) { return value == 0 ? Outcome::m : Outcome::mbar; }

// --- Monte Carlo branch trees -------------------------------------------

struct BranchNode {
  std::string token;
  double probability = 1.0;  // conditional on the parent
  StateVector state;
  bool survived = false;
  std::vector<BranchNode> children;
};

using NodeBuilder = std::function<void(BranchNode&)>;

// Adds up to two children for a measurement at the current node. Children
// appear in the fixed order (mbar, m) so that sampling is reproducible.
inline void add_measurement(BranchNode& parent, const PartialMeasurement& meas,
                            const std::string& m_token, const std::string& mbar_token,
                            const NodeBuilder& continue_m = {},
                            const NodeBuilder& continue_mbar = {}) {
  const auto [p_m, p_mbar] = branch_probabilities(parent.state, meas);
  if (p_mbar > 1e-15) {
    const Branch b = apply_branch(parent.state, meas, Outcome::mbar);
    parent.children.push_back({mbar_token, p_mbar, b.post_state, parent.survived, {}});
    if (continue_mbar) continue_mbar(parent.children.back());
  }
  if (p_m > 1e-15) {
    const Branch b = apply_branch(parent.state, meas, Outcome::m);
    parent.children.push_back({m_token, p_m, b.post_state, parent.survived, {}});
    if (continue_m) continue_m(parent.children.back());
  }
}

// Reversal stage: flip, measure, and a final flip on the null outcome. The
// flip is the X gate carried into the measurement frame.
inline void add_reversal(BranchNode& parent, const PartialMeasurement& meas,
                         const std::string& m_token, const std::string& mbar_token,
                         const NodeBuilder& continue_m = {}) {
  const OperatorMatrix flip = pmeas::detail::rotate_frame(meas, gates::x());
  const StateVector flipped = apply_op(parent.state, flip, {meas.target});
  const auto [p_m, p_mbar] = branch_probabilities(flipped, meas);
  if (p_mbar > 1e-15) {
    const Branch b = apply_branch(flipped, meas, Outcome::mbar);
    parent.children.push_back({mbar_token, p_mbar, b.post_state, parent.survived, {}});
  }
  if (p_m > 1e-15) {
    const Branch b = apply_branch(flipped, meas, Outcome::m);
    const StateVector undone = apply_op(b.post_state, flip, {meas.target});
    parent.children.push_back({m_token, p_m, undone, parent.survived, {}});
    if (continue_m) continue_m(parent.children.back());
  }
}

inline void collect_leaves(const BranchNode& node, const std::string& prefix, double joint,
                           std::map<std::string, std::pair<double, bool>>& out) {
  const std::string path =
      node.token.empty() ? prefix : (prefix.empty() ? node.token : prefix + "." + node.token);
  const double prob = joint * node.probability;
  if (node.children.empty()) {
    out[path] = {prob, node.survived};
    return;
  }
  for (const BranchNode& child : node.children) collect_leaves(child, path, prob, out);
}

inline std::pair<std::string, bool> sample_tree(const BranchNode& root, Rng& rng) {
  const BranchNode* cur = &root;
  std::string pattern;
  bool survived = root.survived;
  while (!cur->children.empty()) {
    const double u = rng.uniform();
    double acc = 0.0;
    const BranchNode* pick = &cur->children.back();
    for (const BranchNode& child : cur->children) {
      acc += child.probability;
      if (u < acc) {
        pick = &child;
        break;
      }
    }
    cur = pick;
    if (!pattern.empty()) pattern += ".";
    pattern += cur->token;
    survived = cur->survived;
  }
  return {pattern, survived};
}

}  // namespace detail

inline void check_scenario_config(const ScenarioConfig& cfg) {
  const bool swap = cfg.scenario == Scenario::Swap;
  const double p_max_exclusive = swap ? std::nextafter(1.0, 2.0) : 1.0;
  if (cfg.p < 0.0 || cfg.p >= p_max_exclusive)
    throw std::invalid_argument("ScenarioConfig: p out of range");
  if (cfg.scenario == Scenario::Teleport && (cfg.p_tilde < 0.0 || cfg.p_tilde >= 1.0))
    throw std::invalid_argument("ScenarioConfig: p_tilde out of range");
  if (cfg.theta < 0.0 || cfg.theta > std::numbers::pi)
    throw std::invalid_argument("ScenarioConfig: theta out of range");
  if (cfg.phi <= -std::numbers::pi || cfg.phi > std::numbers::pi)
    throw std::invalid_argument("ScenarioConfig: phi out of range");
  if (cfg.bob_measures && *cfg.bob_measures != 0 && *cfg.bob_measures != 1)
    throw std::invalid_argument("ScenarioConfig: bob_measures must be 0 or 1");
}

// EPR with a partial measurement by Alice, reversal, then sharp sigma_x on
// both sides. Records P(Bob sigma_z = 0 | m) = 1/(2 - p), the entanglement
// drop C = 2 sqrt(1-p)/(2-p), the restoration to C = 1, and the perfect
// sigma_x correlation after reversal.
inline ScenarioReport epr_scenario(const ScenarioConfig& cfg) {
  check_scenario_config(cfg);
  detail::ReportBuilder b("epr");
  const StateVector initial = bell_state(BellLabel::PhiPlus);
  b.step("initial", initial);
  b.metric("concurrence_initial", concurrence(initial));
  b.metric("chsh_initial", chsh_value(initial));

  const PartialMeasurement meas{cfg.p, 0.0, 0, std::nullopt};
  const auto [p_m, p_mbar] = branch_probabilities(initial, meas);
  const Branch alice = apply_branch(initial, meas, Outcome::m);
  b.step("alice_partial_m", alice.post_state, {{"m", p_m}, {"mbar", p_mbar}});
  if (!cfg.destructive && p_mbar > 1e-15)
    b.step("alice_partial_mbar", apply_branch(initial, meas, Outcome::mbar).post_state,
           {{"mbar", p_mbar}});

  const double bob_z0 = bit_probability(alice.post_state, 1, 0);
  detail::ensure(std::abs(bob_z0 - 1.0 / (2.0 - cfg.p)) <= 1e-12,
                 "epr: P(Bob z=0 | m) differs from 1/(2-p)");
  b.metric("p_alice_m", p_m);
  b.metric("p_bob_z0_given_m", bob_z0);
  b.metric("concurrence_after_partial", concurrence(alice.post_state));
  b.metric("chsh_after_partial", chsh_value(alice.post_state));
  b.metric("chsh_abs_after_partial", std::abs(chsh_value(alice.post_state)));

  const Branch reversed = reversal_branch(alice.post_state, meas, Outcome::m);
  b.step("alice_reversal_m", reversed.post_state,
         {{"m", reversed.probability}, {"mbar", 1.0 - reversed.probability}});
  const double c_restored = concurrence(reversed.post_state);
  detail::ensure(std::abs(c_restored - 1.0) <= 1e-12,
                 "epr: reversal did not restore full entanglement");
  b.metric("p_reversal_m_given_m", reversed.probability);
  b.metric("concurrence_after_reversal", c_restored);
  b.metric("chsh_after_reversal", chsh_value(reversed.post_state));
  b.metric("survival_probability_analytic", p_m * reversed.probability);

  const PartialMeasurement alice_x = detail::projective_x(0);
  const auto [px_plus, px_minus] = branch_probabilities(reversed.post_state, alice_x);
  const Branch alice_plus = apply_branch(reversed.post_state, alice_x, Outcome::m);
  const Branch alice_minus = apply_branch(reversed.post_state, alice_x, Outcome::mbar);
  b.step("alice_projective_x_plus", alice_plus.post_state,
         {{"+x", px_plus}, {"-x", px_minus}});
  const double r = 1.0 / std::sqrt(2.0);
  const StateVector plus = StateVector::from_amplitudes(1, {{r, 0}, {r, 0}});
  const StateVector minus = StateVector::from_amplitudes(1, {{r, 0}, {-r, 0}});
  b.metric("p_alice_x_plus", px_plus);
  b.metric("p_bob_x_plus_given_alice_plus",
           detail::marginal_fidelity(alice_plus.post_state, 1, plus));
  b.metric("p_bob_x_minus_given_alice_minus",
           detail::marginal_fidelity(alice_minus.post_state, 1, minus));
  return b.report;
}

namespace detail {

// The four-branch state produced by Alice's CNOT + H encoding of
// alpha|0> + beta|1> against a phi+ pair.
inline StateVector teleport_four_branch(const Amplitude& alpha, const Amplitude& beta) {
  const double half = 0.5;
  std::vector<Amplitude> amps(8);
  amps[0] = alpha * half;   // |000>
  amps[1] = beta * half;    // |001>
  amps[2] = beta * half;    // |010>
  amps[3] = alpha * half;   // |011>
  amps[4] = alpha * half;   // |100>
  amps[5] = -beta * half;   // |101>
  amps[6] = -beta * half;   // |110>
  amps[7] = alpha * half;   // |111>
  return StateVector::from_amplitudes(3, std::move(amps));
}

// The same state after null-outcome partial measurements of strengths
// (p, pt) on Alice's two qubits, normalized.
inline StateVector teleport_weighted(const Amplitude& alpha, const Amplitude& beta, double p,
                                     double pt) {
  const double w01 = std::sqrt(1.0 - pt);
  const double w10 = std::sqrt(1.0 - p);
  const double w11 = std::sqrt((1.0 - p) * (1.0 - pt));
  std::vector<Amplitude> amps(8);
  amps[0] = alpha;
  amps[1] = beta;
  amps[2] = beta * w01;
  amps[3] = alpha * w01;
  amps[4] = alpha * w10;
  amps[5] = -beta * w10;
  amps[6] = -beta * w11;
  amps[7] = alpha * w11;
  return normalize(StateVector::from_amplitudes(3, std::move(amps)));
}

// Bob's collapsed state, Eq-level: for outcome 0 the unnormalized state is
// alpha|00> + sqrt(1-pt) beta|01> + sqrt(1-p) alpha|10>
// - sqrt((1-p)(1-pt)) beta|11>, with Bob's qubit in |0>.
inline StateVector teleport_collapsed(const Amplitude& alpha, const Amplitude& beta, double p,
                                      double pt) {
  const double w01 = std::sqrt(1.0 - pt);
  const double w10 = std::sqrt(1.0 - p);
  const double w11 = std::sqrt((1.0 - p) * (1.0 - pt));
  std::vector<Amplitude> amps(8, Amplitude{0.0, 0.0});
  amps[0] = alpha;
  amps[2] = beta * w01;
  amps[4] = alpha * w10;
  amps[6] = -beta * w11;
  return normalize(StateVector::from_amplitudes(3, std::move(amps)));
}

// Eq-level final state for Bob outcome 0: alpha|+>|0> + beta|->|1>, Bob |0>.
inline StateVector teleport_final(const Amplitude& alpha, const Amplitude& beta) {
  const double r = 1.0 / std::sqrt(2.0);
  std::vector<Amplitude> amps(8, Amplitude{0.0, 0.0});
  amps[0] = alpha * r;   // |000>
  amps[2] = beta * r;    // |010>
  amps[4] = alpha * r;   // |100>
  amps[6] = -beta * r;   // |110>
  return StateVector::from_amplitudes(3, std::move(amps));
}

}  // namespace detail

// Teleportation with partial measurements of strengths (p, p_tilde) on
// Alice's qubits. Every displayed intermediate state is asserted
// coefficient-exactly; Alice's reversal restores the full three-qubit state;
// Bob's sharp measurement commutes with Alice's reversal.
inline ScenarioReport teleport_scenario(const ScenarioConfig& cfg) {
  check_scenario_config(cfg);
  detail::ReportBuilder b("teleport");
  const Amplitude alpha{std::cos(cfg.theta / 2.0), 0.0};
  const Amplitude beta{std::sin(cfg.theta / 2.0) * std::cos(cfg.phi),
                       std::sin(cfg.theta / 2.0) * std::sin(cfg.phi)};
  const StateVector psi = StateVector::from_amplitudes(1, {alpha, beta});
  const StateVector initial = tensor(psi, bell_state(BellLabel::PhiPlus));
  b.step("initial", initial);

  StateVector encoded = apply_op(initial, gates::cnot(), {0, 1});
  encoded = apply_op(encoded, gates::h(), {0});
  detail::ensure(detail::max_state_diff(encoded, detail::teleport_four_branch(alpha, beta)) <=
                     1e-12,
                 "teleport: encoding does not produce the four-branch state");
  b.step("encoded", encoded);

  const PartialMeasurement meas_p{cfg.p, 0.0, 0, std::nullopt};
  const PartialMeasurement meas_pt{cfg.p_tilde, 0.0, 1, std::nullopt};
  const Branch do1 = apply_branch(encoded, meas_p, Outcome::m);
  const Branch do2 = apply_branch(do1.post_state, meas_pt, Outcome::m);
  const double p_mm = do1.probability * do2.probability;
  detail::ensure(detail::max_state_diff(
                     do2.post_state, detail::teleport_weighted(alpha, beta, cfg.p,
                                                               cfg.p_tilde)) <= 1e-12,
                 "teleport: weighted state mismatch after the null outcomes");
  b.step("partial_mm", do2.post_state, {{"m.m", p_mm}});
  b.metric("p_mm", p_mm);
  b.metric("bob_fidelity_after_partial",
           detail::marginal_fidelity(do2.post_state, 2, psi));

  const Branch undo1 = reversal_branch(do2.post_state, meas_p, Outcome::m);
  const Branch undo2 = reversal_branch(undo1.post_state, meas_pt, Outcome::m);
  detail::ensure(detail::max_state_diff(undo2.post_state, encoded) <= 1e-12,
                 "teleport: reversal did not restore the four-branch state");
  b.step("reversed", undo2.post_state,
         {{"m.m", undo1.probability * undo2.probability}});
  b.metric("p_reversal_mm_given_mm", undo1.probability * undo2.probability);
  b.metric("survival_probability_analytic",
           p_mm * undo1.probability * undo2.probability);
  b.metric("bob_fidelity_after_reversal",
           detail::marginal_fidelity(undo2.post_state, 2, psi));

  StateVector current = undo2.post_state;
  if (cfg.bob_measures) {
    const int outcome = *cfg.bob_measures;
    const PartialMeasurement bob_z = detail::projective_z(2);
    const Outcome bob_outcome = detail::z_outcome(outcome);

    // Alice-first: reversal (already applied) and then Bob's collapse.
    const Branch alice_first = apply_branch(undo2.post_state, bob_z, bob_outcome);
    // Bob-first: collapse the weighted state, then Alice reverses.
    const Branch bob_collapse = apply_branch(do2.post_state, bob_z, bob_outcome);
    if (outcome == 0)
      detail::ensure(
          detail::max_state_diff(bob_collapse.post_state,
                                 detail::teleport_collapsed(alpha, beta, cfg.p,
                                                            cfg.p_tilde)) <= 1e-12,
          "teleport: collapsed state mismatch");
    const Branch r1 = reversal_branch(bob_collapse.post_state, meas_p, Outcome::m);
    const Branch r2 = reversal_branch(r1.post_state, meas_pt, Outcome::m);

    const double ordering_diff =
        detail::max_state_diff(alice_first.post_state, r2.post_state);
    detail::ensure(ordering_diff <= 1e-12,
                   "teleport: alice-first and bob-first orderings disagree");
    b.metric("ordering_agreement_max_diff", ordering_diff);

    current = cfg.ordering == Ordering::AliceFirst ? alice_first.post_state
                                                   : r2.post_state;
    if (outcome == 0)
      detail::ensure(detail::max_state_diff(
                         current, detail::teleport_final(alpha, beta)) <= 1e-12,
                     "teleport: final state differs from alpha|+>|0> + beta|->|1>");
    const double p_bob = cfg.ordering == Ordering::AliceFirst ? alice_first.probability
                                                              : bob_collapse.probability;
    b.step(outcome == 0 ? "bob_measured_z0" : "bob_measured_z1", current,
           {{outcome == 0 ? "z0" : "z1", p_bob}});
    b.metric("p_bob_outcome_after_reversal", alice_first.probability);
    b.metric("p_bob_outcome_before_reversal", bob_collapse.probability);
  }

  StateVector decoded = apply_op(current, gates::h(), {0});
  decoded = apply_op(decoded, gates::cnot(), {0, 1});
  b.step("decoded", decoded);
  b.metric("alice_decode_fidelity", detail::marginal_fidelity(decoded, 0, psi));
  if (!cfg.bob_measures) {
    detail::ensure(detail::max_state_diff(decoded, initial) <= 1e-12,
                   "teleport: decode did not invert the encoding");
  } else {
    // Decode disentangles for either of Bob's outcomes: Alice's second qubit
    // and Bob's both end up in |outcome>.
    const int outcome = *cfg.bob_measures;
    const StateVector expect = tensor(
        tensor(psi, StateVector::basis(1, outcome)), StateVector::basis(1, outcome));
    detail::ensure(detail::max_state_diff(decoded, expect) <= 1e-12,
                   "teleport: decode did not recover the input state");
    if (outcome == 0) b.metric("bob_final_prob_zero", bit_probability(decoded, 2, 0));
  }
  return b.report;
}

// Entanglement swapping on two singlet pairs. The projective section reads
// all four Bell outcomes on (b, c); the partial section runs the partial
// Bell measurement (basis change + two partial measurements + inverse basis
// change), post-selected on (m, m), then reverses it.
inline ScenarioReport swap_scenario(const ScenarioConfig& cfg) {
  check_scenario_config(cfg);
  detail::ReportBuilder b("swap");
  const StateVector initial =
      tensor(bell_state(BellLabel::PsiMinus), bell_state(BellLabel::PsiMinus));
  b.step("initial", initial);
  b.metric("concurrence_ad_initial",
           detail::bell_diagonal_concurrence(initial, {0, 3}, {1, 2}));

  // Projective Bell measurement on (b, c) via the expansion coefficients.
  const BellExpansion coeffs = bell_expansion(initial, {0, 3}, {1, 2});
  for (BellLabel outcome : kBellLabels) {
    const std::size_t l2 = static_cast<std::size_t>(outcome);
    double prob = 0.0;
    for (std::size_t l1 = 0; l1 < 4; ++l1) prob += std::norm(coeffs[l1][l2]);
    detail::ensure(std::abs(prob - 0.25) <= 1e-12,
                   "swap: projective Bell outcome probability is not 1/4");
    // Conditional (a, d) state in the Bell basis.
    std::vector<Amplitude> cond(4, Amplitude{0.0, 0.0});
    for (std::size_t l1 = 0; l1 < 4; ++l1) {
      const StateVector bell = bell_state(kBellLabels[l1]);
      for (std::size_t i = 0; i < 4; ++i)
        cond[i] += coeffs[l1][l2] * bell.amp(i) / std::sqrt(prob);
    }
    const StateVector ad_state = StateVector::from_amplitudes(2, std::move(cond));
    const double fid = fidelity(ad_state, bell_state(outcome));
    detail::ensure(std::abs(fid - 1.0) <= 1e-12,
                   "swap: (a, d) did not project onto the matching Bell state");
    const double sign = coeffs[l2][l2].real() >= 0.0 ? 1.0 : -1.0;
    const std::string name = bell_name(outcome);
    b.metric("projective_prob_" + name, prob);
    b.metric("projective_fidelity_" + name, fid);
    b.metric("projective_sign_" + name, sign);
  }

  // Partial Bell measurement of strength p on (b, c).
  const OperatorMatrix v = bell_basis_change(BasisChangeDirection::BellToComputational);
  const OperatorMatrix vinv = bell_basis_change(BasisChangeDirection::ComputationalToBell);
  const PartialMeasurement meas_b{cfg.p, 0.0, 1, std::nullopt};
  const PartialMeasurement meas_c{cfg.p, 0.0, 2, std::nullopt};

  const StateVector rotated_in = apply_op(initial, v, {1, 2});
  const Branch do1 = apply_branch(rotated_in, meas_b, Outcome::m);
  const Branch do2 = apply_branch(do1.post_state, meas_c, Outcome::m);
  const double p_mm = do1.probability * do2.probability;
  const StateVector after = apply_op(do2.post_state, vinv, {1, 2});
  b.step("partial_bell_mm", after, {{"m.m", p_mm}});
  b.metric("p_mm", p_mm);
  b.metric("concurrence_ad_after_partial",
           detail::bell_diagonal_concurrence(after, {0, 3}, {1, 2}));

  if (cfg.p < 1.0) {
    const StateVector rotated_back = apply_op(after, v, {1, 2});
    const Branch undo1 = reversal_branch(rotated_back, meas_b, Outcome::m);
    const Branch undo2 = reversal_branch(undo1.post_state, meas_c, Outcome::m);
    const StateVector restored = apply_op(undo2.post_state, vinv, {1, 2});
    detail::ensure(detail::max_state_diff(restored, initial) <= 1e-12,
                   "swap: reversal did not restore the singlet pair");
    b.step("reversed", restored, {{"m.m", undo1.probability * undo2.probability}});
    b.metric("p_reversal_mm", undo1.probability * undo2.probability);
    const double c_final = detail::bell_diagonal_concurrence(restored, {0, 3}, {1, 2});
    detail::ensure(std::abs(c_final) <= 1e-12,
                   "swap: restored (a, d) concurrence is not zero");
    b.metric("concurrence_ad_after_reversal", c_final);
    b.metric("reversal_performed", 1.0);
  } else {
    b.metric("reversal_performed", 0.0);
  }
  return b.report;
}

inline ScenarioReport scenario_report(const ScenarioConfig& cfg) {
  switch (cfg.scenario) {
    case Scenario::Epr: return epr_scenario(cfg);
    case Scenario::Teleport: return teleport_scenario(cfg);
    case Scenario::Swap: return swap_scenario(cfg);
  }
  throw std::invalid_argument("scenario_report: unknown scenario");
}

namespace detail {

inline BranchNode build_tree(const ScenarioConfig& cfg) {
  switch (cfg.scenario) {
    case Scenario::Epr: {
      BranchNode root{"", 1.0, bell_state(BellLabel::PhiPlus), false, {}};
      const PartialMeasurement meas{cfg.p, 0.0, 0, std::nullopt};
      add_measurement(root, meas, "m", "mbar", [&](BranchNode& after_m) {
        add_reversal(after_m, meas, "m", "mbar", [&](BranchNode& undone) {
          undone.survived = true;
          add_measurement(
              undone, projective_x(0), "+x", "-x",
              [&](BranchNode& ap) {
                add_measurement(ap, projective_x(1), "+x", "-x");
              },
              [&](BranchNode& am) {
                add_measurement(am, projective_x(1), "+x", "-x");
              });
        });
      });
      return root;
    }
    case Scenario::Teleport: {
      const Amplitude alpha{std::cos(cfg.theta / 2.0), 0.0};
      const Amplitude beta{std::sin(cfg.theta / 2.0) * std::cos(cfg.phi),
                           std::sin(cfg.theta / 2.0) * std::sin(cfg.phi)};
      BranchNode root{"", 1.0, teleport_four_branch(alpha, beta), false, {}};
      const PartialMeasurement meas_p{cfg.p, 0.0, 0, std::nullopt};
      const PartialMeasurement meas_pt{cfg.p_tilde, 0.0, 1, std::nullopt};
      const bool bob = cfg.bob_measures.has_value();
      const bool bob_first = bob && cfg.ordering == Ordering::BobFirst;

      const auto add_undo_chain = [&](BranchNode& node) {
        add_reversal(node, meas_p, "m", "mbar", [&](BranchNode& u1) {
          add_reversal(u1, meas_pt, "m", "mbar", [&](BranchNode& u2) {
            u2.survived = true;
            if (bob && !bob_first)
              add_measurement(u2, projective_z(2), "z0", "z1", {}, {});
          });
        });
      };
      add_measurement(root, meas_p, "m", "mbar", [&](BranchNode& d1) {
        add_measurement(d1, meas_pt, "m", "mbar", [&](BranchNode& d2) {
          if (bob_first) {
            add_measurement(
                d2, projective_z(2), "z0", "z1",
                [&](BranchNode& bz) { add_undo_chain(bz); },
                [&](BranchNode& bz) { add_undo_chain(bz); });
          } else {
            add_undo_chain(d2);
          }
        });
      });
      return root;
    }
    case Scenario::Swap: {
      const StateVector initial =
          tensor(bell_state(BellLabel::PsiMinus), bell_state(BellLabel::PsiMinus));
      const OperatorMatrix v =
          bell_basis_change(BasisChangeDirection::BellToComputational);
      BranchNode root{"", 1.0, apply_op(initial, v, {1, 2}), false, {}};
      const PartialMeasurement meas_b{cfg.p, 0.0, 1, std::nullopt};
      const PartialMeasurement meas_c{cfg.p, 0.0, 2, std::nullopt};
      add_measurement(root, meas_b, "m", "mbar", [&](BranchNode& d1) {
        add_measurement(d1, meas_c, "m", "mbar", [&](BranchNode& d2) {
          if (cfg.p >= 1.0) {
            d2.survived = false;
            return;
          }
          add_reversal(d2, meas_b, "m", "mbar", [&](BranchNode& u1) {
            add_reversal(u1, meas_c, "m", "mbar",
                         [&](BranchNode& u2) { u2.survived = true; });
          });
        });
      });
      return root;
    }
  }
  throw std::invalid_argument("build_tree: unknown scenario");
}

}  // namespace detail

// Deterministic report plus a Monte Carlo tally over every outcome pattern,
// with no post-selection. Trajectory i draws from Rng::stream(seed, i).
inline ScenarioReport run_monte_carlo(const ScenarioConfig& cfg) {
  ScenarioReport report = scenario_report(cfg);
  const detail::BranchNode tree = detail::build_tree(cfg);
  std::map<std::string, std::pair<double, bool>> leaves;
  detail::collect_leaves(tree, "", 1.0, leaves);
  double total = 0.0;
  for (const auto& [pattern, leaf] : leaves) {
    report.tally.patterns[pattern] = {leaf.first, 0};
    total += leaf.first;
  }
  detail::ensure(std::abs(total - 1.0) <= 1e-12,
                 "run_monte_carlo: branch probabilities do not sum to 1");

  report.tally.trajectories = cfg.trajectories;
  report.tally.seed = cfg.seed;
  std::uint64_t counted = 0;
  for (std::uint64_t i = 0; i < cfg.trajectories; ++i) {
    Rng rng = Rng::stream(cfg.seed, i);
    const auto [pattern, survived] = detail::sample_tree(tree, rng);
    ++report.tally.patterns.at(pattern).count;
    ++counted;
    if (survived) ++report.tally.survivors;
  }
  detail::ensure(counted == cfg.trajectories, "run_monte_carlo: tally does not add up");
  report.tally.survival_rate =
      cfg.trajectories == 0
          ? 0.0
          : static_cast<double>(report.tally.survivors) / static_cast<double>(cfg.trajectories);
  return report;
}

}  // namespace pmeas
