// entanglement.hpp
// Bell states, pure-state concurrence, CHSH figure of merit, and Bell-basis
// machinery for two- and four-qubit states.
#pragma once

#include <array>
#include <cmath>
#include <utility>

#include "pmeas/qcore.hpp"

namespace pmeas {

enum class BellLabel { PhiPlus, PhiMinus, PsiPlus, PsiMinus };

inline constexpr std::array<BellLabel, 4> kBellLabels = {
    BellLabel::PhiPlus, BellLabel::PhiMinus, BellLabel::PsiPlus, BellLabel::PsiMinus};

inline const char* bell_name(BellLabel label) {
  switch (label) {
    case BellLabel::PhiPlus: return "phi+";
    case BellLabel::PhiMinus: return "phi-";
    case BellLabel::PsiPlus: return "psi+";
    case BellLabel::PsiMinus: return "psi-";
  }
  return "?";
}

// Amplitude of |b1 b2> in the Bell state `label`.
inline double bell_amplitude(BellLabel label, int b1, int b2) {
  const double r = 1.0 / std::sqrt(2.0);
  switch (label) {
    case BellLabel::PhiPlus: return b1 == b2 ? r : 0.0;
    case BellLabel::PhiMinus: return b1 == b2 ? (b1 == 0 ? r : -r) : 0.0;
    case BellLabel::PsiPlus: return b1 != b2 ? r : 0.0;
    case BellLabel::PsiMinus: return b1 != b2 ? (b1 == 0 ? r : -r) : 0.0;
  }
  return 0.0;
}

inline StateVector bell_state(BellLabel label) {
  std::vector<Amplitude> amps(4);
  for (int b1 = 0; b1 < 2; ++b1)
    for (int b2 = 0; b2 < 2; ++b2)
      amps[static_cast<std::size_t>(b1 * 2 + b2)] = {bell_amplitude(label, b1, b2), 0.0};
  return StateVector::from_amplitudes(2, std::move(amps));
}

// C(psi) = |<psi| sigma_y (x) sigma_y |psi*>| for a normalized 2-qubit state.
inline double concurrence(const StateVector& s) {
  if (s.n_qubits() != 2)
    throw std::invalid_argument("concurrence: state must have exactly 2 qubits");
  if (std::abs(norm(s) - 1.0) > 1e-9)
    throw std::invalid_argument("concurrence: state is not normalized");
  StateVector t = conjugate(s);
  t = apply_op(t, gates::y(), {0});
  t = apply_op(t, gates::y(), {1});
  return std::abs(inner(s, t));
}

// S = <sx sp> + <sx sm> + <sy sm> - <sy sp> with sp/sm = (sx ± sy)/sqrt(2).
// The sign combination is anchored so that S = 2 sqrt(2) C on partially
// measured phi+ states; other Bell labels need different settings.
inline double chsh_value(const StateVector& s) {
  if (s.n_qubits() != 2)
    throw std::invalid_argument("chsh_value: state must have exactly 2 qubits");
  const double xs_p = expectation(s, kron(gates::x(), gates::sigma_plus()), {0, 1});
  const double xs_m = expectation(s, kron(gates::x(), gates::sigma_minus()), {0, 1});
  const double ys_p = expectation(s, kron(gates::y(), gates::sigma_plus()), {0, 1});
  const double ys_m = expectation(s, kron(gates::y(), gates::sigma_minus()), {0, 1});
  return xs_p + xs_m + ys_m - ys_p;
}

// Coefficients of a 4-qubit state in the |Bell>_(pair1) (x) |Bell>_(pair2)
// basis, indexed [label1][label2] in kBellLabels order.
using BellExpansion = std::array<std::array<Amplitude, 4>, 4>;

inline BellExpansion bell_expansion(const StateVector& s,
                                    std::pair<int, int> pair1, std::pair<int, int> pair2) {
  if (s.n_qubits() != 4)
    throw std::invalid_argument("bell_expansion: state must have exactly 4 qubits");
  const std::array<int, 4> qubits = {pair1.first, pair1.second, pair2.first, pair2.second};
  std::array<bool, 4> seen{};
  for (int qb : qubits) {
    if (qb < 0 || qb > 3) throw std::out_of_range("bell_expansion: qubit out of range");
    if (seen[static_cast<std::size_t>(qb)])
      throw std::invalid_argument("bell_expansion: duplicate qubit in partition");
    seen[static_cast<std::size_t>(qb)] = true;
  }
  BellExpansion coeffs{};
  for (std::size_t l1 = 0; l1 < 4; ++l1)
    for (std::size_t l2 = 0; l2 < 4; ++l2) {
      Amplitude acc{0.0, 0.0};
      for (std::size_t idx = 0; idx < 16; ++idx) {
        const int b1 = detail::bit_of(idx, qubits[0], 4);
        const int b2 = detail::bit_of(idx, qubits[1], 4);
        const int b3 = detail::bit_of(idx, qubits[2], 4);
        const int b4 = detail::bit_of(idx, qubits[3], 4);
        const double bra =
            bell_amplitude(kBellLabels[l1], b1, b2) * bell_amplitude(kBellLabels[l2], b3, b4);
        if (bra != 0.0) acc += bra * s.amp(idx);
      }
      coeffs[l1][l2] = acc;
    }
  return coeffs;
}

enum class BasisChangeDirection { BellToComputational, ComputationalToBell };

// V = (H (x) I) CNOT maps phi+ -> |00>, psi+ -> |01>, phi- -> |10>,
// psi- -> |11>, all with phase +1.
inline OperatorMatrix bell_basis_change(
    BasisChangeDirection direction = BasisChangeDirection::BellToComputational) {
  const OperatorMatrix v = kron(gates::h(), OperatorMatrix::identity(2)) * gates::cnot();
  return direction == BasisChangeDirection::BellToComputational ? v : v.adjoint();
}

// Computational label of each Bell state under bell_basis_change.
inline std::size_t bell_computational_index(BellLabel label) {
  switch (label) {
    case BellLabel::PhiPlus: return 0;
    case BellLabel::PsiPlus: return 1;
    case BellLabel::PhiMinus: return 2;
    case BellLabel::PsiMinus: return 3;
  }
  return 0;
}

}  // namespace pmeas
