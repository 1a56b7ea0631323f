// qcore.hpp
// Dense pure-state simulator core: state vectors, operator matrices, gates.
//
// Bit convention: qubit 0 is the leftmost ket symbol and the most significant
// bit of an amplitude index, so |q0 q1 ... q_{n-1}> sits at index
// q0*2^(n-1) + q1*2^(n-2) + ... + q_{n-1}.
//
// States are immutable values; every operation returns a new state.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pmeas {

using Amplitude = std::complex<double>;

inline constexpr int kMaxQubits = 12;
inline constexpr double kTol = 1e-12;

// Runtime physics errors. Caller mistakes (bad indices, dimension
// mismatches) throw std::invalid_argument / std::out_of_range instead.
class SimError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Zero-norm normalization or a zero-probability measurement branch.
class ImpossibleBranchError : public SimError {
 public:
  using SimError::SimError;
};

// Reversal requested for a branch whose Kraus operator has no inverse.
class IrreversibleMeasurementError : public SimError {
 public:
  using SimError::SimError;
};

// Bloch-sphere pole where the azimuthal angle is undefined.
class PoleError : public SimError {
 public:
  using SimError::SimError;
};

namespace detail {

inline void check_finite(const Amplitude& a, const char* what) {
  if (!std::isfinite(a.real()) || !std::isfinite(a.imag()))
    throw std::invalid_argument(std::string(what) + ": non-finite entry");
}

inline int bit_of(std::size_t index, int qubit, int n_qubits) {
  return static_cast<int>((index >> (n_qubits - 1 - qubit)) & 1u);
}

}  // namespace detail

class StateVector {
 public:
  static StateVector zero_state(int n_qubits) { return basis(n_qubits, 0); }

  static StateVector basis(int n_qubits, std::size_t index) {
    check_qubit_count(n_qubits);
    std::vector<Amplitude> amps(std::size_t{1} << n_qubits, Amplitude{0.0, 0.0});
    if (index >= amps.size())
      throw std::out_of_range("StateVector::basis: index out of range");
    amps[index] = Amplitude{1.0, 0.0};
    return StateVector(n_qubits, std::move(amps));
  }

  // Accepts unnormalized vectors; Kraus branches are built through here.
  static StateVector from_amplitudes(int n_qubits, std::vector<Amplitude> amps) {
    check_qubit_count(n_qubits);
    if (amps.size() != (std::size_t{1} << n_qubits))
      throw std::invalid_argument("StateVector: amplitude count must be 2^n");
    for (const Amplitude& a : amps) detail::check_finite(a, "StateVector");
    return StateVector(n_qubits, std::move(amps));
  }

  int n_qubits() const { return n_qubits_; }
  std::size_t dim() const { return amps_.size(); }
  const Amplitude& amp(std::size_t i) const { return amps_.at(i); }
  std::span<const Amplitude> amplitudes() const { return amps_; }

 private:
  StateVector(int n_qubits, std::vector<Amplitude> amps)
      : n_qubits_(n_qubits), amps_(std::move(amps)) {}

  static void check_qubit_count(int n_qubits) {
    if (n_qubits < 1 || n_qubits > kMaxQubits)
      throw std::invalid_argument("StateVector: n_qubits must be in [1, 12]");
  }

  int n_qubits_;
  std::vector<Amplitude> amps_;
};

// Square matrix on a power-of-two dimension. The unitary flag is advisory;
// when set, U†U = I is checked on construction.
class OperatorMatrix {
 public:
  OperatorMatrix(std::size_t dim, std::vector<Amplitude> entries, bool unitary = false)
      : dim_(dim), entries_(std::move(entries)), unitary_(unitary) {
    if (dim_ == 0 || (dim_ & (dim_ - 1)) != 0)
      throw std::invalid_argument("OperatorMatrix: dim must be a power of two");
    if (entries_.size() != dim_ * dim_)
      throw std::invalid_argument("OperatorMatrix: entry count must be dim^2");
    for (const Amplitude& a : entries_) detail::check_finite(a, "OperatorMatrix");
    if (unitary_ && !check_unitary())
      throw std::invalid_argument("OperatorMatrix: unitary flag set but U†U != I");
  }

  static OperatorMatrix identity(std::size_t dim = 2) {
    std::vector<Amplitude> e(dim * dim, Amplitude{0.0, 0.0});
    for (std::size_t i = 0; i < dim; ++i) e[i * dim + i] = Amplitude{1.0, 0.0};
    return OperatorMatrix(dim, std::move(e), true);
  }

  std::size_t dim() const { return dim_; }
  bool unitary_flag() const { return unitary_; }
  const Amplitude& at(std::size_t row, std::size_t col) const {
    return entries_.at(row * dim_ + col);
  }

  OperatorMatrix adjoint() const {
    std::vector<Amplitude> e(dim_ * dim_);
    for (std::size_t r = 0; r < dim_; ++r)
      for (std::size_t c = 0; c < dim_; ++c) e[c * dim_ + r] = std::conj(at(r, c));
    return OperatorMatrix(dim_, std::move(e), unitary_);
  }

  OperatorMatrix operator*(const OperatorMatrix& rhs) const {
    if (dim_ != rhs.dim_)
      throw std::invalid_argument("OperatorMatrix: dimension mismatch in product");
    std::vector<Amplitude> e(dim_ * dim_, Amplitude{0.0, 0.0});
    for (std::size_t r = 0; r < dim_; ++r)
      for (std::size_t k = 0; k < dim_; ++k) {
        const Amplitude a = at(r, k);
        if (a == Amplitude{0.0, 0.0}) continue;
        for (std::size_t c = 0; c < dim_; ++c) e[r * dim_ + c] += a * rhs.at(k, c);
      }
    return OperatorMatrix(dim_, std::move(e), unitary_ && rhs.unitary_);
  }

  OperatorMatrix operator+(const OperatorMatrix& rhs) const {
    if (dim_ != rhs.dim_)
      throw std::invalid_argument("OperatorMatrix: dimension mismatch in sum");
    std::vector<Amplitude> e(dim_ * dim_);
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = entries_[i] + rhs.entries_[i];
    return OperatorMatrix(dim_, std::move(e), false);
  }

  OperatorMatrix scaled(Amplitude factor) const {
    std::vector<Amplitude> e(entries_);
    for (Amplitude& a : e) a *= factor;
    return OperatorMatrix(dim_, std::move(e), false);
  }

  bool is_hermitian(double tol = kTol) const {
    for (std::size_t r = 0; r < dim_; ++r)
      for (std::size_t c = 0; c < dim_; ++c)
        if (std::abs(at(r, c) - std::conj(at(c, r))) > tol) return false;
    return true;
  }

 private:
  bool check_unitary() const {
    const OperatorMatrix prod = adjoint_nocheck() * *this;
    for (std::size_t r = 0; r < dim_; ++r)
      for (std::size_t c = 0; c < dim_; ++c) {
        const Amplitude want = (r == c) ? Amplitude{1.0, 0.0} : Amplitude{0.0, 0.0};
        if (std::abs(prod.at(r, c) - want) > kTol) return false;
      }
    return true;
  }

  OperatorMatrix adjoint_nocheck() const {
    std::vector<Amplitude> e(dim_ * dim_);
    for (std::size_t r = 0; r < dim_; ++r)
      for (std::size_t c = 0; c < dim_; ++c) e[c * dim_ + r] = std::conj(at(r, c));
    return OperatorMatrix(dim_, std::move(e), false);
  }

  std::size_t dim_;
  std::vector<Amplitude> entries_;
  bool unitary_;
};

inline double max_abs_diff(const OperatorMatrix& a, const OperatorMatrix& b) {
  if (a.dim() != b.dim())
    throw std::invalid_argument("max_abs_diff: dimension mismatch");
  double m = 0.0;
  for (std::size_t r = 0; r < a.dim(); ++r)
    for (std::size_t c = 0; c < a.dim(); ++c)
      m = std::max(m, std::abs(a.at(r, c) - b.at(r, c)));
  return m;
}

inline OperatorMatrix kron(const OperatorMatrix& a, const OperatorMatrix& b) {
  const std::size_t dim = a.dim() * b.dim();
  std::vector<Amplitude> e(dim * dim);
  for (std::size_t ra = 0; ra < a.dim(); ++ra)
    for (std::size_t ca = 0; ca < a.dim(); ++ca)
      for (std::size_t rb = 0; rb < b.dim(); ++rb)
        for (std::size_t cb = 0; cb < b.dim(); ++cb)
          e[(ra * b.dim() + rb) * dim + (ca * b.dim() + cb)] = a.at(ra, ca) * b.at(rb, cb);
  return OperatorMatrix(dim, std::move(e), a.unitary_flag() && b.unitary_flag());
}

// Tensor product; qubit 0 of `a` stays the leftmost ket factor.
inline StateVector tensor(const StateVector& a, const StateVector& b) {
  const int n = a.n_qubits() + b.n_qubits();
  std::vector<Amplitude> amps(a.dim() * b.dim());
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t j = 0; j < b.dim(); ++j) amps[i * b.dim() + j] = a.amp(i) * b.amp(j);
  return StateVector::from_amplitudes(n, std::move(amps));
}

// Acts with `op` on the ordered `targets` subspace (targets[0] is the most
// significant bit of the operator index), identity elsewhere. The result may
// be unnormalized when `op` is not unitary.
inline StateVector apply_op(const StateVector& s, const OperatorMatrix& op,
                            std::span<const int> targets) {
  const int n = s.n_qubits();
  const std::size_t k = targets.size();
  if (k == 0 || op.dim() != (std::size_t{1} << k))
    throw std::invalid_argument("apply_op: operator dim must be 2^|targets|");
  std::size_t target_mask = 0;
  std::vector<std::size_t> place(k);
  for (std::size_t j = 0; j < k; ++j) {
    const int t = targets[j];
    if (t < 0 || t >= n) throw std::out_of_range("apply_op: target qubit out of range");
    const std::size_t bit = std::size_t{1} << (n - 1 - t);
    if (target_mask & bit) throw std::invalid_argument("apply_op: duplicate target qubit");
    target_mask |= bit;
    place[j] = bit;
  }

  const std::size_t dim = s.dim();
  const std::size_t sub = op.dim();
  std::vector<Amplitude> out(dim);
  std::vector<std::size_t> idx(sub);
  std::vector<Amplitude> in(sub);
  for (std::size_t base = 0; base < dim; ++base) {
    if (base & target_mask) continue;
    for (std::size_t x = 0; x < sub; ++x) {
      std::size_t full = base;
      for (std::size_t j = 0; j < k; ++j)
        if ((x >> (k - 1 - j)) & 1u) full |= place[j];
      idx[x] = full;
      in[x] = s.amp(full);
    }
    for (std::size_t r = 0; r < sub; ++r) {
      Amplitude acc{0.0, 0.0};
      for (std::size_t c = 0; c < sub; ++c) acc += op.at(r, c) * in[c];
      out[idx[r]] = acc;
    }
  }
  return StateVector::from_amplitudes(n, std::move(out));
}

inline StateVector apply_op(const StateVector& s, const OperatorMatrix& op,
                            std::initializer_list<int> targets) {
  return apply_op(s, op, std::span<const int>(targets.begin(), targets.size()));
}

inline Amplitude inner(const StateVector& a, const StateVector& b) {
  if (a.n_qubits() != b.n_qubits())
    throw std::invalid_argument("inner: qubit count mismatch");
  Amplitude acc{0.0, 0.0};
  for (std::size_t i = 0; i < a.dim(); ++i) acc += std::conj(a.amp(i)) * b.amp(i);
  return acc;
}

inline double norm(const StateVector& s) {
  double n2 = 0.0;
  for (const Amplitude& a : s.amplitudes()) n2 += std::norm(a);
  return std::sqrt(n2);
}

inline StateVector normalize(const StateVector& s) {
  const double n = norm(s);
  if (n <= 0.0) throw ImpossibleBranchError("normalize: impossible branch (zero norm)");
  std::vector<Amplitude> amps(s.amplitudes().begin(), s.amplitudes().end());
  for (Amplitude& a : amps) a /= n;
  return StateVector::from_amplitudes(s.n_qubits(), std::move(amps));
}

inline StateVector conjugate(const StateVector& s) {
  std::vector<Amplitude> amps(s.dim());
  for (std::size_t i = 0; i < s.dim(); ++i) amps[i] = std::conj(s.amp(i));
  return StateVector::from_amplitudes(s.n_qubits(), std::move(amps));
}

inline double fidelity(const StateVector& a, const StateVector& b) {
  return std::norm(inner(a, b));
}

// <s|Op|s> for a Hermitian Op on the given targets; the imaginary residue
// must stay below 1e-12.
inline double expectation(const StateVector& s, const OperatorMatrix& op,
                          std::span<const int> targets) {
  if (!op.is_hermitian(kTol))
    throw std::invalid_argument("expectation: operator is not Hermitian");
  if (std::abs(norm(s) - 1.0) > 1e-9)
    throw std::invalid_argument("expectation: state is not normalized");
  const Amplitude v = inner(s, apply_op(s, op, targets));
  if (std::abs(v.imag()) >= kTol) throw SimError("expectation: imaginary residue");
  return v.real();
}

inline double expectation(const StateVector& s, const OperatorMatrix& op,
                          std::initializer_list<int> targets) {
  return expectation(s, op, std::span<const int>(targets.begin(), targets.size()));
}

// Marginal probability that `qubit` reads `value` in the computational basis.
inline double bit_probability(const StateVector& s, int qubit, int value) {
  if (qubit < 0 || qubit >= s.n_qubits())
    throw std::out_of_range("bit_probability: qubit out of range");
  double p = 0.0;
  for (std::size_t i = 0; i < s.dim(); ++i)
    if (detail::bit_of(i, qubit, s.n_qubits()) == value) p += std::norm(s.amp(i));
  return p;
}

namespace gates {

inline const OperatorMatrix& identity2() {
  static const OperatorMatrix g = OperatorMatrix::identity(2);
  return g;
}

inline const OperatorMatrix& x() {
  static const OperatorMatrix g(2, {{0, 0}, {1, 0}, {1, 0}, {0, 0}}, true);
  return g;
}

inline const OperatorMatrix& y() {
  static const OperatorMatrix g(2, {{0, 0}, {0, -1}, {0, 1}, {0, 0}}, true);
  return g;
}

inline const OperatorMatrix& z() {
  static const OperatorMatrix g(2, {{1, 0}, {0, 0}, {0, 0}, {-1, 0}}, true);
  return g;
}

inline const OperatorMatrix& h() {
  static const double r = 1.0 / std::sqrt(2.0);
  static const OperatorMatrix g(2, {{r, 0}, {r, 0}, {r, 0}, {-r, 0}}, true);
  return g;
}

// Phase gate diag(1, i).
inline const OperatorMatrix& s() {
  static const OperatorMatrix g(2, {{1, 0}, {0, 0}, {0, 0}, {0, 1}}, true);
  return g;
}

inline const OperatorMatrix& sdg() {
  static const OperatorMatrix g(2, {{1, 0}, {0, 0}, {0, 0}, {0, -1}}, true);
  return g;
}

// Control is the first (most significant) qubit of the target pair.
inline const OperatorMatrix& cnot() {
  static const OperatorMatrix g(4,
                                {{1, 0}, {0, 0}, {0, 0}, {0, 0},
                                 {0, 0}, {1, 0}, {0, 0}, {0, 0},
                                 {0, 0}, {0, 0}, {0, 0}, {1, 0},
                                 {0, 0}, {0, 0}, {1, 0}, {0, 0}},
                                true);
  return g;
}

// Observables (sigma_x ± sigma_y)/sqrt(2); stored with the unitary flag off.
inline const OperatorMatrix& sigma_plus() {
  static const double r = 1.0 / std::sqrt(2.0);
  static const OperatorMatrix g(2, {{0, 0}, {r, -r}, {r, r}, {0, 0}}, false);
  return g;
}

inline const OperatorMatrix& sigma_minus() {
  static const double r = 1.0 / std::sqrt(2.0);
  static const OperatorMatrix g(2, {{0, 0}, {r, r}, {r, -r}, {0, 0}}, false);
  return g;
}

}  // namespace gates

}  // namespace pmeas
