// Dense complex linear algebra for small multi-qubit registers (dim <= 16).
//
// Conventions used throughout:
//   - qubit 1 is the leftmost (most significant) tensor factor
//   - per-qubit basis order: |up> before |down> (sensing), |0> before |1> (good)
//   - sigma_minus = |down><up|, so excited population decays under -i*gamma*sp*sm
#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace qs {

using cx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

namespace tol {
inline constexpr double hermitian = 1e-12;
inline constexpr double unitary = 1e-10;
inline constexpr double trace_one = 1e-9;
inline constexpr double positivity = -1e-9;
inline constexpr double norm_slack = 1e-12;
inline constexpr double expm_self_check = 1e-10;
inline constexpr double eig_condition = 1e8;
}  // namespace tol

struct Operator {
  Matrix m;
  bool hermitian = false;
  bool unitary = false;

  Operator() = default;
  explicit Operator(Matrix mat) : m(std::move(mat)) {
    if (m.rows() != m.cols() || m.rows() < 1)
      throw std::invalid_argument("Operator: matrix must be square, dim >= 1");
  }

  int dim() const { return static_cast<int>(m.rows()); }

  double hermiticity_defect() const { return (m - m.adjoint()).cwiseAbs().maxCoeff(); }
  double unitarity_defect() const {
    return (m.adjoint() * m - Matrix::Identity(dim(), dim())).cwiseAbs().maxCoeff();
  }

  // Tag setters verify the claimed structure.
  Operator& tag_hermitian(double eps = tol::hermitian) {
    if (hermiticity_defect() >= eps)
      throw std::invalid_argument("Operator: hermitian tag violated, defect " +
                                  std::to_string(hermiticity_defect()));
    hermitian = true;
    return *this;
  }
  Operator& tag_unitary(double eps = tol::unitary) {
    if (unitarity_defect() >= eps)
      throw std::invalid_argument("Operator: unitary tag violated, defect " +
                                  std::to_string(unitarity_defect()));
    unitary = true;
    return *this;
  }
};

struct StateVector {
  Vector v;

  StateVector() = default;
  explicit StateVector(Vector vec) : v(std::move(vec)) {
    if (v.size() < 1) throw std::invalid_argument("StateVector: empty");
  }

  int dim() const { return static_cast<int>(v.size()); }
  double norm() const { return v.norm(); }

  // Sub-normalized states are legal between jumps; norm must stay in (0, 1].
  void check_norm(double slack = tol::norm_slack) const {
    const double n = norm();
    if (!(n > 0.0) || n > 1.0 + slack)
      throw std::invalid_argument("StateVector: norm " + std::to_string(n) + " outside (0, 1]");
  }

  StateVector normalized() const { return StateVector(v / v.norm()); }
};

struct DensityMatrix {
  Matrix m;

  DensityMatrix() = default;
  explicit DensityMatrix(Matrix mat) : m(std::move(mat)) {
    if (m.rows() != m.cols()) throw std::invalid_argument("DensityMatrix: not square");
  }
  static DensityMatrix pure(const StateVector& psi) {
    Vector n = psi.v / psi.v.norm();
    return DensityMatrix(n * n.adjoint());
  }

  int dim() const { return static_cast<int>(m.rows()); }

  void validate(double herm_eps = 1e-10, double trace_eps = tol::trace_one,
                double pos_eps = tol::positivity) const;
};

enum class Axis { X, Y, Z, Plus, Minus };

Matrix pauli(Axis axis);
Matrix identity(int dim);

// Embeds a single-qubit Pauli at `site` (1-based, site 1 leftmost) of an n-qubit register.
Operator pauli_on(int n_qubits, int site, Axis axis);

Operator tensor(const Operator& a, const Operator& b);
StateVector tensor(const StateVector& a, const StateVector& b);

// Matrix exponential: eigendecomposition when well conditioned, Pade scaling-and-squaring
// fallback otherwise.
Matrix expm(const Matrix& a);

// exp(-i*H_nh*t)|psi> without renormalizing. Self-checked against a halved-step product.
StateVector evolve_nonhermitian(const StateVector& psi, const Operator& h_nh, double t);

// <psi|A|psi> / <psi|psi>
cx expectation(const StateVector& psi, const Operator& a);

// Elementary kets. up/zero are the first basis vector of a qubit, down/one the second.
StateVector ket_up();
StateVector ket_down();
StateVector ket_zero();
StateVector ket_one();
StateVector ket_plus();
StateVector ket_minus();
StateVector basis_state(int n_qubits, unsigned index);

}  // namespace qs
