#include "qsensor/qlin.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

namespace qs {

void DensityMatrix::validate(double herm_eps, double trace_eps, double pos_eps) const {
  const double hd = (m - m.adjoint()).cwiseAbs().maxCoeff();
  if (hd > herm_eps)
    throw std::invalid_argument("DensityMatrix: hermiticity defect " + std::to_string(hd));
  const double tr = m.trace().real();
  if (std::abs(tr - 1.0) > trace_eps)
    throw std::invalid_argument("DensityMatrix: trace " + std::to_string(tr));
  Eigen::SelfAdjointEigenSolver<Matrix> es((m + m.adjoint()) / 2.0);
  if (es.eigenvalues().minCoeff() < pos_eps)
    throw std::invalid_argument("DensityMatrix: negative eigenvalue " +
                                std::to_string(es.eigenvalues().minCoeff()));
}

Matrix pauli(Axis axis) {
  Matrix p(2, 2);
  switch (axis) {
    case Axis::X: p << 0, 1, 1, 0; break;
    case Axis::Y: p << 0, cx(0, -1), cx(0, 1), 0; break;
    case Axis::Z: p << 1, 0, 0, -1; break;
    case Axis::Plus: p << 0, 1, 0, 0; break;   // |up><down|
    case Axis::Minus: p << 0, 0, 1, 0; break;  // |down><up|
  }
  return p;
}

Matrix identity(int dim) { return Matrix::Identity(dim, dim); }

Operator pauli_on(int n_qubits, int site, Axis axis) {
  if (n_qubits < 1) throw std::invalid_argument("pauli_on: n_qubits < 1");
  if (site < 1 || site > n_qubits)
    throw std::invalid_argument("pauli_on: site " + std::to_string(site) + " out of range 1.." +
                                std::to_string(n_qubits));
  Matrix out = (site == 1) ? pauli(axis) : identity(2);
  for (int s = 2; s <= n_qubits; ++s) {
    const Matrix& factor = (s == site) ? pauli(axis) : identity(2);
    out = Eigen::kroneckerProduct(out, factor).eval();
  }
  Operator op(std::move(out));
  if (axis == Axis::X || axis == Axis::Y || axis == Axis::Z) op.hermitian = true;
  return op;
}

Operator tensor(const Operator& a, const Operator& b) {
  Operator out(Eigen::kroneckerProduct(a.m, b.m).eval());
  out.hermitian = a.hermitian && b.hermitian;
  out.unitary = a.unitary && b.unitary;
  return out;
}

StateVector tensor(const StateVector& a, const StateVector& b) {
  return StateVector(Eigen::kroneckerProduct(a.v, b.v).eval());
}

Matrix expm(const Matrix& a) {
  if (!a.allFinite()) throw std::runtime_error("expm: non-finite entries");
  Eigen::ComplexEigenSolver<Matrix> es(a);
  if (es.info() == Eigen::Success) {
    const Matrix& vecs = es.eigenvectors();
    Eigen::JacobiSVD<Matrix> svd(vecs);
    const double smin = svd.singularValues().minCoeff();
    const double smax = svd.singularValues().maxCoeff();
    if (smin > 0 && smax / smin < tol::eig_condition) {
      Vector ev = es.eigenvalues().array().exp();
      return vecs * ev.asDiagonal() * vecs.inverse();
    }
  }
  return a.exp();  // Pade scaling-and-squaring
}

StateVector evolve_nonhermitian(const StateVector& psi, const Operator& h_nh, double t) {
  if (t < 0) throw std::invalid_argument("evolve_nonhermitian: t < 0");
  if (h_nh.dim() != psi.dim()) throw std::invalid_argument("evolve_nonhermitian: dim mismatch");
  if (!h_nh.m.allFinite() || !psi.v.allFinite())
    throw std::runtime_error("evolve_nonhermitian: non-finite input");
  if (t == 0) return psi;

  const Matrix gen = cx(0, -1) * h_nh.m * t;
  const Matrix u = expm(gen);
  const Matrix uh = expm(gen / 2.0);
  const double err = (u - uh * uh).norm() / std::max(1.0, u.norm());
  if (!(err < tol::expm_self_check))
    throw std::runtime_error("evolve_nonhermitian: halved-step self-check failed, error " +
                             std::to_string(err));
  StateVector out(u * psi.v);
  if (!out.v.allFinite()) throw std::runtime_error("evolve_nonhermitian: non-finite result");
  return out;
}

cx expectation(const StateVector& psi, const Operator& a) {
  if (a.dim() != psi.dim()) throw std::invalid_argument("expectation: dim mismatch");
  const double n2 = psi.v.squaredNorm();
  if (n2 <= 0) throw std::invalid_argument("expectation: zero-norm state");
  return psi.v.dot(a.m * psi.v) / n2;
}

namespace {
StateVector two_component(cx a, cx b) {
  Vector v(2);
  v << a, b;
  return StateVector(std::move(v));
}
}  // namespace

StateVector ket_up() { return two_component(1, 0); }
StateVector ket_down() { return two_component(0, 1); }
StateVector ket_zero() { return two_component(1, 0); }
StateVector ket_one() { return two_component(0, 1); }
StateVector ket_plus() { return two_component(1 / std::sqrt(2.0), 1 / std::sqrt(2.0)); }
StateVector ket_minus() { return two_component(1 / std::sqrt(2.0), -1 / std::sqrt(2.0)); }

StateVector basis_state(int n_qubits, unsigned index) {
  if (n_qubits < 1 || n_qubits > 6) throw std::invalid_argument("basis_state: bad n_qubits");
  const int dim = 1 << n_qubits;
  if (index >= static_cast<unsigned>(dim)) throw std::invalid_argument("basis_state: index");
  Vector v = Vector::Zero(dim);
  v(index) = 1.0;
  return StateVector(std::move(v));
}

}  // namespace qs
