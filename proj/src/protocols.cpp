#include "qsensor/protocols.hpp"

#include <cmath>
#include <stdexcept>

namespace qs {

void NoiseModel::validate() const {
  if (gamma < 0 || dark_rate < 0 || dead_time < 0 || correction_delay < 0)
    throw std::invalid_argument("NoiseModel: negative rate or time");
  if (loss_alpha < 0 || loss_alpha > 1)
    throw std::invalid_argument("NoiseModel: loss_alpha outside [0, 1]");
}

DephasingStrategy DephasingStrategy::energy_gap(double omega) {
  DephasingStrategy s;
  s.kind = Kind::EnergyGap;
  s.gap_omega = omega;
  s.validate();
  return s;
}

DephasingStrategy DephasingStrategy::zeno(double dt) {
  DephasingStrategy s;
  s.kind = Kind::Zeno;
  s.zeno_interval = dt;
  s.validate();
  return s;
}

void DephasingStrategy::validate() const {
  if (kind == Kind::EnergyGap && !(gap_omega > 0))
    throw std::invalid_argument("DephasingStrategy: energy gap requires omega > 0");
  if (kind == Kind::Zeno && !(zeno_interval > 0))
    throw std::invalid_argument("DephasingStrategy: zeno requires interval > 0");
}

Matrix SensorCode::code_projector() const {
  return code_plus.v * code_plus.v.adjoint() + code_minus.v * code_minus.v.adjoint();
}

Matrix SensorCode::wrong_projector() const {
  return wrong_plus.v * wrong_plus.v.adjoint() + wrong_minus.v * wrong_minus.v.adjoint();
}

Matrix SensorCode::hamiltonian(double g) const {
  Matrix h = signal(g).m;
  switch (strategy.kind) {
    case DephasingStrategy::Kind::ExactTerm: h += exact_term.m; break;
    case DephasingStrategy::Kind::EnergyGap: h += strategy.gap_omega * gap_operator.m; break;
    case DephasingStrategy::Kind::Zeno: break;  // handled by projective readouts
  }
  return h;
}

Matrix SensorCode::h_nonhermitian(double g, double gamma) const {
  Matrix h = hamiltonian(g);
  Matrix damp = Matrix::Zero(dim(), dim());
  for (const auto& ch : jumps) damp += ch.op.m.adjoint() * ch.op.m;
  return h - cx(0, 1) * gamma * damp;
}

StateVector SensorCode::initial_state() const {
  return StateVector(((code_plus.v + code_minus.v) / std::sqrt(2.0)).eval());
}

void SensorCode::validate(double eps) const {
  if (std::abs(code_plus.norm() - 1.0) > eps || std::abs(code_minus.norm() - 1.0) > eps)
    throw std::invalid_argument(name + ": code states not normalized");
  if (std::abs(code_plus.v.dot(code_minus.v)) > eps)
    throw std::invalid_argument(name + ": code states not orthogonal");
  for (const auto& ch : jumps) {
    if (ch.correction.unitarity_defect() > eps)
      throw std::invalid_argument(name + ": correction for " + ch.label + " not unitary");
  }
  if (signal) {
    if (Operator(signal(1.0)).hermiticity_defect() > eps)
      throw std::invalid_argument(name + ": signal not hermitian");
  }
}

namespace {

// Gram-Schmidt completion of `frame` (orthonormal columns assumed) over the
// canonical basis, in basis order.
std::vector<Vector> complete_frame(std::vector<Vector> frame, int dim) {
  for (int k = 0; k < dim && static_cast<int>(frame.size()) < dim; ++k) {
    Vector cand = Vector::Zero(dim);
    cand(k) = 1.0;
    for (const auto& f : frame) cand -= f.dot(cand) * f;
    const double n = cand.norm();
    if (n > 1e-8) frame.push_back(cand / n);
  }
  if (static_cast<int>(frame.size()) != dim)
    throw std::runtime_error("complete_frame: completion failed");
  return frame;
}

StateVector normalized_image(const Matrix& jump, const StateVector& s) {
  Vector img = jump * s.v;
  const double n = img.norm();
  if (n < 1e-12) throw std::invalid_argument("correction_from_jump: jump annihilates code state");
  return StateVector((img / n).eval());
}

Operator mapping_unitary(const std::vector<Vector>& sources, const std::vector<Vector>& targets) {
  const int dim = static_cast<int>(sources.front().size());
  Matrix u = Matrix::Zero(dim, dim);
  for (size_t k = 0; k < sources.size(); ++k) u += targets[k] * sources[k].adjoint();
  Operator op{u};
  op.tag_unitary();
  return op;
}

}  // namespace

Operator correction_from_jump(const StateVector& code_plus, const StateVector& code_minus,
                              const Matrix& jump) {
  const int dim = static_cast<int>(code_plus.dim());
  StateVector img_p = normalized_image(jump, code_plus);
  StateVector img_m = normalized_image(jump, code_minus);
  if (std::abs(img_p.v.dot(img_m.v)) > 1e-9)
    throw std::invalid_argument("correction_from_jump: jump images not orthogonal");
  auto sources = complete_frame({img_p.v, img_m.v}, dim);
  auto targets = complete_frame({code_plus.v, code_minus.v}, dim);
  return mapping_unitary(sources, targets);
}

namespace {

Operator swap_unitary(const SensorCode& code) {
  const int dim = code.dim();
  Matrix u = Matrix::Identity(dim, dim) - code.code_projector() - code.wrong_projector();
  u += code.code_plus.v * code.wrong_plus.v.adjoint() + code.wrong_plus.v * code.code_plus.v.adjoint();
  u += code.code_minus.v * code.wrong_minus.v.adjoint() +
       code.wrong_minus.v * code.code_minus.v.adjoint();
  Operator op{u};
  op.tag_unitary();
  return op;
}

void finalize(SensorCode& code) {
  code.gap_operator = Operator(code.code_projector() - code.wrong_projector());
  code.gap_operator.hermitian = true;
  code.ec_fix = swap_unitary(code);
  code.validate();
}

}  // namespace

SensorCode build_example_i(double g, double gamma, DephasingStrategy strategy) {
  (void)g;
  if (gamma < 0) throw std::invalid_argument("build_example_i: gamma < 0");
  strategy.validate();
  SensorCode code;
  code.name = "example_i";
  code.n_qubits = 2;
  code.code_plus = tensor(ket_plus(), ket_zero());
  code.code_minus = tensor(ket_minus(), ket_one());
  code.wrong_plus = tensor(ket_minus(), ket_zero());
  code.wrong_minus = tensor(ket_plus(), ket_one());
  code.signal = [](double gv) {
    Operator s = pauli_on(2, 1, Axis::X);
    s.m *= gv;
    return s;
  };
  // The paper's corrected H_nh blocks fix the sign of the sigma_y^1 sigma_z^2 term;
  // with the right-handed Pauli convention used here it comes out negative.
  code.exact_term = Operator((-gamma / 2.0) * pauli_on(2, 1, Axis::Y).m * pauli_on(2, 2, Axis::Z).m);
  code.exact_term.hermitian = true;
  code.strategy = strategy;

  JumpChannel ch;
  ch.op = pauli_on(2, 1, Axis::Minus);
  ch.label = "decay1";
  ch.correction = correction_from_jump(code.code_plus, code.code_minus, ch.op.m);
  code.jumps.push_back(std::move(ch));
  finalize(code);
  return code;
}

SensorCode build_example_ii(double g, double gamma, DephasingStrategy strategy) {
  (void)g;
  if (gamma < 0) throw std::invalid_argument("build_example_ii: gamma < 0");
  strategy.validate();
  SensorCode code;
  code.name = "example_ii";
  code.n_qubits = 3;
  const StateVector upup = tensor(ket_up(), ket_up());
  const StateVector dndn = tensor(ket_down(), ket_down());
  const StateVector psi_p((upup.v + dndn.v) / std::sqrt(2.0));
  const StateVector psi_m((upup.v - dndn.v) / std::sqrt(2.0));
  code.code_plus = tensor(ket_plus(), psi_p);
  code.code_minus = tensor(ket_minus(), psi_m);
  code.wrong_plus = tensor(ket_minus(), psi_p);
  code.wrong_minus = tensor(ket_plus(), psi_m);
  code.signal = [](double gv) {
    Operator s = pauli_on(3, 1, Axis::X);
    s.m *= gv;
    return s;
  };
  const Matrix sz1 = pauli_on(3, 1, Axis::Z).m;
  const Matrix sz2 = pauli_on(3, 2, Axis::Z).m;
  const Matrix syxx =
      pauli_on(3, 1, Axis::Y).m * pauli_on(3, 2, Axis::X).m * pauli_on(3, 3, Axis::X).m;
  code.exact_term = Operator((-gamma * (sz1 * sz2 + 0.5 * identity(8)) * syxx).eval());
  code.exact_term.tag_hermitian(1e-12);
  code.strategy = strategy;

  for (int site = 1; site <= 3; ++site) {
    JumpChannel ch;
    ch.op = pauli_on(3, site, Axis::Minus);
    ch.label = "decay" + std::to_string(site);
    ch.correction = correction_from_jump(code.code_plus, code.code_minus, ch.op.m);
    if (site > 1) {
      ch.detection = Detection::ParityMonitor;
      // single-decay subspace this channel repairs: decayed ancilla down, other up
      const Matrix dn_s = (identity(8) - pauli_on(3, site, Axis::Z).m) / 2.0;
      const int other = (site == 2) ? 3 : 2;
      const Matrix up_o = (identity(8) + pauli_on(3, other, Axis::Z).m) / 2.0;
      ch.decayed_projector = dn_s * up_o;
    }
    code.jumps.push_back(std::move(ch));
  }
  finalize(code);
  return code;
}

SensorCode build_xy_code(double theta, double g, double gamma, DephasingStrategy strategy) {
  (void)g;
  if (gamma < 0) throw std::invalid_argument("build_xy_code: gamma < 0");
  strategy.validate();
  SensorCode code;
  code.name = "xy";
  code.n_qubits = 2;
  const cx phase = std::exp(cx(0, theta));
  StateVector rot_p((ket_up().v + phase * ket_down().v) / std::sqrt(2.0));
  StateVector rot_m((ket_up().v - phase * ket_down().v) / std::sqrt(2.0));
  code.code_plus = tensor(rot_p, ket_zero());
  code.code_minus = tensor(rot_m, ket_one());
  code.wrong_plus = tensor(rot_m, ket_zero());
  code.wrong_minus = tensor(rot_p, ket_one());
  code.signal = [theta](double gv) {
    Matrix s = gv * (std::cos(theta) * pauli_on(2, 1, Axis::X).m +
                     std::sin(theta) * pauli_on(2, 1, Axis::Y).m);
    Operator op{std::move(s)};
    op.hermitian = true;
    return op;
  };
  // Rotated version of Example I's exact term: the in-plane axis orthogonal to the
  // signal direction, tagged by sigma_z on the good qubit.
  const Matrix orth = -std::sin(theta) * pauli_on(2, 1, Axis::X).m +
                      std::cos(theta) * pauli_on(2, 1, Axis::Y).m;
  code.exact_term = Operator(((-gamma / 2.0) * orth * pauli_on(2, 2, Axis::Z).m).eval());
  code.exact_term.tag_hermitian(1e-12);
  code.strategy = strategy;

  JumpChannel ch;
  ch.op = pauli_on(2, 1, Axis::Minus);
  ch.label = "decay1";
  ch.correction = correction_from_jump(code.code_plus, code.code_minus, ch.op.m);
  code.jumps.push_back(std::move(ch));
  finalize(code);
  return code;
}

SensorCode build_general_signal_code(double theta, double phi, double g, double gamma,
                                     double gap_omega) {
  if (std::abs(std::sin(theta)) < 1e-9)
    throw std::invalid_argument("build_general_signal_code: sin(theta) = 0 is the sigma_z no-go");
  SensorCode code = build_xy_code(phi, g, gamma, DephasingStrategy::energy_gap(gap_omega));
  code.name = "general";
  code.signal = [theta, phi](double gv) {
    Matrix s = gv * (std::sin(theta) * std::cos(phi) * pauli_on(2, 1, Axis::X).m +
                     std::sin(theta) * std::sin(phi) * pauli_on(2, 1, Axis::Y).m +
                     std::cos(theta) * pauli_on(2, 1, Axis::Z).m);
    Operator op{std::move(s)};
    op.hermitian = true;
    return op;
  };
  code.validate();
  return code;
}

SensorCode build_homodyne_z(double b, double g, double gamma) {
  (void)g;
  if (!std::isfinite(b)) throw std::invalid_argument("build_homodyne_z: b not finite");
  SensorCode code;
  code.name = "homodyne_z";
  code.n_qubits = 2;
  // sigma_theta = (-b sz + sx/2)/sqrt(b^2 + 1/4); code pairs its eigenstates with good-qubit tags
  const double nrm = std::sqrt(b * b + 0.25);
  Matrix stheta = (-b * pauli(Axis::Z) + 0.5 * pauli(Axis::X)) / nrm;
  Eigen::SelfAdjointEigenSolver<Matrix> es(stheta);
  // eigenvalues ascending: column 1 is +1 ("up_theta"), column 0 is -1
  StateVector up_theta(es.eigenvectors().col(1).eval());
  StateVector dn_theta(es.eigenvectors().col(0).eval());
  code.code_plus = tensor(up_theta, ket_one());
  code.code_minus = tensor(dn_theta, ket_zero());
  code.wrong_plus = tensor(dn_theta, ket_one());
  code.wrong_minus = tensor(up_theta, ket_zero());
  code.signal = [b, gamma](double gv) {
    // g*sz^1 with the -b*gamma*sy^1 compensation for the shifted jump operator
    Matrix s = gv * pauli_on(2, 1, Axis::Z).m - b * gamma * pauli_on(2, 1, Axis::Y).m;
    return Operator{std::move(s)};
  };
  code.strategy = DephasingStrategy::energy_gap(1.0);  // caller overrides omega as needed
  code.exact_term = Operator(Matrix::Zero(4, 4));
  code.exact_term.hermitian = true;

  JumpChannel ch;
  ch.op = Operator((pauli_on(2, 1, Axis::Minus).m + b * identity(4)).eval());
  ch.label = "homodyne";
  ch.correction = correction_from_jump(code.code_plus, code.code_minus, ch.op.m);
  code.jumps.push_back(std::move(ch));
  finalize(code);
  return code;
}

SensorCode build_interferometer_code(double g1, double g2, double gamma) {
  (void)gamma;
  SensorCode code;
  code.name = "interferometer";
  code.n_qubits = 3;
  code.code_plus = tensor(tensor(ket_up(), ket_down()), ket_one());
  code.code_minus = tensor(tensor(ket_down(), ket_up()), ket_zero());
  code.wrong_plus = tensor(tensor(ket_down(), ket_up()), ket_one());
  code.wrong_minus = tensor(tensor(ket_up(), ket_down()), ket_zero());
  // signal(g) perturbs g1 only; g2 is a fixed background
  code.signal = [g2](double gv) {
    Matrix s = gv * pauli_on(3, 1, Axis::Z).m + g2 * pauli_on(3, 2, Axis::Z).m;
    Operator op{std::move(s)};
    op.hermitian = true;
    return op;
  };
  (void)g1;
  code.strategy = DephasingStrategy::exact_term();
  code.exact_term = Operator(Matrix::Zero(8, 8));
  code.exact_term.hermitian = true;

  const Matrix sm1 = pauli_on(3, 1, Axis::Minus).m;
  const Matrix sm2 = pauli_on(3, 2, Axis::Minus).m;
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (int sign : {+1, -1}) {
    JumpChannel ch;
    ch.op = Operator(((sm1 + static_cast<double>(sign) * sm2) * inv_sqrt2).eval());
    ch.label = sign > 0 ? "sum" : "difference";
    ch.correction = correction_from_jump(code.code_plus, code.code_minus, ch.op.m);
    code.jumps.push_back(std::move(ch));
  }
  finalize(code);
  return code;
}

SensorCode build_code_by_name(const std::string& name, double g, double gamma,
                              DephasingStrategy strategy, double theta, double phi, double b,
                              double g2) {
  if (name == "example_i") return build_example_i(g, gamma, strategy);
  if (name == "example_ii") return build_example_ii(g, gamma, strategy);
  if (name == "xy") return build_xy_code(theta, g, gamma, strategy);
  if (name == "general")
    return build_general_signal_code(theta, phi, g, gamma,
                                     strategy.gap_omega > 0 ? strategy.gap_omega : 50.0 * gamma);
  if (name == "homodyne_z") {
    SensorCode code = build_homodyne_z(b, g, gamma);
    if (strategy.kind == DephasingStrategy::Kind::EnergyGap) code.strategy = strategy;
    return code;
  }
  if (name == "interferometer") return build_interferometer_code(g, g2, gamma);
  throw std::invalid_argument("unknown code name: " + name);
}

}  // namespace qs
