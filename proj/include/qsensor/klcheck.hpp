// Knill-Laflamme condition evaluation: full correctability, the diagonal-only
// variant photodetection needs, signal sensability, and the sigma_z no-go scan.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qsensor/qlin.hpp"

namespace qs {

struct KLViolation {
  int error_i = 0;
  int error_j = 0;
  int alpha = 0;  // code-state indices; alpha == beta rows report the
  int beta = 0;   // state-independence defect instead
  cx value;
};

struct KLReport {
  bool full_ok = false;
  bool diagonal_ok = false;
  std::vector<KLViolation> violations;
  double tolerance = 1e-9;
};

KLReport kl_full_check(const StateVector& code1, const StateVector& code2,
                       const std::vector<Matrix>& errors, double tolerance = 1e-9);

KLReport kl_diagonal_check(const StateVector& code1, const StateVector& code2,
                           const std::vector<Matrix>& errors, double tolerance = 1e-9);

// Strict: both code states are signal eigenstates with eigenvalues split by more
// than the tolerance.
bool sensable(const StateVector& code1, const StateVector& code2, const Operator& signal,
              double tolerance = 1e-9);

// Weak mode: the expectation gap <1|S|1> - <2|S|2>.
double sensable_gap(const StateVector& code1, const StateVector& code2, const Operator& signal);

struct NogoScanReport {
  int n_sampled = 0;
  int n_passing_diagonal = 0;  // codes satisfying the diagonal condition at tol
  int n_counterexamples = 0;   // diagonal-passing codes with a sigma_z gap (expected 0)
  double max_gap_over_violation = 0.0;  // sup |gap| / (2 tol) among passing codes
  // Estimated blocked Bloch direction (x, y, z) of the sensing qubit, from the
  // null space of the gap vectors of condition-passing tagged codes.
  double blocked_axis[3] = {0, 0, 0};
  double blocked_axis_match = 0.0;  // |<estimated, analytic>| for jump sm + b
  double max_sigma_z_gap = 0.0;     // largest |sigma_z gap| seen among passing codes
};

// Samples Haar-random two-dimensional codes on 1..3 qubits with decay errors
// {sigma_-^i} (b = 0) or the shifted jump {sigma_- + b} on tagged two-qubit
// codes (b != 0), checks the no-go, and estimates the blocked direction.
NogoScanReport sigma_z_nogo_scan(int n_random_codes, uint64_t seed, double b = 0.0,
                                 double tolerance = 1e-9);

}  // namespace qs
