#pragma once

#include <vector>

#include "pwdpd/postweight.hpp"
#include "pwdpd/types.hpp"

namespace pwdpd {

/// minimize g^H H g + 2 Re(g^H b) + c0  subject to  t0 g = t0p.
/// The stacked mode replaces the single averaged row t0 by the rows of T0.
struct QuadraticProblem {
  CMat H;
  CVec b;
  double c0 = 0.0;
  CRowVec t0;
  cplx t0p{};
  CMat T0;   // optional per-sample constraint rows (stacked mode only)
  CVec t0p_rows;

  [[nodiscard]] Eigen::Index size() const { return H.rows(); }
  /// Scale used for the "relative to the problem" tolerances.
  [[nodiscard]] double scale() const;
};

struct OptResult {
  CVec gamma_hat;
  cplx eta_hat{};
  CVec eta_rows;  // stacked mode multipliers
  double objective_at_opt = 0.0;
  double constraint_residual = 0.0;
  double stationarity_residual = 0.0;
  double ridge_used = 0.0;
  double condition = 0.0;
  bool stacked = false;
};

/// Sums over angles of the empirical sample means. Generic over any operators.
QuadraticProblem assemble_problem(const std::vector<RadiationOperator>& ops,
                                  const RadiationOperator& op0, bool keep_stacked = false);

/// Same problem assembled from the structured factors without forming any
/// N x n_gamma operator: H_FF = (V^H V / N) (x) sum_t conj(g_t) g_t^T, then
/// H = D^T H_FF D (and likewise for b and t0).
QuadraticProblem assemble_problem_structured(const PwContext& ctx, const PwLayout& layout,
                                             const std::vector<double>& angles, double phi0,
                                             bool keep_stacked = false);

struct KktOptions {
  double ridge = 0.0;
  bool auto_ridge = false;        // add 1e-10 tr(H)/n when H is numerically singular
  double condition_cap = 1e12;
  bool stacked = false;           // enforce every row of p.T0 instead of t0
};

OptResult solve_kkt(const QuadraticProblem& p, const KktOptions& opts = {});

/// Independent verifier: eliminate the constraint with an orthonormal null-space
/// basis and solve the reduced unconstrained problem by dense least squares.
CVec oracle_solve(const QuadraticProblem& p, bool stacked = false);

double evaluate_objective(const QuadraticProblem& p, const CVec& g);

/// Orthonormal basis (columns) of the null space of the rows of A.
CMat null_space(const CMat& A, double tol = 1e-12);

}  // namespace pwdpd
