#include "pwdpd/pwopt.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace pwdpd {

double QuadraticProblem::scale() const {
  return std::max(std::abs(c0) + H.norm() + b.norm(), std::numeric_limits<double>::min());
}

QuadraticProblem assemble_problem(const std::vector<RadiationOperator>& ops,
                                  const RadiationOperator& op0, bool keep_stacked) {
  if (ops.empty()) throw DimensionError("assemble_problem: empty angle set");
  const Eigen::Index n = op0.T.cols();
  const Eigen::Index N = op0.T.rows();
  if (N == 0) throw DimensionError("assemble_problem: operators have no samples");
  QuadraticProblem p;
  p.H = CMat::Zero(n, n);
  p.b = CVec::Zero(n);
  for (const auto& op : ops) {
    if (op.T.cols() != n || op.T.rows() != N || op.z_res.size() != N)
      throw DimensionError("assemble_problem: operators differ in n_gamma or sample count");
    p.H.noalias() += op.T.adjoint() * op.T;
    p.b.noalias() += op.T.adjoint() * op.z_res;
    p.c0 += op.z_res.squaredNorm();
  }
  const double invN = 1.0 / static_cast<double>(N);
  p.H *= invN;
  p.H = (0.5 * (p.H + p.H.adjoint())).eval();
  p.b *= invN;
  p.c0 *= invN;
  p.t0 = op0.T.colwise().sum() * invN;
  p.t0p = p.t0.sum();
  if (keep_stacked) {
    p.T0 = op0.T;
    p.t0p_rows = op0.T.rowwise().sum();
  }
  return p;
}

QuadraticProblem assemble_problem_structured(const PwContext& ctx, const PwLayout& layout,
                                             const std::vector<double>& angles, double phi0,
                                             bool keep_stacked) {
  if (angles.empty()) throw DimensionError("assemble_problem: empty angle set");
  const Eigen::Index S = layout.S;
  const Eigen::Index Q = layout.Q;
  if (ctx.V.cols() != Q || ctx.model->geometry().S != S)
    throw DimensionError("layout does not match the subarray (S, Q)");
  const Eigen::Index N = ctx.V.rows();
  const double invN = 1.0 / static_cast<double>(N);

  CMat G = CMat::Zero(S, S);   // sum_t conj(g_t) g_t^T
  CMat VZ = CMat::Zero(Q, S);  // sum_t (V^H z_t) conj(g_t)^T
  double c0 = 0.0;
  for (double a : angles) {
    const OperatorFactors f = operator_factors(ctx, a);
    G.noalias() += f.gain.conjugate() * f.gain.transpose();
    VZ.noalias() += (ctx.V.adjoint() * f.z_res) * f.gain.adjoint();
    c0 += f.z_res.squaredNorm();
  }
  const CMat VV = ctx.V.adjoint() * ctx.V * invN;

  const Eigen::Index nf = S * Q;
  CMat Hf(nf, nf);
  for (Eigen::Index q = 0; q < Q; ++q)
    for (Eigen::Index q2 = 0; q2 < Q; ++q2) Hf.block(q * S, q2 * S, S, S) = VV(q, q2) * G;
  CVec bf(nf);
  for (Eigen::Index q = 0; q < Q; ++q) bf.segment(q * S, S) = VZ.row(q).transpose() * invN;

  const OperatorFactors f0 = operator_factors(ctx, phi0);
  const CRowVec vmean = ctx.V.colwise().sum() * invN;
  CRowVec t0f(nf);
  for (Eigen::Index q = 0; q < Q; ++q) t0f.segment(q * S, S) = vmean[q] * f0.gain.transpose();

  const CMat D = duplication_matrix(layout).cast<cplx>();
  QuadraticProblem p;
  p.H = D.transpose() * Hf * D;
  p.H = (0.5 * (p.H + p.H.adjoint())).eval();
  p.b = D.transpose() * bf;
  p.c0 = c0 * invN;
  p.t0 = t0f * D;
  p.t0p = p.t0.sum();
  if (keep_stacked) {
    p.T0 = full_operator(ctx.V, f0.gain) * D;
    p.t0p_rows = p.T0.rowwise().sum();
  }
  return p;
}

namespace {

struct Factored {
  Eigen::LDLT<CMat> ldlt;
  double ridge = 0.0;
  double condition = 0.0;
};

double hermitian_condition(const CMat& A, double* min_eig) {
  const RVec ev = Eigen::SelfAdjointEigenSolver<CMat>(A, Eigen::EigenvaluesOnly).eigenvalues();
  *min_eig = ev.minCoeff();
  const double emax = ev.cwiseAbs().maxCoeff();
  if (*min_eig <= 0.0) return std::numeric_limits<double>::infinity();
  return emax / *min_eig;
}

Factored factor(const CMat& H, const KktOptions& opts) {
  const Eigen::Index n = H.rows();
  Factored f;
  f.ridge = opts.ridge;
  CMat Hr = H;
  Hr.diagonal().array() += f.ridge;
  double min_eig = 0.0;
  f.condition = hermitian_condition(Hr, &min_eig);
  if (!(f.condition <= opts.condition_cap) && opts.auto_ridge) {
    const double tr = H.trace().real();
    f.ridge += 1e-10 * (tr > 0.0 ? tr : 1.0) / static_cast<double>(n);
    Hr = H;
    Hr.diagonal().array() += f.ridge;
    f.condition = hermitian_condition(Hr, &min_eig);
  }
  if (!(f.condition <= opts.condition_cap))
    throw SolverError("H is singular or ill-conditioned (condition " +
                      std::to_string(f.condition) + "); retry with a positive ridge");
  f.ldlt.compute(Hr);
  if (f.ldlt.info() != Eigen::Success) throw SolverError("LDLT factorization of H failed");
  return f;
}

}  // namespace

OptResult solve_kkt(const QuadraticProblem& p, const KktOptions& opts) {
  const Eigen::Index n = p.size();
  if (n == 0 || p.H.cols() != n || p.b.size() != n)
    throw DimensionError("solve_kkt: inconsistent problem dimensions");
  if (opts.ridge < 0.0) throw ConfigError("ridge must be >= 0");
  const Factored f = factor(p.H, opts);

  OptResult r;
  r.ridge_used = f.ridge;
  r.condition = f.condition;
  const CVec y2 = f.ldlt.solve(p.b);

  if (!opts.stacked) {
    if (p.t0.size() != n) throw DimensionError("solve_kkt: t0 length differs from H");
    const CVec y1 = f.ldlt.solve(p.t0.adjoint());
    const cplx denom = (p.t0 * y1)(0);
    if (!(p.t0.norm() > 1e-300) || !(std::abs(denom) > 0.0))
      throw SolverError("degenerate constraint: t0 is numerically zero");
    // Stationarity: H' g + b - eta t0^H = 0, with t0 g = t0p.
    r.eta_hat = (p.t0p + (p.t0 * y2)(0)) / denom;
    r.gamma_hat = r.eta_hat * y1 - y2;
    r.constraint_residual = std::abs((p.t0 * r.gamma_hat)(0) - p.t0p);
    CVec stat = p.H * r.gamma_hat + f.ridge * r.gamma_hat + p.b - r.eta_hat * p.t0.adjoint();
    r.stationarity_residual = stat.norm() / p.scale();
  } else {
    if (p.T0.cols() != n || p.T0.rows() != p.t0p_rows.size())
      throw DimensionError("solve_kkt: stacked constraint rows missing");
    // Compress the per-sample rows to an independent set first.
    Eigen::JacobiSVD<CMat> svd(p.T0, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RVec sv = svd.singularValues();
    Eigen::Index rank = 0;
    while (rank < sv.size() && sv[rank] > 1e-12 * sv[0]) ++rank;
    if (rank == 0) throw SolverError("degenerate constraint: stacked rows are zero");
    const CMat C = sv.head(rank).asDiagonal() * svd.matrixV().leftCols(rank).adjoint();
    const CVec d = svd.matrixU().leftCols(rank).adjoint() * p.t0p_rows;
    const CMat Y1 = f.ldlt.solve(C.adjoint());
    const CMat M = C * Y1;
    const CVec eta = M.ldlt().solve(d + C * y2);
    r.stacked = true;
    r.eta_rows = eta;
    r.gamma_hat = Y1 * eta - y2;
    r.constraint_residual = (p.T0 * r.gamma_hat - p.t0p_rows).norm();
    r.stationarity_residual =
        (p.H * r.gamma_hat + f.ridge * r.gamma_hat + p.b - C.adjoint() * eta).norm() / p.scale();
  }
  r.objective_at_opt = evaluate_objective(p, r.gamma_hat);
  return r;
}

CMat null_space(const CMat& A, double tol) {
  const Eigen::Index n = A.cols();
  if (A.rows() == 0) return CMat::Identity(n, n);
  Eigen::JacobiSVD<CMat> svd(A, Eigen::ComputeFullV);
  const RVec sv = svd.singularValues();
  Eigen::Index rank = 0;
  const double cut = sv.size() ? tol * std::max(sv[0], 1e-300) : 0.0;
  while (rank < sv.size() && sv[rank] > cut) ++rank;
  return svd.matrixV().rightCols(n - rank);
}

CVec oracle_solve(const QuadraticProblem& p, bool stacked) {
  const CMat C = stacked ? p.T0 : CMat(p.t0);
  CVec d(stacked ? p.t0p_rows.size() : 1);
  if (stacked)
    d = p.t0p_rows;
  else
    d[0] = p.t0p;
  if (C.cols() != p.size()) throw DimensionError("oracle_solve: constraint width differs from H");

  const CVec g_part = Eigen::CompleteOrthogonalDecomposition<CMat>(C).solve(d);
  const CMat Z = null_space(C);
  if (Z.cols() == 0) return g_part;
  const CMat R = Z.adjoint() * p.H * Z;
  const CVec rhs = -Z.adjoint() * (p.H * g_part + p.b);
  const CVec u = Eigen::CompleteOrthogonalDecomposition<CMat>(R).solve(rhs);
  return g_part + Z * u;
}

double evaluate_objective(const QuadraticProblem& p, const CVec& g) {
  if (g.size() != p.size()) throw DimensionError("evaluate_objective: gamma length differs from H");
  return (g.adjoint() * p.H * g)(0).real() + 2.0 * (g.adjoint() * p.b)(0).real() + p.c0;
}

}  // namespace pwdpd
