#include "pwdpd/arraysim.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "pwdpd/signalgen.hpp"

namespace pwdpd {

void ArrayGeometry::validate() const {
  if (K < 1) throw ConfigError("array.K must be >= 1");
  if (S < 1) throw ConfigError("array.S must be >= 1");
  if (!(spacing > 0.0)) throw ConfigError("array.spacing must be positive");
}

BeamWeights::BeamWeights(CVec w) : w_(std::move(w)) {
  for (Eigen::Index i = 0; i < w_.size(); ++i)
    if (std::abs(std::abs(w_[i]) - 1.0) > 1e-12)
      throw ConfigError("beam weight " + std::to_string(i) + " is not unit modulus");
}

BeamWeights BeamWeights::steer(const ArrayGeometry& g, double angle) {
  return BeamWeights(steering_full(g, angle).conjugate());
}

CVec steering_full(const ArrayGeometry& g, double angle) {
  const double step = 2.0 * std::numbers::pi * g.spacing * std::sin(angle);
  CVec h(g.n_pa());
  for (int m = 0; m < g.n_pa(); ++m) h[m] = std::polar(1.0, step * m);
  return h;
}

CVec steering_vector(const ArrayGeometry& g, int k, double angle) {
  return steering_full(g, angle).segment(static_cast<Eigen::Index>(k) * g.S, g.S);
}

CMat coupling_matrix(const ArrayGeometry& g, double adjacent_db, PhaseRule rule,
                     std::uint64_t phase_seed) {
  g.validate();
  const int n = g.n_pa();
  CMat L = CMat::Zero(n, n);
  if (std::isinf(adjacent_db) && adjacent_db < 0) return L;
  if (!(adjacent_db < 0.0)) throw ConfigError("array.adjacent_db must be negative");
  const double mag1 = std::pow(10.0, adjacent_db / 20.0);
  std::mt19937_64 rng(phase_seed);
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      const int d = b - a;
      const double mag = mag1 / (static_cast<double>(d) * d);
      double phase = 0.0;
      switch (rule) {
        case PhaseRule::Alternating: phase = -std::numbers::pi * d; break;
        case PhaseRule::Real: phase = 0.0; break;
        case PhaseRule::Random: phase = 2.0 * std::numbers::pi * unit_uniform(rng()); break;
      }
      L(a, b) = L(b, a) = std::polar(mag, phase);
    }
  }
  return L;
}

void factor_rank_one(const ArrayGeometry& g, const CMat& lambda_eff, CVec& alpha,
                     CMat& lambda_sub) {
  const int K = g.K;
  const int S = g.S;
  // M = [M_1 ... M_K], M_k(l, i) = mean over r of lambda_eff((k,l), (i,r)).
  CMat M(S, K * K);
  for (int k = 0; k < K; ++k)
    for (int i = 0; i < K; ++i)
      M.col(k * K + i) =
          lambda_eff.block(k * S, i * S, S, S).rowwise().sum() / static_cast<double>(S);

  alpha = CVec::Zero(S);
  lambda_sub = CMat::Zero(K, K);
  if (M.norm() == 0.0) return;

  Eigen::JacobiSVD<CMat> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double sigma = svd.singularValues()[0];
  const CVec u = svd.matrixU().col(0);
  const CVec v = svd.matrixV().col(0);
  Eigen::Index lmax = 0;
  u.cwiseAbs().maxCoeff(&lmax);
  const cplx pivot = u[lmax];
  alpha = u / pivot;
  const CRowVec row = sigma * pivot * v.adjoint();
  for (int k = 0; k < K; ++k)
    for (int i = 0; i < K; ++i) lambda_sub(k, i) = row[k * K + i];
}

CrosstalkModel derive_crosstalk(const ArrayGeometry& g, CMat lambda_prime,
                                const std::vector<PaModel>& pas) {
  g.validate();
  const int n = g.n_pa();
  if (lambda_prime.rows() != n || lambda_prime.cols() != n)
    throw DimensionError("coupling matrix must be KS x KS");
  if (static_cast<int>(pas.size()) != n) throw DimensionError("PA bank size must equal K*S");
  for (int m = 0; m < n; ++m)
    if (std::abs(lambda_prime(m, m)) > 1e-12 * (1.0 + lambda_prime.norm()))
      throw ModelError("coupling matrix has nonzero self-coupling at element " +
                       std::to_string(m));

  CVec phi0(n);
  CVec phi1(n);
  for (int m = 0; m < n; ++m) {
    phi0[m] = pas[static_cast<std::size_t>(m)].coeff({0, 0});
    phi1[m] = pas[static_cast<std::size_t>(m)].coeff({0, 1});
  }

  CrosstalkModel x;
  x.lambda_prime = std::move(lambda_prime);
  x.a0 = x.lambda_prime * phi0.asDiagonal();
  x.a1 = x.lambda_prime * phi1.asDiagonal();

  const double rho = x.a1.size() ? Eigen::ComplexEigenSolver<CMat>(x.a1, false)
                                       .eigenvalues()
                                       .cwiseAbs()
                                       .maxCoeff()
                                 : 0.0;
  if (!(rho < 1.0))
    throw ModelError("spectral radius of A1 is " + std::to_string(rho) + " (must be < 1)");

  const CMat I = CMat::Identity(n, n);
  x.lambda_eff = (I - x.a1).partialPivLu().solve(x.a0);
  factor_rank_one(g, x.lambda_eff, x.alpha, x.lambda_sub);
  return x;
}

CrosstalkModel rank_one_crosstalk(const ArrayGeometry& g, const CVec& alpha,
                                  const CMat& lambda_sub, const std::vector<PaModel>& pas) {
  g.validate();
  const int K = g.K;
  const int S = g.S;
  if (alpha.size() != S) throw DimensionError("alpha must have length S");
  if (lambda_sub.rows() != K || lambda_sub.cols() != K)
    throw DimensionError("lambda_sub must be K x K");
  if (static_cast<int>(pas.size()) != K * S) throw DimensionError("PA bank size must equal K*S");
  for (int k = 0; k < K; ++k)
    if (lambda_sub(k, k) != cplx{})
      throw ModelError("rank-one coupling needs a zero diagonal in lambda_sub");

  const int n = K * S;
  CMat E(n, n);
  for (int k = 0; k < K; ++k)
    for (int l = 0; l < S; ++l)
      for (int i = 0; i < K; ++i)
        for (int r = 0; r < S; ++r) E(k * S + l, i * S + r) = alpha[l] * lambda_sub(k, i);

  CVec phi0(n);
  CVec phi1(n);
  for (int m = 0; m < n; ++m) {
    phi0[m] = pas[static_cast<std::size_t>(m)].coeff({0, 0});
    phi1[m] = pas[static_cast<std::size_t>(m)].coeff({0, 1});
  }
  // lambda' (Phi0 + Phi1 E) = E  <=>  (I - lambda' Phi1)^{-1} lambda' Phi0 = E.
  const CMat rhs = CMat(phi0.asDiagonal()) + phi1.asDiagonal() * E;
  CMat lp = rhs.transpose().partialPivLu().solve(E.transpose()).transpose();
  return derive_crosstalk(g, std::move(lp), pas);
}

ArrayModel::ArrayModel(ArrayGeometry geometry, BeamWeights weights, std::vector<PaModel> pas,
                       CrosstalkModel xtalk)
    : geometry_(geometry), weights_(std::move(weights)), pas_(std::move(pas)),
      xtalk_(std::move(xtalk)) {
  geometry_.validate();
  const int n = geometry_.n_pa();
  if (weights_.size() != n) throw DimensionError("beam weights must have length K*S");
  if (static_cast<int>(pas_.size()) != n) throw DimensionError("PA bank size must equal K*S");
  if (xtalk_.lambda_eff.rows() != n || xtalk_.lambda_prime.rows() != n)
    throw DimensionError("crosstalk model does not match the array size");
}

cplx ArrayModel::linear_beam_gain(int k, double angle) const {
  const CVec h = steering_vector(geometry_, k, angle);
  cplx g{};
  for (int l = 0; l < geometry_.S; ++l)
    g += h[l] * weights_[geometry_.index(k, l)] * pa(k, l).linear_gain();
  return g;
}

CMat expand_subarray_signals(const ArrayGeometry& g, const CMat& x) {
  if (x.rows() != g.K) throw DimensionError("expected one signal row per subarray");
  CMat out(g.n_pa(), x.cols());
  for (int k = 0; k < g.K; ++k)
    for (int l = 0; l < g.S; ++l) out.row(g.index(k, l)) = x.row(k);
  return out;
}

CMat solve_crosstalk_linearized(const ArrayModel& model, const CMat& pa_drive) {
  if (pa_drive.rows() != model.geometry().n_pa())
    throw DimensionError("drive matrix must have K*S rows");
  return model.xtalk().lambda_eff * (model.weights().values().asDiagonal() * pa_drive);
}

CMat pa_bank_outputs(const ArrayModel& model, const CMat& pa_drive, const CMat& c) {
  const int n = model.geometry().n_pa();
  CMat Y(n, pa_drive.cols());
  for (int m = 0; m < n; ++m) {
    const PaModel& pa = model.pas()[static_cast<std::size_t>(m)];
    const CVec in = model.weights()[m] * pa_drive.row(m).transpose();
    Y.row(m) = eval_poly(pa.spec, pa.coeffs, in, c.row(m).transpose()).transpose();
  }
  return Y;
}

SimResult simulate_pa_drives(const ArrayModel& model, const CMat& pa_drive, SimMode mode,
                             const SimOptions& opts) {
  SimResult r;
  r.c = solve_crosstalk_linearized(model, pa_drive);
  r.Y = pa_bank_outputs(model, pa_drive, r.c);
  if (mode == SimMode::LinearizedXtalk || !model.xtalk().coupled()) return r;

  const CMat& lp = model.xtalk().lambda_prime;
  for (int it = 1; it <= opts.max_iter; ++it) {
    CMat c_next = lp * r.Y;
    r.residual = (c_next - r.c).cwiseAbs().maxCoeff();
    r.c = std::move(c_next);
    r.Y = pa_bank_outputs(model, pa_drive, r.c);
    r.iterations = it;
    if (r.residual < opts.tol) return r;
  }
  throw SimulationError("crosstalk fixed point did not converge after " +
                            std::to_string(opts.max_iter) + " iterations (residual " +
                            std::to_string(r.residual) + ")",
                        r.residual);
}

CVec beam_output(const ArrayGeometry& g, const CMat& Y, int k, double angle) {
  if (Y.rows() != g.n_pa()) throw DimensionError("beam_output: Y must have K*S rows");
  const CVec h = steering_vector(g, k, angle);
  return (h.transpose() * Y.middleRows(static_cast<Eigen::Index>(k) * g.S, g.S)).transpose();
}

}  // namespace pwdpd
