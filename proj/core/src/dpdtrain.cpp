#include "pwdpd/dpdtrain.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "pwdpd/signalgen.hpp"

namespace pwdpd {

CMat weighted_subarray_sums(const ArrayGeometry& g, const CMat& x, const BeamWeights& w) {
  if (x.rows() != g.K) throw DimensionError("expected one signal row per subarray");
  if (w.size() != g.n_pa()) throw DimensionError("beam weights must have length K*S");
  CMat R(x.cols(), g.K);
  for (int i = 0; i < g.K; ++i) {
    cplx wsum{};
    for (int l = 0; l < g.S; ++l) wsum += w[g.index(i, l)];
    R.col(i) = wsum * x.row(i).transpose();
  }
  return R;
}

CVec compute_c_k(const ArrayGeometry& g, const CMat& x, const BeamWeights& w,
                 const CVec& lambda_k, OpCount* ops) {
  if (lambda_k.size() != g.K) throw DimensionError("lambda_k must have length K");
  if (ops) {
    ops->xtalk_mults += static_cast<std::int64_t>(x.cols()) * g.K * (g.S + 1);
  }
  return weighted_subarray_sums(g, x, w) * lambda_k;
}

GTerms assemble_g_terms(const ArrayModel& model, int k, double angle, const CMat& x,
                        const std::vector<PaModel>* pas) {
  const ArrayGeometry& g = model.geometry();
  if (k < 0 || k >= g.K) throw DimensionError("subarray index out of range");
  const std::vector<PaModel>& bank = pas ? *pas : model.pas();
  if (static_cast<int>(bank.size()) != g.n_pa())
    throw ModelError("missing PA model: need one estimate per PA");

  const Eigen::Index N = x.cols();
  const CVec h = steering_vector(g, k, angle);
  const CVec& alpha = model.xtalk().alpha;
  CVec g0 = CVec::Zero(N);
  CVec a1 = CVec::Zero(N);
  CVec a2 = CVec::Zero(N);
  for (int l = 0; l < g.S; ++l) {
    const int m = g.index(k, l);
    const PaModel& pa = bank[static_cast<std::size_t>(m)];
    const cplx w = model.weights()[m];
    const cplx al = alpha.size() == g.S ? alpha[l] : cplx{};
    for (int i = 0; i < pa.spec.size(); ++i) {
      const BasisTerm t = pa.spec.terms()[static_cast<std::size_t>(i)];
      const cplx coef = pa.coeffs[i] * h[l];
      for (Eigen::Index n = 0; n < N; ++n) {
        const cplx psi = eval_basis(t, w * x(k, n), cplx(1.0, 0.0));
        switch (t.v) {
          case 0: g0[n] += coef * psi; break;
          case 1: a1[n] += coef * al * psi; break;
          default: a2[n] += coef * std::conj(al) * psi; break;
        }
      }
    }
  }
  const CMat R = weighted_subarray_sums(g, x, model.weights());
  GTerms out;
  out.g0 = std::move(g0);
  out.G1 = a1.asDiagonal() * R;
  out.G2 = a2.asDiagonal() * R.conjugate();
  return out;
}

LambdaEstimate estimate_lambda(const ArrayModel& model, int k, double angle, const CMat& s,
                               const EstimateOptions& opts) {
  const ArrayGeometry& g = model.geometry();
  const SimResult sim = simulate_subarrays(model, s, opts.measure);
  const CVec z = beam_output(g, sim.Y, k, angle);
  const GTerms gt = assemble_g_terms(model, k, angle, s);

  const Eigen::Index N = s.cols();
  const int K = g.K;
  RMat A(2 * N, 2 * K);
  A.topLeftCorner(N, K) = (gt.G1 + gt.G2).real();
  A.topRightCorner(N, K) = (gt.G2 - gt.G1).imag();
  A.bottomLeftCorner(N, K) = (gt.G1 + gt.G2).imag();
  A.bottomRightCorner(N, K) = (gt.G1 - gt.G2).real();
  RVec rhs(2 * N);
  const CVec d = z - gt.g0;
  rhs.head(N) = d.real();
  rhs.tail(N) = d.imag();

  LambdaEstimate est;
  est.lambda_k = CVec::Zero(K);
  if (A.norm() == 0.0) {
    est.residual = rhs.norm();
    est.condition = std::numeric_limits<double>::infinity();
    if (opts.strict) throw IdentificationError("lambda system is all zero", est.condition);
    return est;
  }
  const RVec sv = Eigen::JacobiSVD<RMat>(A).singularValues();
  est.condition = sv[sv.size() - 1] > 0.0 ? sv[0] / sv[sv.size() - 1]
                                          : std::numeric_limits<double>::infinity();
  if (opts.strict && !(est.condition <= opts.condition_cap))
    throw IdentificationError("lambda system is ill-conditioned (condition " +
                                  std::to_string(est.condition) + ")",
                              est.condition);
  Eigen::CompleteOrthogonalDecomposition<RMat> cod(A);
  const RVec theta = cod.solve(rhs);
  for (int i = 0; i < K; ++i) est.lambda_k[i] = cplx(theta[i], theta[K + i]);
  est.residual = (A * theta - rhs).norm();
  return est;
}

CVec predistort(const TrainingResult& t, const CVec& s_k) {
  return eval_poly(t.spec, t.phi, s_k, t.c);
}

std::vector<TrainingResult> train_bo_dpd_all(const ArrayModel& model, double angle, const CMat& s,
                                             const BasisSpec& spec, const CMat& lambdas,
                                             const TrainOptions& opts, std::vector<int> active) {
  const ArrayGeometry& g = model.geometry();
  const int K = g.K;
  if (s.rows() != K) throw DimensionError("expected one message row per subarray");
  if (lambdas.rows() != K || lambdas.cols() != K)
    throw DimensionError("lambdas must be K x K (row k = lambda_k)");
  if (opts.max_iter < 0) throw ConfigError("dpd.max_iter must be >= 0");
  if (active.empty())
    for (int k = 0; k < K; ++k) active.push_back(k);
  for (int k : active)
    if (k < 0 || k >= K) throw DimensionError("subarray index out of range");

  const Eigen::Index N = s.cols();
  const int Q = spec.nonlinear_count();

  std::vector<TrainingResult> res(static_cast<std::size_t>(K));
  std::vector<bool> is_active(static_cast<std::size_t>(K), false);
  for (int k : active) is_active[static_cast<std::size_t>(k)] = true;
  for (int k = 0; k < K; ++k) {
    auto& r = res[static_cast<std::size_t>(k)];
    r.k = k;
    r.spec = spec;
    r.phi = CoeffVector::Zero(spec.size());
    r.phi[0] = 1.0;
    r.lambda = lambdas.row(k).transpose();
    r.gain = model.linear_beam_gain(k, angle);
    if (is_active[static_cast<std::size_t>(k)] && std::abs(r.gain) == 0.0)
      throw TrainingError("linear beam gain G0 is zero; cannot normalize", {});
  }

  std::mt19937_64 noise_rng(opts.noise_seed);
  auto gauss = [&] {
    // Box-Muller on the library's own uniform mapping.
    const double u1 = std::max(unit_uniform(noise_rng()), 1e-300);
    const double u2 = unit_uniform(noise_rng());
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  };

  CMat x = s;
  std::vector<CVec> c(static_cast<std::size_t>(K));
  std::vector<int> growth(static_cast<std::size_t>(K), 0);

  auto refresh_c = [&](std::vector<OpCount*> counters) {
    for (int k = 0; k < K; ++k)
      c[static_cast<std::size_t>(k)] =
          compute_c_k(g, x, model.weights(), res[static_cast<std::size_t>(k)].lambda,
                      counters[static_cast<std::size_t>(k)]);
  };
  std::vector<OpCount*> counters(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) counters[static_cast<std::size_t>(k)] = &res[static_cast<std::size_t>(k)].ops;

  refresh_c(counters);
  for (int it = 1; it <= opts.max_iter; ++it) {
    const SimResult sim = simulate_subarrays(model, x, opts.measure);
    bool all_converged = true;
    for (int k : active) {
      auto& r = res[static_cast<std::size_t>(k)];
      CVec z = beam_output(g, sim.Y, k, angle);
      if (opts.noise_rms > 0.0)
        for (Eigen::Index n = 0; n < N; ++n)
          z[n] += opts.noise_rms / std::numbers::sqrt2 * cplx(gauss(), gauss());
      const CVec& ck = c[static_cast<std::size_t>(k)];
      LsOptions ls;
      ls.strict = false;
      const CoeffVector phi_new = ls_identify(spec, z / r.gain, ck, x.row(k).transpose(), ls);
      r.ops.ls_mults += static_cast<std::int64_t>(N) * (Q + 1) * (Q + 1);
      r.ops.samples += N;

      const double change = (phi_new - r.phi).norm() / r.phi.norm();
      if (!r.trace.empty() && change > r.trace.back())
        ++growth[static_cast<std::size_t>(k)];
      else
        growth[static_cast<std::size_t>(k)] = 0;
      r.trace.push_back(change);
      r.phi = phi_new;
      r.iterations = it;
      r.converged = change < opts.tol;
      all_converged = all_converged && r.converged;
      if (!std::isfinite(change) || growth[static_cast<std::size_t>(k)] >= 5)
        throw TrainingError("BO-DPD training of subarray " + std::to_string(k) + " diverged",
                            r.trace);

      x.row(k) = eval_poly(spec, r.phi, s.row(k).transpose(), ck).transpose();
    }
    refresh_c(counters);
    if (all_converged) break;
  }

  for (int k = 0; k < K; ++k) res[static_cast<std::size_t>(k)].c = c[static_cast<std::size_t>(k)];
  return res;
}

std::pair<std::int64_t, std::int64_t> training_cost(int Q, int K, int S) {
  const std::int64_t q1 = static_cast<std::int64_t>(Q) + 1;
  return {q1 * q1, static_cast<std::int64_t>(K) * K * S};
}

}  // namespace pwdpd
