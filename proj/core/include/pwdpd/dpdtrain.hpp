#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "pwdpd/arraysim.hpp"
#include "pwdpd/polymodel.hpp"

namespace pwdpd {

struct LambdaEstimate {
  CVec lambda_k;         // length K
  double residual = 0.0; // norm of the stacked real LS residual
  double condition = 0.0;
};

/// Operation counters collected while training; the per-sample totals follow
/// the (Q+1)^2 + K^2 S cost model.
struct OpCount {
  std::int64_t ls_mults = 0;
  std::int64_t xtalk_mults = 0;
  std::int64_t samples = 0;
};

struct TrainingResult {
  int k = 0;
  BasisSpec spec;
  CoeffVector phi;       // trained BO-DPD coefficients
  CVec c;                // crosstalk-compensation signal c_k at the last iteration
  CVec lambda;           // lambda_k used for c_k
  cplx gain;             // post-inverse normalizer G0
  int iterations = 0;
  std::vector<double> trace;  // relative coefficient change per iteration
  bool converged = false;
  OpCount ops;
};

/// c_k[n] = sum_i lambda_k[i] * sum_l w_il x_i[n]   (x is K x N).
CVec compute_c_k(const ArrayGeometry& g, const CMat& x, const BeamWeights& w,
                 const CVec& lambda_k, OpCount* ops = nullptr);

/// Row n of the structure matrix: sum_l w_il x_i[n] for each subarray i (N x K).
CMat weighted_subarray_sums(const ArrayGeometry& g, const CMat& x, const BeamWeights& w);

struct GTerms {
  CVec g0;  // N
  CMat G1;  // N x K
  CMat G2;  // N x K
};

/// Decomposition z = g0 + G1 lambda_k + G2 conj(lambda_k) of the beam signal of
/// subarray k at `angle` under the rank-one crosstalk approximation. `pas`
/// holds the PA coefficient estimates (defaults to the model's bank). alpha is
/// taken from the model's crosstalk factorization.
GTerms assemble_g_terms(const ArrayModel& model, int k, double angle, const CMat& x,
                        const std::vector<PaModel>* pas = nullptr);

struct EstimateOptions {
  SimMode measure = SimMode::FixedPointExact;
  bool strict = false;
  double condition_cap = 1e10;
};

/// Estimates lambda_k from one measurement with every subarray driven by its
/// message (x = s) by solving the stacked 2N x 2K real system.
LambdaEstimate estimate_lambda(const ArrayModel& model, int k, double angle, const CMat& s,
                               const EstimateOptions& opts = {});

struct TrainOptions {
  double tol = 1e-6;
  int max_iter = 50;
  SimMode measure = SimMode::FixedPointExact;
  double noise_rms = 0.0;  // additive observation noise on z, off by default
  std::uint64_t noise_seed = 0;
};

/// Indirect-learning identification of the BO-DPD of every subarray listed in
/// `active` (all subarrays when empty), jointly, against one simulated array.
/// Inactive subarrays transmit their message unpredistorted. lambdas.row(k) is
/// lambda_k^T.
std::vector<TrainingResult> train_bo_dpd_all(const ArrayModel& model, double angle, const CMat& s,
                                             const BasisSpec& spec, const CMat& lambdas,
                                             const TrainOptions& opts = {},
                                             std::vector<int> active = {});

inline TrainingResult train_bo_dpd(const ArrayModel& model, int k, double angle, const CMat& s,
                                   const BasisSpec& spec, const CMat& lambdas,
                                   const TrainOptions& opts = {}) {
  return train_bo_dpd_all(model, angle, s, spec, lambdas, opts, {k})[static_cast<std::size_t>(k)];
}

/// Predistorted drive x_k = Psi(s_k, c_k) phi_k of a trained subarray.
CVec predistort(const TrainingResult& t, const CVec& s_k);

/// Per-iteration dominant cost model ((Q+1)^2, K^2 S).
std::pair<std::int64_t, std::int64_t> training_cost(int Q, int K, int S);

}  // namespace pwdpd
