#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "pwdpd/polymodel.hpp"
#include "pwdpd/types.hpp"

namespace pwdpd {

/// K subarrays of S PAs each on one uniform line; element (k,l) sits at global
/// position g = k*S + l, spacing in wavelengths.
struct ArrayGeometry {
  int K = 1;
  int S = 1;
  double spacing = 0.5;

  [[nodiscard]] int n_pa() const { return K * S; }
  [[nodiscard]] int index(int k, int l) const { return k * S + l; }
  void validate() const;
};

/// Unit-modulus analog phase-shifter weights, length K*S, grouped per subarray.
class BeamWeights {
 public:
  BeamWeights() = default;
  explicit BeamWeights(CVec w);

  /// Weights that steer every subarray towards `angle`: conj of the steering vector.
  static BeamWeights steer(const ArrayGeometry& g, double angle);

  [[nodiscard]] const CVec& values() const { return w_; }
  [[nodiscard]] cplx operator[](Eigen::Index i) const { return w_[i]; }
  [[nodiscard]] Eigen::Index size() const { return w_.size(); }

 private:
  CVec w_;
};

enum class PhaseRule {
  Alternating,  // exp(-i*pi*d) for element distance d
  Real,         // positive real coupling
  Random,       // seeded uniform phase per element pair
};

/// Coupling network and everything derived from it. lambda_prime maps PA
/// outputs to crosstalk inputs; a0/a1 fold in the PA linear coefficients of
/// the v=0 and v=1 classes; lambda_eff = (I - a1)^{-1} a0 maps beam-weighted
/// drive signals to crosstalk under the linearized model; alpha/lambda_sub are
/// the rank-one per-subarray factorization lambda_eff ~ alpha * lambda_k^T * D1.
struct CrosstalkModel {
  CMat lambda_prime;
  CMat a0;
  CMat a1;
  CMat lambda_eff;
  CVec alpha;
  CMat lambda_sub;  // K x K, row k = lambda_k^T

  [[nodiscard]] bool coupled() const { return lambda_prime.size() > 0 && lambda_prime.norm() > 0.0; }
};

inline constexpr double kNoCoupling = -std::numeric_limits<double>::infinity();

/// |coupling| = 10^(adjacent_db/20) / d^2 between elements d apart, zero on the
/// diagonal. adjacent_db = kNoCoupling gives the zero matrix.
CMat coupling_matrix(const ArrayGeometry& g, double adjacent_db,
                     PhaseRule rule = PhaseRule::Alternating, std::uint64_t phase_seed = 0);

/// Derives a0, a1, lambda_eff and the alpha/lambda_sub factorization from a
/// coupling matrix and the PA bank. Throws ModelError when the spectral radius
/// of a1 is not below one.
CrosstalkModel derive_crosstalk(const ArrayGeometry& g, CMat lambda_prime,
                                const std::vector<PaModel>& pas);

inline CrosstalkModel build_crosstalk(const ArrayGeometry& g, double adjacent_db, PhaseRule rule,
                                      const std::vector<PaModel>& pas,
                                      std::uint64_t phase_seed = 0) {
  return derive_crosstalk(g, coupling_matrix(g, adjacent_db, rule, phase_seed), pas);
}

/// Coupling network whose linearized effective map is exactly
/// alpha * lambda_k^T * D1 for every subarray. Requires a zero diagonal in
/// lambda_sub so that no PA couples to itself.
CrosstalkModel rank_one_crosstalk(const ArrayGeometry& g, const CVec& alpha,
                                  const CMat& lambda_sub, const std::vector<PaModel>& pas);

/// Best rank-one factorization of lambda_eff with a common alpha across
/// subarrays, normalized so max|alpha_l| = 1 and the largest entry is real.
void factor_rank_one(const ArrayGeometry& g, const CMat& lambda_eff, CVec& alpha,
                     CMat& lambda_sub);

class ArrayModel {
 public:
  ArrayModel(ArrayGeometry geometry, BeamWeights weights, std::vector<PaModel> pas,
             CrosstalkModel xtalk);

  [[nodiscard]] const ArrayGeometry& geometry() const { return geometry_; }
  [[nodiscard]] const BeamWeights& weights() const { return weights_; }
  [[nodiscard]] const std::vector<PaModel>& pas() const { return pas_; }
  [[nodiscard]] const PaModel& pa(int k, int l) const {
    return pas_[static_cast<std::size_t>(geometry_.index(k, l))];
  }
  [[nodiscard]] const CrosstalkModel& xtalk() const { return xtalk_; }

  /// sum_l h_kl(angle) w_kl phi_kl0^0: linear gain of subarray k towards angle.
  [[nodiscard]] cplx linear_beam_gain(int k, double angle) const;

 private:
  ArrayGeometry geometry_;
  BeamWeights weights_;
  std::vector<PaModel> pas_;
  CrosstalkModel xtalk_;
};

/// Steering elements of subarray k: exp(i 2 pi spacing g sin(angle)) with g the
/// global element index.
CVec steering_vector(const ArrayGeometry& g, int k, double angle);
CVec steering_full(const ArrayGeometry& g, double angle);

/// Per-subarray signals (K x N) replicated to per-PA drive rows (KS x N).
CMat expand_subarray_signals(const ArrayGeometry& g, const CMat& x);

/// Linearized crosstalk c = lambda_eff * W_D * drive (KS x N).
CMat solve_crosstalk_linearized(const ArrayModel& model, const CMat& pa_drive);

enum class SimMode { LinearizedXtalk, FixedPointExact };

struct SimOptions {
  double tol = 1e-10;
  int max_iter = 100;
};

struct SimResult {
  CMat Y;  // PA outputs, KS x N
  CMat c;  // crosstalk inputs, KS x N
  int iterations = 0;
  double residual = 0.0;
};

/// PA bank outputs for per-PA baseband drives (before the phase shifters).
SimResult simulate_pa_drives(const ArrayModel& model, const CMat& pa_drive, SimMode mode,
                             const SimOptions& opts = {});

/// PA bank outputs when every PA of subarray k is driven by x.row(k).
inline SimResult simulate_subarrays(const ArrayModel& model, const CMat& x, SimMode mode,
                                    const SimOptions& opts = {}) {
  return simulate_pa_drives(model, expand_subarray_signals(model.geometry(), x), mode, opts);
}

/// Outputs of every PA for given inputs (w*drive) and crosstalk.
CMat pa_bank_outputs(const ArrayModel& model, const CMat& pa_drive, const CMat& c);

/// Beam-oriented signal z = sum_l h_kl(angle) y_kl.
CVec beam_output(const ArrayGeometry& g, const CMat& Y, int k, double angle);

}  // namespace pwdpd
