#pragma once

#include <string>
#include <vector>

#include "pwdpd/arraysim.hpp"
#include "pwdpd/dpdtrain.hpp"

namespace pwdpd {

enum class PwScheme { FF, LC };

std::string to_string(PwScheme s);
PwScheme scheme_from_string(const std::string& s);

/// Exact positive rational, used for the LC common ratio r.
struct Ratio {
  long num = 1;
  long den = 1;

  [[nodiscard]] double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator==(const Ratio&, const Ratio&) = default;
};

/// Assignment of post-weighting coefficients to (nonlinear DPD output q, PA l).
/// Output q (in dominance order) carries counts[q] coefficients, each shared
/// by one contiguous group of PAs. Compact indices run output by output.
struct PwLayout {
  PwScheme scheme = PwScheme::FF;
  int S = 1;
  int Q = 1;
  Ratio r{1, 1};
  int nu = 0;
  std::vector<int> counts;
  std::vector<std::vector<int>> assignment;  // [q][l] -> compact index
  int n_gamma = 0;
  int n_adders = 0;
  int n_rf = 0;
  int m_split = 0;  // outputs whose geometric count S r^(nu+q) is >= 1

  [[nodiscard]] int index(int q, int l) const {
    return assignment[static_cast<std::size_t>(q)][static_cast<std::size_t>(l)];
  }
};

/// FF ignores r and nu (it is the r = 1, nu = 0 member of the family).
PwLayout build_layout(PwScheme scheme, int S, int Q, Ratio r = {1, 1}, int nu = 0);

/// Closed-form coefficient count of the LC layout, independent of the
/// enumeration in build_layout.
double closed_form_n_gamma(int S, int Q, double r, int nu);

/// Per-(output, PA) vector of length S*Q, q-major, carrying compact[index(q,l)].
CVec expand_gamma(const PwLayout& layout, const CVec& gamma);

/// 0/1 matrix D (S*Q x n_gamma) with expand_gamma(g) = D g.
RMat duplication_matrix(const PwLayout& layout);

/// DPD-side quantities for the subarray under post-weighting, computed once:
/// the per-PA drive signals of the whole array under DPD-only operation, the
/// corresponding ground-truth PA outputs, and the Q nonlinear DPD outputs.
struct PwContext {
  const ArrayModel* model = nullptr;
  int k = 0;
  CMat s;                             // K x N messages
  std::vector<TrainingResult> dpd;    // one per subarray
  std::vector<int> nl_order;          // spec indices of nonlinear outputs, dominance order
  CMat V;                             // N x Q, column q = phi_q * Psi_q(s_k, c_k)
  CVec u0;                            // linear DPD output phi_0 * s_k
  CMat drive_dpd;                     // KS x N DPD-only drives
  CMat Y_dpd;                         // KS x N PA outputs under DPD-only drives
  SimMode mode = SimMode::FixedPointExact;
};

PwContext make_pw_context(const ArrayModel& model, int k, const CMat& s,
                          std::vector<TrainingResult> dpd,
                          SimMode mode = SimMode::FixedPointExact);

/// Per-PA drives (KS x N) where subarray k applies the expanded PW
/// coefficients to its nonlinear DPD outputs and every other subarray keeps
/// its DPD-only drive.
CMat pw_drives(const PwContext& ctx, const PwLayout& layout, const CVec& gamma);

/// Desired linear beam term at `angle`: G(angle) * phi_0 * s_k.
CVec desired_linear(const ArrayModel& model, int k, double angle, cplx phi0, const CVec& s_k);

/// Nonlinear radiation of subarray k at `angle` under DPD-only operation.
CVec dpd_nonlinear_radiation(const PwContext& ctx, double angle);

struct RadiationOperator {
  CMat T;      // N x n_gamma
  CVec z_res;  // N
  double angle = 0.0;
};

/// Structured form of the same operator: T_FF(n, q*S + l) = V(n,q) * gain(l).
struct OperatorFactors {
  CVec gain;   // S: h_kl(angle) w_kl phi_kl0^0
  CVec z_res;  // N
  double angle = 0.0;
};

/// Full FF-ordered operator (N x S*Q) before duplication.
CMat full_operator(const CMat& V, const CVec& gain);

RadiationOperator assemble_radiation_operator(const PwContext& ctx, const PwLayout& layout,
                                              double angle);
OperatorFactors operator_factors(const PwContext& ctx, double angle);

}  // namespace pwdpd
