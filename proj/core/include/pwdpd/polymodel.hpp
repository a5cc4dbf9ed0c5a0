#pragma once

#include <cstdint>
#include <vector>

#include "pwdpd/types.hpp"

namespace pwdpd {

/// One dual-input basis function psi_p^v(s) * C^v(c):
///   v=0: s^{p+1} conj(s)^p
///   v=1: s^p conj(s)^p * c
///   v=2: s^{p+1} conj(s)^{p-1} * conj(c)   (p >= 1)
struct BasisTerm {
  int p = 0;
  int v = 0;

  [[nodiscard]] bool valid() const { return p >= 0 && v >= 0 && v <= 2 && (v != 2 || p >= 1); }
  [[nodiscard]] bool is_linear() const { return p == 0 && v == 0; }
  friend bool operator==(const BasisTerm&, const BasisTerm&) = default;
  friend auto operator<=>(const BasisTerm&, const BasisTerm&) = default;
};

/// Ordered basis of a dual-input memoryless polynomial. terms[0] is always the
/// linear term (0,0); the remaining Q terms are the nonlinear ones.
class BasisSpec {
 public:
  BasisSpec() = default;
  BasisSpec(std::vector<BasisTerm> terms, int order_P);

  [[nodiscard]] const std::vector<BasisTerm>& terms() const { return terms_; }
  [[nodiscard]] int order() const { return order_P_; }
  [[nodiscard]] int size() const { return static_cast<int>(terms_.size()); }
  /// Number of nonlinear terms Q.
  [[nodiscard]] int nonlinear_count() const { return size() - 1; }
  /// Index of (p,v) in terms(), or -1.
  [[nodiscard]] int index_of(BasisTerm t) const;
  /// Indices of the nonlinear terms sorted ascending by (p, then v): the order
  /// in which post-weighting outputs are ranked by dominance.
  [[nodiscard]] std::vector<int> nonlinear_order() const;

  friend bool operator==(const BasisSpec&, const BasisSpec&) = default;

 private:
  std::vector<BasisTerm> terms_;
  int order_P_ = 1;
};

/// Complex coefficients aligned index-for-index with a BasisSpec.
using CoeffVector = CVec;

struct PaModel {
  BasisSpec spec;
  CoeffVector coeffs;

  PaModel() = default;
  PaModel(BasisSpec s, CoeffVector c);

  /// Coefficient of (p,v), zero when the term is absent.
  [[nodiscard]] cplx coeff(BasisTerm t) const;
  [[nodiscard]] cplx linear_gain() const { return coeff({0, 0}); }
};

BasisSpec default_dpd_spec();
BasisSpec default_pa_spec();

/// Nominal PA coefficients on default_pa_spec().
CoeffVector nominal_pa_coeffs();

/// Synthetic PA bank: nominal coefficients with each real and imaginary part
/// scaled by (1 + delta), delta ~ U(-spread, spread), seeded.
std::vector<PaModel> make_pa_bank(int count, std::uint64_t seed, double spread = 0.05,
                                  const BasisSpec& spec = default_pa_spec(),
                                  const CoeffVector& nominal = nominal_pa_coeffs());

cplx eval_basis(BasisTerm term, cplx s, cplx c);

/// Per-sample sum_i coeffs[i] * eval_basis(terms[i], s[n], c[n]).
CVec eval_poly(const BasisSpec& spec, const CoeffVector& coeffs, const CVec& s, const CVec& c);

/// N x (Q+1) matrix whose row n is the basis row evaluated at (s[n], c[n]).
CMat build_regressor(const BasisSpec& spec, const CVec& s, const CVec& c);

struct LsOptions {
  bool strict = true;
  double condition_cap = 1e10;
};

struct LsFit {
  CoeffVector coeffs;
  double condition = 0.0;  // of the column-equilibrated regressor
  int rank = 0;
};

/// Least-squares fit of y ~ Psi(s,c) * coeffs via a rank-revealing complete
/// orthogonal decomposition of the column-equilibrated regressor. In strict
/// mode a condition above the cap (or any rank loss) raises
/// IdentificationError; otherwise the minimum-norm solution is returned.
LsFit ls_fit(const BasisSpec& spec, const CVec& s, const CVec& c, const CVec& y,
             const LsOptions& opts = {});

inline CoeffVector ls_identify(const BasisSpec& spec, const CVec& s, const CVec& c,
                               const CVec& y, const LsOptions& opts = {}) {
  return ls_fit(spec, s, c, y, opts).coeffs;
}

/// Same solver applied to an already assembled regressor.
LsFit ls_solve(const CMat& regressor, const CVec& y, const LsOptions& opts = {});

}  // namespace pwdpd
