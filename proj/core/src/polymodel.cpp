#include "pwdpd/polymodel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <string>

#include "pwdpd/signalgen.hpp"

namespace pwdpd {

BasisSpec::BasisSpec(std::vector<BasisTerm> terms, int order_P)
    : terms_(std::move(terms)), order_P_(order_P) {
  if (order_P_ < 1 || order_P_ % 2 == 0)
    throw ConfigError("basis order_P must be an odd positive integer, got " +
                      std::to_string(order_P_));
  if (terms_.empty() || !terms_.front().is_linear())
    throw ConfigError("basis terms[0] must be the linear term (0,0)");
  const int p_max = (order_P_ - 1) / 2;
  std::set<BasisTerm> seen;
  for (const auto& t : terms_) {
    if (!t.valid())
      throw ConfigError("invalid basis term (" + std::to_string(t.p) + "," +
                        std::to_string(t.v) + ")");
    if (t.p > p_max)
      throw ConfigError("basis term p=" + std::to_string(t.p) + " exceeds (P-1)/2=" +
                        std::to_string(p_max));
    if (!seen.insert(t).second)
      throw ConfigError("duplicate basis term (" + std::to_string(t.p) + "," +
                        std::to_string(t.v) + ")");
  }
}

int BasisSpec::index_of(BasisTerm t) const {
  auto it = std::find(terms_.begin(), terms_.end(), t);
  return it == terms_.end() ? -1 : static_cast<int>(it - terms_.begin());
}

std::vector<int> BasisSpec::nonlinear_order() const {
  std::vector<int> idx;
  for (int i = 1; i < size(); ++i) idx.push_back(i);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    return terms_[static_cast<std::size_t>(a)] < terms_[static_cast<std::size_t>(b)];
  });
  return idx;
}

PaModel::PaModel(BasisSpec s, CoeffVector c) : spec(std::move(s)), coeffs(std::move(c)) {
  if (coeffs.size() != spec.size())
    throw ModelError("PA coefficient count " + std::to_string(coeffs.size()) +
                     " does not match basis size " + std::to_string(spec.size()));
  if (!coeffs.allFinite()) throw ModelError("PA coefficients must be finite");
  if (coeffs[0] == cplx{}) throw ModelError("PA linear coefficient must be nonzero");
}

cplx PaModel::coeff(BasisTerm t) const {
  const int i = spec.index_of(t);
  return i < 0 ? cplx{} : coeffs[i];
}

BasisSpec default_dpd_spec() {
  return BasisSpec({{0, 0}, {1, 0}, {2, 0}, {3, 0}, {0, 1}, {1, 1}, {1, 2}}, 7);
}

BasisSpec default_pa_spec() { return default_dpd_spec(); }

CoeffVector nominal_pa_coeffs() {
  CoeffVector c(7);
  c << cplx(1.0, 0.0), cplx(-0.08, 0.02), cplx(-0.015, 0.0), cplx(0.0, 0.002),
      cplx(0.05, 0.0), cplx(0.01, 0.0), cplx(0.005, 0.0);
  return c;
}

std::vector<PaModel> make_pa_bank(int count, std::uint64_t seed, double spread,
                                  const BasisSpec& spec, const CoeffVector& nominal) {
  if (count < 1) throw ConfigError("PA bank size must be positive");
  if (nominal.size() != spec.size())
    throw ConfigError("nominal PA coefficients do not match the PA basis");
  std::mt19937_64 rng(seed);
  auto delta = [&] { return spread * (2.0 * unit_uniform(rng()) - 1.0); };
  std::vector<PaModel> bank;
  bank.reserve(static_cast<std::size_t>(count));
  for (int m = 0; m < count; ++m) {
    CoeffVector c(nominal.size());
    for (Eigen::Index i = 0; i < nominal.size(); ++i) {
      const double re = nominal[i].real() * (1.0 + delta());
      const double im = nominal[i].imag() * (1.0 + delta());
      c[i] = cplx(re, im);
    }
    bank.emplace_back(spec, std::move(c));
  }
  return bank;
}

namespace {

double ipow(double x, int e) {
  double r = 1.0;
  for (; e > 0; --e) r *= x;
  return r;
}

}  // namespace

cplx eval_basis(BasisTerm term, cplx s, cplx c) {
  const double mag2 = std::norm(s);
  switch (term.v) {
    case 0:
      return s * ipow(mag2, term.p);
    case 1:
      return ipow(mag2, term.p) * c;
    default:
      return s * s * ipow(mag2, term.p - 1) * std::conj(c);
  }
}

CVec eval_poly(const BasisSpec& spec, const CoeffVector& coeffs, const CVec& s, const CVec& c) {
  if (s.size() != c.size()) throw DimensionError("eval_poly: s and c lengths differ");
  if (coeffs.size() != spec.size())
    throw DimensionError("eval_poly: coefficient vector not aligned with basis");
  CVec out = CVec::Zero(s.size());
  for (Eigen::Index n = 0; n < s.size(); ++n) {
    cplx acc{};
    for (int i = 0; i < spec.size(); ++i)
      acc += coeffs[i] * eval_basis(spec.terms()[static_cast<std::size_t>(i)], s[n], c[n]);
    out[n] = acc;
  }
  return out;
}

CMat build_regressor(const BasisSpec& spec, const CVec& s, const CVec& c) {
  if (s.size() != c.size()) throw DimensionError("build_regressor: s and c lengths differ");
  CMat R(s.size(), spec.size());
  for (Eigen::Index n = 0; n < s.size(); ++n)
    for (int i = 0; i < spec.size(); ++i)
      R(n, i) = eval_basis(spec.terms()[static_cast<std::size_t>(i)], s[n], c[n]);
  return R;
}

LsFit ls_solve(const CMat& regressor, const CVec& y, const LsOptions& opts) {
  if (regressor.rows() != y.size()) throw DimensionError("ls_solve: row count mismatch");
  if (regressor.rows() < regressor.cols())
    throw IdentificationError("ls_solve: fewer samples than unknowns",
                              std::numeric_limits<double>::infinity());

  RVec scale = regressor.colwise().norm().transpose();
  for (Eigen::Index j = 0; j < scale.size(); ++j)
    if (scale[j] == 0.0) scale[j] = 1.0;
  const CMat A = regressor * scale.cwiseInverse().asDiagonal();

  const RVec sv = Eigen::JacobiSVD<CMat>(A).singularValues();
  const double smax = sv.size() ? sv[0] : 0.0;
  const double smin = sv.size() ? sv[sv.size() - 1] : 0.0;
  const double cond = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();

  if (opts.strict && !(cond <= opts.condition_cap))
    throw IdentificationError(
        "regressor is rank deficient (condition " + std::to_string(cond) + ")", cond);

  Eigen::CompleteOrthogonalDecomposition<CMat> cod(A);
  LsFit fit;
  fit.coeffs = scale.cwiseInverse().asDiagonal() * cod.solve(y);
  fit.condition = cond;
  fit.rank = static_cast<int>(cod.rank());
  return fit;
}

LsFit ls_fit(const BasisSpec& spec, const CVec& s, const CVec& c, const CVec& y,
             const LsOptions& opts) {
  if (s.size() != y.size()) throw DimensionError("ls_identify: s and y lengths differ");
  return ls_solve(build_regressor(spec, s, c), y, opts);
}

}  // namespace pwdpd
