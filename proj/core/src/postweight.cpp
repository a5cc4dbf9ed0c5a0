#include "pwdpd/postweight.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace pwdpd {

std::string to_string(PwScheme s) { return s == PwScheme::FF ? "FF" : "LC"; }

PwScheme scheme_from_string(const std::string& s) {
  if (s == "FF" || s == "ff") return PwScheme::FF;
  if (s == "LC" || s == "lc") return PwScheme::LC;
  throw ConfigError("unknown post-weighting scheme \"" + s + "\" (expected FF or LC)");
}

namespace {

// floor(S * (num/den)^e), or 0 when the value is below one. Exact integer
// arithmetic; overflow of den^e implies the value is far below one.
struct GeomCount {
  long floor_value = 0;
  bool at_least_one = false;
  bool integral = false;
};

GeomCount geometric_count(int S, Ratio r, int e) {
  long num = S;
  long den = 1;
  for (int i = 0; i < e; ++i) {
    long n2 = 0;
    long d2 = 0;
    if (__builtin_mul_overflow(num, r.num, &n2) || __builtin_mul_overflow(den, r.den, &d2))
      return {0, false, false};
    num = n2;
    den = d2;
  }
  GeomCount g;
  g.floor_value = num / den;
  g.at_least_one = num >= den;
  g.integral = num % den == 0;
  return g;
}

long ceil_geometric(int S, Ratio r, int e) {
  const GeomCount g = geometric_count(S, r, e);
  if (!g.at_least_one) return 1;  // 0 < value < 1
  return g.integral ? g.floor_value : g.floor_value + 1;
}

}  // namespace

PwLayout build_layout(PwScheme scheme, int S, int Q, Ratio r, int nu) {
  if (S < 1) throw ConfigError("layout S must be >= 1");
  if (Q < 1) throw ConfigError("layout Q must be >= 1");
  if (scheme == PwScheme::FF) {
    r = {1, 1};
    nu = 0;
  } else {
    if (r.num <= 0 || r.den <= 0 || r.num > r.den)
      throw ConfigError("LC ratio r must satisfy 0 < r <= 1");
    if (nu < 0) throw ConfigError("LC nu must be >= 0");
  }

  PwLayout L;
  L.scheme = scheme;
  L.S = S;
  L.Q = Q;
  L.r = r;
  L.nu = nu;
  L.assignment.assign(static_cast<std::size_t>(Q), std::vector<int>(static_cast<std::size_t>(S)));
  int offset = 0;
  for (int q = 0; q < Q; ++q) {
    const GeomCount g = geometric_count(S, r, nu + q);
    const int cnt = g.at_least_one ? static_cast<int>(g.floor_value) : 1;
    if (g.at_least_one) ++L.m_split;
    L.counts.push_back(cnt);
    for (int l = 0; l < S; ++l) {
      const int group = static_cast<int>(static_cast<long>(l) * cnt / S);
      L.assignment[static_cast<std::size_t>(q)][static_cast<std::size_t>(l)] = offset + group;
    }
    offset += cnt;
  }
  L.n_gamma = offset;
  L.n_rf = L.counts.front();
  L.n_adders = L.n_gamma + L.counts.front() - static_cast<int>(ceil_geometric(S, r, nu + Q - 1));
  return L;
}

double closed_form_n_gamma(int S, int Q, double r, int nu) {
  if (r == 1.0) return static_cast<double>(S) * Q;
  auto partial = [&](int m) { return S * std::pow(r, nu) * (1.0 - std::pow(r, m)) / (1.0 - r); };
  const double eps = 1e-9;
  if (S * std::pow(r, Q + nu - 1) >= 1.0 - eps) return partial(Q);
  for (int m = 0; m < Q; ++m) {
    const bool upper = m == 0 || S * std::pow(r, m + nu - 1) >= 1.0 - eps;
    if (upper && S * std::pow(r, m + nu) < 1.0 - eps) return partial(m) + Q - m;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

CVec expand_gamma(const PwLayout& layout, const CVec& gamma) {
  if (gamma.size() != layout.n_gamma)
    throw DimensionError("gamma length " + std::to_string(gamma.size()) +
                         " does not match layout n_gamma " + std::to_string(layout.n_gamma));
  CVec out(static_cast<Eigen::Index>(layout.S) * layout.Q);
  for (int q = 0; q < layout.Q; ++q)
    for (int l = 0; l < layout.S; ++l) out[q * layout.S + l] = gamma[layout.index(q, l)];
  return out;
}

RMat duplication_matrix(const PwLayout& layout) {
  RMat D = RMat::Zero(static_cast<Eigen::Index>(layout.S) * layout.Q, layout.n_gamma);
  for (int q = 0; q < layout.Q; ++q)
    for (int l = 0; l < layout.S; ++l) D(q * layout.S + l, layout.index(q, l)) = 1.0;
  return D;
}

PwContext make_pw_context(const ArrayModel& model, int k, const CMat& s,
                          std::vector<TrainingResult> dpd, SimMode mode) {
  const ArrayGeometry& g = model.geometry();
  if (k < 0 || k >= g.K) throw DimensionError("subarray index out of range");
  if (static_cast<int>(dpd.size()) != g.K)
    throw ModelError("untrained DPD: need one training result per subarray");
  for (const auto& t : dpd)
    if (t.phi.size() == 0 || t.c.size() != s.cols())
      throw ModelError("untrained DPD for subarray " + std::to_string(t.k));

  PwContext ctx;
  ctx.model = &model;
  ctx.k = k;
  ctx.s = s;
  ctx.dpd = std::move(dpd);
  ctx.mode = mode;

  const TrainingResult& t = ctx.dpd[static_cast<std::size_t>(k)];
  const CVec s_k = s.row(k).transpose();
  ctx.nl_order = t.spec.nonlinear_order();
  const Eigen::Index N = s.cols();
  ctx.V.resize(N, static_cast<Eigen::Index>(ctx.nl_order.size()));
  for (std::size_t q = 0; q < ctx.nl_order.size(); ++q) {
    const int j = ctx.nl_order[q];
    const BasisTerm term = t.spec.terms()[static_cast<std::size_t>(j)];
    for (Eigen::Index n = 0; n < N; ++n)
      ctx.V(n, static_cast<Eigen::Index>(q)) = t.phi[j] * eval_basis(term, s_k[n], t.c[n]);
  }
  ctx.u0 = t.phi[0] * s_k;

  ctx.drive_dpd.resize(g.n_pa(), N);
  for (int i = 0; i < g.K; ++i) {
    const CVec xi = predistort(ctx.dpd[static_cast<std::size_t>(i)], s.row(i).transpose());
    for (int l = 0; l < g.S; ++l) ctx.drive_dpd.row(g.index(i, l)) = xi.transpose();
  }
  ctx.Y_dpd = simulate_pa_drives(model, ctx.drive_dpd, mode).Y;
  return ctx;
}

CMat pw_drives(const PwContext& ctx, const PwLayout& layout, const CVec& gamma) {
  const ArrayGeometry& g = ctx.model->geometry();
  if (layout.S != g.S || layout.Q != ctx.V.cols())
    throw DimensionError("layout does not match the subarray (S, Q)");
  const CVec full = expand_gamma(layout, gamma);
  CMat drives = ctx.drive_dpd;
  for (int l = 0; l < g.S; ++l) {
    CVec x = ctx.u0;
    for (int q = 0; q < layout.Q; ++q) x += full[q * layout.S + l] * ctx.V.col(q);
    drives.row(g.index(ctx.k, l)) = x.transpose();
  }
  return drives;
}

CVec desired_linear(const ArrayModel& model, int k, double angle, cplx phi0, const CVec& s_k) {
  return model.linear_beam_gain(k, angle) * phi0 * s_k;
}

CVec dpd_nonlinear_radiation(const PwContext& ctx, double angle) {
  const ArrayModel& m = *ctx.model;
  const cplx phi0 = ctx.dpd[static_cast<std::size_t>(ctx.k)].phi[0];
  return beam_output(m.geometry(), ctx.Y_dpd, ctx.k, angle) -
         desired_linear(m, ctx.k, angle, phi0, ctx.s.row(ctx.k).transpose());
}

CMat full_operator(const CMat& V, const CVec& gain) {
  const Eigen::Index S = gain.size();
  CMat T(V.rows(), V.cols() * S);
  for (Eigen::Index q = 0; q < V.cols(); ++q)
    T.middleCols(q * S, S) = V.col(q) * gain.transpose();
  return T;
}

OperatorFactors operator_factors(const PwContext& ctx, double angle) {
  const ArrayModel& m = *ctx.model;
  const ArrayGeometry& g = m.geometry();
  const CVec h = steering_vector(g, ctx.k, angle);
  OperatorFactors f;
  f.angle = angle;
  f.gain.resize(g.S);
  for (int l = 0; l < g.S; ++l)
    f.gain[l] = h[l] * m.weights()[g.index(ctx.k, l)] * m.pa(ctx.k, l).linear_gain();
  // T * 1 for any layout equals V * 1_Q * sum(gain).
  const CVec t_ones = ctx.V.rowwise().sum() * f.gain.sum();
  f.z_res = dpd_nonlinear_radiation(ctx, angle) - t_ones;
  return f;
}

RadiationOperator assemble_radiation_operator(const PwContext& ctx, const PwLayout& layout,
                                              double angle) {
  if (layout.S != ctx.model->geometry().S || layout.Q != ctx.V.cols())
    throw DimensionError("layout does not match the subarray (S, Q)");
  const OperatorFactors f = operator_factors(ctx, angle);
  RadiationOperator op;
  op.angle = angle;
  op.T = full_operator(ctx.V, f.gain) * duplication_matrix(layout).cast<cplx>();
  op.z_res = dpd_nonlinear_radiation(ctx, angle) - op.T * CVec::Ones(layout.n_gamma);
  return op;
}

}  // namespace pwdpd
