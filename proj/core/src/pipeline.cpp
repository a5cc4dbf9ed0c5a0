#include "pwdpd/pipeline.hpp"

#include "pwdpd/serialize.hpp"
#include "pwdpd/signalgen.hpp"

namespace pwdpd {

CMat make_messages(const Scenario& sc) {
  SignalConfig cfg = sc.signal;
  CMat s(sc.geometry.K, cfg.block_length());
  for (int k = 0; k < sc.geometry.K; ++k) {
    cfg.seed = sc.seed_signal + static_cast<std::uint64_t>(k);
    s.row(k) = sc.drive_rms * generate_multicarrier(cfg).samples.transpose();
  }
  return s;
}

ArrayModel make_array(const Scenario& sc) {
  const ArrayGeometry& g = sc.geometry;
  std::vector<PaModel> pas;
  if (!sc.pa_files.empty()) {
    for (const auto& f : sc.pa_files) pas.push_back(read_pa_model_file(f));
  } else {
    pas = make_pa_bank(g.n_pa(), sc.seed_pa_bank, sc.pa_spread);
  }
  CrosstalkModel x = build_crosstalk(g, sc.adjacent_db, sc.phase_rule, pas, sc.seed_phase);
  return ArrayModel(g, BeamWeights::steer(g, sc.phi0), std::move(pas), std::move(x));
}

Setup prepare(const Scenario& sc) {
  Setup st{sc, make_array(sc), make_messages(sc), CMat::Zero(sc.geometry.K, sc.geometry.K), {}};
  for (int k = 0; k < sc.geometry.K; ++k) {
    st.estimates.push_back(estimate_lambda(st.model, k, sc.phi0, st.s));
    st.lambdas.row(k) = st.estimates.back().lambda_k.transpose();
  }
  return st;
}

std::vector<TrainingResult> train_all(const Setup& st) {
  TrainOptions opts;
  opts.tol = st.sc.dpd_tol;
  opts.max_iter = st.sc.dpd_max_iter;
  return train_bo_dpd_all(st.model, st.sc.phi0, st.s, st.sc.dpd_spec, st.lambdas, opts);
}

Optimized optimize_layout(const Setup& st, const PwContext& ctx, const LayoutChoice& choice) {
  Optimized o;
  o.layout = build_layout(choice.scheme, st.sc.geometry.S, st.sc.dpd_spec.nonlinear_count(),
                          choice.r, choice.nu);
  const auto angles = angle_grid(st.sc.sweep_range.first, st.sc.sweep_range.second,
                                 st.sc.sweep_points);
  o.problem = assemble_problem_structured(ctx, o.layout, angles, st.sc.phi0,
                                         st.sc.per_sample_constraint);
  KktOptions kopts;
  kopts.stacked = st.sc.per_sample_constraint;
  kopts.ridge = st.sc.ridge;
  kopts.auto_ridge = st.sc.auto_ridge;
  o.result = solve_kkt(o.problem, kopts);
  return o;
}

namespace {

CMat scheme_outputs(const Setup& st, const PwContext& ctx, const std::string& scheme) {
  if (scheme == "dnr") return dnr_outputs(ctx);
  if (scheme == "dpd") return ctx.Y_dpd;
  if (scheme == "ff" || scheme == "lc") {
    const PwScheme s = scheme == "ff" ? PwScheme::FF : PwScheme::LC;
    const Optimized o = optimize_layout(st, ctx, st.sc.layout_for(s));
    return pw_outputs(ctx, o.layout, o.result.gamma_hat);
  }
  throw ConfigError("unknown scheme \"" + scheme + "\" (expected dnr, dpd, ff or lc)");
}

}  // namespace

SweepResult run_sweep(const Setup& st, const PwContext& ctx, const std::vector<std::string>& schemes) {
  SweepResult r;
  r.angles = angle_grid(st.sc.sweep_range.first, st.sc.sweep_range.second, st.sc.sweep_points);
  const int k = ctx.k;
  const CVec s_k = st.s.row(k).transpose();
  const cplx phi0 = ctx.dpd[static_cast<std::size_t>(k)].phi[0];
  for (const auto& name : schemes) {
    const CMat Y = scheme_outputs(st, ctx, name);
    r.add(name, radiation_curve(st.model, Y, k, name == "dnr" ? cplx(1.0) : phi0, s_k, r.angles));
  }
  return r;
}

AcprResult scheme_acpr(const Setup& st, const PwContext& ctx, const std::string& scheme) {
  const CMat Y = scheme_outputs(st, ctx, scheme);
  const auto angles = angle_grid(st.sc.sweep_range.first, st.sc.sweep_range.second,
                                 st.sc.sweep_points);
  acpr_from_psd(RVec::Ones(kWelchSegment), st.sc.acpr_bw, st.sc.acpr_guard);
  RVec psd = RVec::Zero(kWelchSegment);
  for (double a : angles) psd += welch_psd(beam_output(st.model.geometry(), Y, ctx.k, a));
  return acpr_from_psd(psd, st.sc.acpr_bw, st.sc.acpr_guard);
}

double beam_nmse_db(const Setup& st, const CMat& Y, int k) {
  const double a = st.sc.phi0;
  const CVec z = beam_output(st.model.geometry(), Y, k, a);
  return nmse_db(CVec(st.model.linear_beam_gain(k, a) * st.s.row(k).transpose()), z);
}

}  // namespace pwdpd
