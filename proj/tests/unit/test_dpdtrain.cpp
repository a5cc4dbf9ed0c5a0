#include <cmath>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "pwdpd/dpdtrain.hpp"

using namespace pwdpd;

namespace {

ArrayModel rank_one_model(const ArrayGeometry& g, std::uint64_t seed, CMat* lsub_out) {
  std::mt19937_64 rng(seed);
  CVec alpha(g.S);
  for (int l = 0; l < g.S; ++l) alpha[l] = std::polar(0.6 + 0.4 * unit_uniform(rng()), 0.3 * l);
  // same normalization as the library factorization: max |alpha| = 1, that entry real
  Eigen::Index imax = 0;
  alpha.cwiseAbs().maxCoeff(&imax);
  alpha /= alpha[imax];
  CMat lsub = 0.03 * fixtures::crandn(rng, g.K, g.K);
  lsub.diagonal().setZero();
  auto pas = fixtures::rank_one_bank(g.n_pa(), seed + 1);
  CrosstalkModel x = rank_one_crosstalk(g, alpha, lsub, pas);
  if (lsub_out) *lsub_out = lsub;
  return ArrayModel(g, BeamWeights::steer(g, 0.0), std::move(pas), std::move(x));
}

CMat messages(const ArrayGeometry& g, Eigen::Index n = 1024, std::uint64_t seed = 7) {
  Scenario sc = fixtures::small_scenario();
  sc.geometry = g;
  sc.seed_signal = seed;
  return make_messages(sc).leftCols(n);
}

}  // namespace

TEST_SUITE("dpdtrain") {

TEST_CASE("compute_c_k trivial cases") {
  const ArrayGeometry g{2, 3, 0.5};
  std::mt19937_64 rng(1);
  const CMat x = fixtures::crandn(rng, 2, 16);
  const BeamWeights w = BeamWeights::steer(g, 0.3);
  CHECK(compute_c_k(g, x, w, CVec::Zero(2)).norm() == 0.0);

  const ArrayGeometry one{1, 1, 0.5};
  CVec lam(1);
  lam << 1.0;
  const CMat x1 = fixtures::crandn(rng, 1, 16);
  CHECK(compute_c_k(one, x1, BeamWeights(CVec::Ones(1)), lam) == CVec(x1.row(0).transpose()));
}

TEST_CASE("compute_c_k matches the literal matrix product") {
  const ArrayGeometry g{3, 4, 0.5};
  std::mt19937_64 rng(2);
  const CMat x = fixtures::crandn(rng, 3, 32);
  const BeamWeights w = BeamWeights::steer(g, -0.6);
  const CVec lam = fixtures::crandn(rng, 3);

  const CMat X = expand_subarray_signals(g, x);  // KS x N
  CMat W = CMat::Zero(12, 12);
  W.diagonal() = w.values();
  RMat D1 = RMat::Zero(3, 12);
  for (int k = 0; k < 3; ++k) D1.block(k, k * 4, 1, 4).setOnes();
  const CVec ref = X.transpose() * W.transpose() * D1.transpose().cast<cplx>() * lam;

  OpCount ops;
  const CVec c = compute_c_k(g, x, w, lam, &ops);
  CHECK((c - ref).norm() < 1e-12 * ref.norm());
  CHECK(ops.xtalk_mults > 0);
}

TEST_CASE("G terms vanish for crosstalk-insensitive PAs") {
  const ArrayGeometry g{2, 3, 0.5};
  CoeffVector cf(3);
  cf << 1.0, cplx(-0.05, 0.01), 0.004;
  std::vector<PaModel> pas(6, PaModel(BasisSpec({{0, 0}, {1, 0}, {2, 0}}, 5), cf));
  CrosstalkModel xt = build_crosstalk(g, -10.0, PhaseRule::Alternating, pas);
  const ArrayModel m(g, BeamWeights::steer(g, 0.2), pas, xt);
  const CMat x = messages(g, 256);
  const GTerms gt = assemble_g_terms(m, 1, 0.4, x);
  CHECK(gt.G1.norm() == 0.0);
  CHECK(gt.G2.norm() == 0.0);
  // With no crosstalk class in the PAs the measured output is g0 exactly.
  const SimResult sim = simulate_subarrays(m, x, SimMode::FixedPointExact);
  CHECK((beam_output(g, sim.Y, 1, 0.4) - gt.g0).norm() < 1e-12 * gt.g0.norm());
}

TEST_CASE("G terms of linear PAs reduce to the linear beam gain") {
  const ArrayGeometry g{2, 4, 0.5};
  CoeffVector cf(1);
  std::vector<PaModel> pas;
  for (int m = 0; m < 8; ++m) {
    cf << cplx(1.0 + 0.05 * m, -0.02 * m);
    pas.emplace_back(BasisSpec({{0, 0}}, 1), cf);
  }
  CrosstalkModel xt = build_crosstalk(g, kNoCoupling, PhaseRule::Alternating, pas);
  const ArrayModel m(g, BeamWeights::steer(g, 0.1), pas, xt);
  const CMat x = messages(g, 128);
  const GTerms gt = assemble_g_terms(m, 0, 0.35, x);
  const CVec h = steering_vector(g, 0, 0.35);
  cplx gain{};
  for (int l = 0; l < 4; ++l) gain += h[l] * m.weights()[l] * pas[static_cast<std::size_t>(l)].coeffs[0];
  CHECK((gt.g0 - gain * CVec(x.row(0).transpose())).norm() < 1e-12 * gt.g0.norm());
}

TEST_CASE("G-term decomposition reproduces the simulated beam signal") {
  const ArrayGeometry g{2, 4, 0.5};
  CMat lsub;
  const ArrayModel m = rank_one_model(g, 31, &lsub);
  const CMat x = messages(g, 512);
  for (int k = 0; k < 2; ++k) {
    const GTerms gt = assemble_g_terms(m, k, 0.0, x);
    const CVec lam = lsub.row(k).transpose();
    const CVec model_z = gt.g0 + gt.G1 * lam + gt.G2 * lam.conjugate();
    const SimResult lin = simulate_subarrays(m, x, SimMode::LinearizedXtalk);
    // exact under the linearized crosstalk when the rank-one structure holds
    CHECK(nmse_db(CVec(beam_output(g, lin.Y, k, 0.0)), model_z) < -200.0);
    const SimResult ex = simulate_subarrays(m, x, SimMode::FixedPointExact);
    const double lin_err = nmse_db(CVec(beam_output(g, ex.Y, k, 0.0)), CVec(beam_output(g, lin.Y, k, 0.0)));
    CHECK(nmse_db(CVec(beam_output(g, ex.Y, k, 0.0)), model_z) <= lin_err + 1.0);
  }
}

TEST_CASE("lambda recovery on exact rank-one ground truth") {
  const ArrayGeometry g{2, 8, 0.5};
  CMat lsub;
  const ArrayModel m = rank_one_model(g, 41, &lsub);
  // low drive: the PA nonlinearity feeding back into the crosstalk grows with rms^2
  const CMat s = 0.2 * messages(g, 2048);
  for (int k = 0; k < 2; ++k) {
    const LambdaEstimate e = estimate_lambda(m, k, 0.0, s);
    const CVec truth = lsub.row(k).transpose();
    CHECK((e.lambda_k - truth).norm() / truth.norm() < 1e-3);
    EstimateOptions lin;
    lin.measure = SimMode::LinearizedXtalk;
    const LambdaEstimate el = estimate_lambda(m, k, 0.0, s, lin);
    CHECK((el.lambda_k - truth).norm() / truth.norm() < 1e-9);
  }
}

TEST_CASE("lambda estimate without coupling is zero") {
  const ArrayGeometry g{2, 4, 0.5};
  auto pas = make_pa_bank(8, 3, 0.3);
  CrosstalkModel xt = build_crosstalk(g, kNoCoupling, PhaseRule::Alternating, pas);
  const ArrayModel m(g, BeamWeights::steer(g, 0.0), pas, xt);
  const LambdaEstimate e = estimate_lambda(m, 0, 0.0, messages(g, 256));
  CHECK(e.lambda_k.norm() < 1e-6);
  EstimateOptions strict;
  strict.strict = true;
  CHECK_THROWS_AS(estimate_lambda(m, 0, 0.0, messages(g, 256), strict), IdentificationError);
}

TEST_CASE("real coupling on one subarray gives a real lambda") {
  const ArrayGeometry g{1, 8, 0.5};
  // identical PAs with real coefficients
  CoeffVector nominal = nominal_pa_coeffs().real().cast<cplx>();
  auto pas = make_pa_bank(8, 0, 0.0, default_pa_spec(), nominal);
  CrosstalkModel xt = build_crosstalk(g, -10.0, PhaseRule::Real, pas);
  const ArrayModel m(g, BeamWeights(CVec::Ones(8)), pas, xt);
  const LambdaEstimate e = estimate_lambda(m, 0, 0.0, messages(g, 1024));
  CHECK(std::abs(e.lambda_k[0].imag()) < 1e-6);
  CHECK(e.lambda_k[0].real() > 0.0);
}

TEST_CASE("ideal linear PAs need no predistortion") {
  const ArrayGeometry g{2, 4, 0.5};
  CoeffVector cf(1);
  cf << cplx(0.8, 0.3);
  std::vector<PaModel> pas(8, PaModel(BasisSpec({{0, 0}}, 1), cf));
  CrosstalkModel xt = build_crosstalk(g, kNoCoupling, PhaseRule::Alternating, pas);
  const ArrayModel m(g, BeamWeights::steer(g, 0.0), pas, xt);
  const auto r = train_bo_dpd(m, 0, 0.0, messages(g, 512), default_dpd_spec(), CMat::Zero(2, 2));
  CHECK(r.converged);
  CHECK(r.iterations <= 2);
  CHECK(std::abs(r.phi[0] - 1.0) < 1e-10);
  CHECK(r.phi.tail(6).norm() < 1e-10);
}

TEST_CASE("training on the small scenario converges and linearizes") {
  const fixtures::Trained t = fixtures::train_small();
  const Setup& st = t.st;
  for (const auto& r : t.dpd) {
    CHECK(r.converged);
    CHECK(r.iterations <= 50);
    CHECK(r.trace.back() < st.sc.dpd_tol);
    CHECK(r.ops.ls_mults == r.ops.samples * 49);
  }
  const int k = 0;
  CMat x = st.s;
  for (int i = 0; i < 2; ++i) x.row(i) = predistort(t.dpd[static_cast<std::size_t>(i)], st.s.row(i).transpose()).transpose();
  const SimResult with = simulate_subarrays(st.model, x, SimMode::FixedPointExact);
  const SimResult without = simulate_subarrays(st.model, st.s, SimMode::FixedPointExact);
  const double nmse_dpd = beam_nmse_db(st, with.Y, k);
  const double nmse_raw = beam_nmse_db(st, without.Y, k);
  CHECK(nmse_raw - nmse_dpd >= 20.0);

  // best scalar fit of the beam output to the message stays near G0
  const CVec z = beam_output(st.model.geometry(), with.Y, k, st.sc.phi0);
  const CVec sk = st.s.row(k).transpose();
  const cplx fit = sk.dot(z) / sk.squaredNorm();
  const cplx g0 = st.model.linear_beam_gain(k, st.sc.phi0);
  CHECK(std::abs(fit - g0) / std::abs(g0) < 0.05);
}

TEST_CASE("zero iterations leave training unconverged") {
  const ArrayGeometry g{2, 4, 0.5};
  const ArrayModel m = rank_one_model(g, 5, nullptr);
  TrainOptions o;
  o.max_iter = 0;
  const auto r = train_bo_dpd_all(m, 0.0, messages(g, 256), default_dpd_spec(),
                                  CMat::Zero(2, 2), o);
  CHECK_FALSE(r[0].converged);
  CHECK(r[0].iterations == 0);
  o.max_iter = -1;
  CHECK_THROWS_AS(train_bo_dpd_all(m, 0.0, messages(g, 256), default_dpd_spec(),
                                   CMat::Zero(2, 2), o),
                  ConfigError);
  CHECK_THROWS_AS(train_bo_dpd_all(m, 0.0, messages(g, 256), default_dpd_spec(),
                                   CMat::Zero(3, 3)),
                  DimensionError);
}

TEST_CASE("training cost model") {
  CHECK(training_cost(6, 2, 16) == std::pair<std::int64_t, std::int64_t>{49, 64});
  CHECK(training_cost(0, 3, 5) == std::pair<std::int64_t, std::int64_t>{1, 45});
}

}
