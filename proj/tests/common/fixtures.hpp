#pragma once

// Small deterministic models shared by the unit and acceptance tests.

#include <cmath>
#include <random>
#include <string>

#include "pwdpd/pipeline.hpp"

namespace fixtures {

using namespace pwdpd;

inline std::string canonical_path() { return std::string(PWDPD_SCENARIO_DIR) + "/canonical.json"; }

inline cplx crandn(std::mt19937_64& rng) {
  // Box-Muller on the library's uniform mapping, unit variance per complex sample.
  const double u1 = std::max(unit_uniform(rng()), 1e-300);
  const double u2 = unit_uniform(rng());
  const double r = std::sqrt(-std::log(u1));
  return std::polar(r, 2.0 * 3.14159265358979323846 * u2);
}

inline CVec crandn(std::mt19937_64& rng, Eigen::Index n) {
  CVec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = crandn(rng);
  return v;
}

inline CMat crandn(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  CMat m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = crandn(rng);
  return m;
}

/// Scenario small enough for unit tests: K=2, S=4, 1024 samples.
// PA bank without the linear crosstalk class (0,1), so a rank-one effective
// coupling maps back to a coupling matrix with no self-coupling.
inline std::vector<PaModel> rank_one_bank(int count, std::uint64_t seed, double spread = 0.3) {
  CoeffVector nominal = nominal_pa_coeffs();
  nominal[default_pa_spec().index_of({0, 1})] = cplx{};
  return make_pa_bank(count, seed, spread, default_pa_spec(), nominal);
}

inline Scenario small_scenario(double spread = 0.3) {
  Scenario sc;
  sc.geometry = {2, 4, 0.5};
  sc.signal.n_subcarriers = 32;
  sc.signal.n_symbols = 8;
  sc.signal.oversampling = 4;
  sc.signal.synthesis = Synthesis::Block;
  sc.pa_spread = spread;
  sc.sweep_points = 31;
  sc.validate();
  return sc;
}

/// Everything up to a trained DPD and its post-weighting context.
struct Trained {
  Setup st;
  std::vector<TrainingResult> dpd;
};

inline Trained train_small(double spread = 0.3) {
  Trained t{prepare(small_scenario(spread)), {}};
  t.dpd = train_all(t.st);
  return t;
}

/// Shared trained small scenario (30% spread) and its context for subarray 0.
inline const Trained& small_trained() {
  static const Trained t = train_small();
  return t;
}

inline const PwContext& small_context() {
  static const PwContext ctx = make_pw_context(small_trained().st.model, 0, small_trained().st.s,
                                               small_trained().dpd);
  return ctx;
}

}  // namespace fixtures
