#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <unsupported/Eigen/FFT>

#include "doctest.h"
#include "fixtures.hpp"
#include "pwdpd/signalgen.hpp"

using namespace pwdpd;

TEST_SUITE("signalgen") {

TEST_CASE("all subcarriers inactive gives a zero block") {
  SignalConfig cfg;
  cfg.n_subcarriers = 8;
  cfg.active_mask.assign(8, false);
  cfg.allow_all_zero = true;
  const ComplexBlock b = generate_multicarrier(cfg);
  CHECK(b.size() == 8 * 4 * 16);
  CHECK(b.samples.cwiseAbs().maxCoeff() == 0.0);

  cfg.allow_all_zero = false;
  CHECK_THROWS_AS(generate_multicarrier(cfg), ConfigError);
}

TEST_CASE("single active subcarrier has constant unit modulus") {
  for (Synthesis syn : {Synthesis::PerSymbol, Synthesis::Block}) {
    SignalConfig cfg;
    cfg.n_subcarriers = 16;
    cfg.active_mask.assign(16, false);
    cfg.active_mask[3] = true;
    cfg.synthesis = syn;
    if (syn == Synthesis::Block) cfg.n_symbols = 1;  // one fine bin, a pure tone
    const ComplexBlock b = generate_multicarrier(cfg);
    for (Eigen::Index n = 0; n < b.size(); ++n) CHECK(std::abs(b.samples[n]) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("normalized block has unit mean power") {
  SignalConfig cfg;
  cfg.n_subcarriers = 64;
  cfg.oversampling = 4;
  cfg.seed = 7;
  const ComplexBlock b = generate_multicarrier(cfg);
  double p = 0.0;
  for (Eigen::Index n = 0; n < b.size(); ++n) p += std::norm(b.samples[n]);
  p /= static_cast<double>(b.size());
  CHECK(std::abs(p - 1.0) < 1e-9);
  CHECK(b.size() == 64 * 4 * 16);
  CHECK(b.rate == 4.0);
}

TEST_CASE("generation is deterministic and seed dependent") {
  SignalConfig cfg;
  cfg.constellation = Constellation::QAM16;
  const ComplexBlock a = generate_multicarrier(cfg);
  const ComplexBlock b = generate_multicarrier(cfg);
  CHECK(a.samples == b.samples);
  cfg.seed = 8;
  const ComplexBlock c = generate_multicarrier(cfg);
  CHECK((a.samples - c.samples).norm() > 1.0);
}

TEST_CASE("block synthesis is band-limited to the occupied bins") {
  SignalConfig cfg;
  cfg.n_subcarriers = 32;
  cfg.oversampling = 4;
  cfg.n_symbols = 8;
  cfg.synthesis = Synthesis::Block;
  const ComplexBlock b = generate_multicarrier(cfg);
  const Eigen::Index n = b.size();
  Eigen::FFT<double> fft;
  std::vector<cplx> time(b.samples.data(), b.samples.data() + n);
  std::vector<cplx> freq;
  fft.fwd(freq, time);
  // Occupied fine bins: [-16*8, 16*8) around DC.
  const Eigen::Index half = 16 * 8;
  double in = 0.0;
  double out = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index f = j < n / 2 ? j : j - n;
    (f >= -half && f < half ? in : out) += std::norm(freq[static_cast<std::size_t>(j)]);
  }
  CHECK(out / in < 1e-24);
}

TEST_CASE("configuration errors") {
  SignalConfig cfg;
  cfg.n_subcarriers = 0;
  CHECK_THROWS_AS(generate_multicarrier(cfg), ConfigError);
  cfg = SignalConfig{};
  cfg.oversampling = 2;
  CHECK_THROWS_AS(generate_multicarrier(cfg), ConfigError);
  cfg = SignalConfig{};
  cfg.active_mask.assign(3, true);
  CHECK_THROWS_AS(generate_multicarrier(cfg), ConfigError);
}

TEST_CASE("nmse examples") {
  std::mt19937_64 rng(3);
  const CVec ref = fixtures::crandn(rng, 257);
  CHECK(nmse_db(ref, ref) == kFloorDb);
  CHECK(nmse_db(ref, CVec(2.0 * ref)) == doctest::Approx(0.0).epsilon(1e-12));

  const CVec test = fixtures::crandn(rng, 257);
  double num = 0.0;
  double den = 0.0;
  for (Eigen::Index n = 0; n < ref.size(); ++n) {
    num += std::norm(ref[n] - test[n]);
    den += std::norm(ref[n]);
  }
  CHECK(nmse_db(ComplexBlock(ref), ComplexBlock(test)) ==
        doctest::Approx(10.0 * std::log10(num / den)).epsilon(1e-12));

  CHECK_THROWS_AS(nmse_db(ref, CVec(ref.head(10))), DimensionError);
  CHECK_THROWS_AS(nmse_db(CVec::Zero(4), CVec::Ones(4)), DimensionError);
}

TEST_CASE("block text round trip is exact") {
  SignalConfig cfg;
  cfg.n_subcarriers = 8;
  cfg.n_symbols = 2;
  const ComplexBlock b = generate_multicarrier(cfg);
  std::stringstream ss;
  write_block(ss, b);
  const ComplexBlock r = read_block(ss);
  CHECK(r.rate == b.rate);
  CHECK(r.samples == b.samples);

  std::istringstream bad("# rate=1\n1.0;2.0\n");
  CHECK_THROWS_AS(read_block(bad), ConfigError);
}

TEST_CASE("unit_uniform maps into [0,1)") {
  CHECK(unit_uniform(0) == 0.0);
  CHECK(unit_uniform(~std::uint64_t{0}) < 1.0);
  CHECK(unit_uniform(std::uint64_t{1} << 63) == 0.5);
}

}
