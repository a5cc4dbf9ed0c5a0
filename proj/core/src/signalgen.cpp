#include "pwdpd/signalgen.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <string>

#include <unsupported/Eigen/FFT>

namespace pwdpd {

double ComplexBlock::mean_power() const {
  if (samples.size() == 0) return 0.0;
  return samples.squaredNorm() / static_cast<double>(samples.size());
}

void SignalConfig::validate() const {
  if (n_subcarriers <= 0) throw ConfigError("signal.n_subcarriers must be positive");
  if (n_symbols <= 0) throw ConfigError("signal.n_symbols must be positive");
  if (oversampling < 4) throw ConfigError("signal.oversampling must be >= 4");
  if (!active_mask.empty() && static_cast<int>(active_mask.size()) != n_subcarriers)
    throw ConfigError("signal.active_mask length must equal n_subcarriers");
}

double unit_uniform(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

namespace {

cplx draw_symbol(std::mt19937_64& rng, Constellation c) {
  const std::uint64_t bits = rng() >> 60;  // top four bits
  if (c == Constellation::QPSK) {
    const double re = (bits & 1U) ? 1.0 : -1.0;
    const double im = (bits & 2U) ? 1.0 : -1.0;
    return cplx(re, im) / std::numbers::sqrt2;
  }
  static constexpr double levels[4] = {-3.0, -1.0, 1.0, 3.0};
  return cplx(levels[bits & 3U], levels[(bits >> 2) & 3U]) / std::sqrt(10.0);
}

}  // namespace

ComplexBlock generate_multicarrier(const SignalConfig& cfg) {
  cfg.validate();
  const int n_fft = cfg.n_subcarriers * cfg.oversampling;
  bool any_active = cfg.active_mask.empty();
  for (bool a : cfg.active_mask) any_active = any_active || a;
  if (!any_active && !cfg.allow_all_zero)
    throw ConfigError("signal.active_mask has no active subcarrier");

  std::mt19937_64 rng(cfg.seed);
  Eigen::FFT<double> fft;
  std::vector<cplx> bins(static_cast<std::size_t>(n_fft));
  std::vector<cplx> time;
  CVec out(cfg.block_length());

  if (cfg.synthesis == Synthesis::Block) {
    const Eigen::Index n_total = cfg.block_length();
    const int fine = cfg.n_symbols;
    std::vector<cplx> all_bins(static_cast<std::size_t>(n_total));
    for (int j = 0; j < cfg.n_subcarriers; ++j) {
      if (!cfg.active_mask.empty() && !cfg.active_mask[static_cast<std::size_t>(j)]) continue;
      for (int m = 0; m < fine; ++m) {
        Eigen::Index b = static_cast<Eigen::Index>(j - cfg.n_subcarriers / 2) * fine + m;
        if (b < 0) b += n_total;
        all_bins[static_cast<std::size_t>(b)] = draw_symbol(rng, cfg.constellation);
      }
    }
    fft.inv(time, all_bins);
    for (Eigen::Index n = 0; n < n_total; ++n) out[n] = time[static_cast<std::size_t>(n)];
  } else {
    for (int sym = 0; sym < cfg.n_symbols; ++sym) {
      std::fill(bins.begin(), bins.end(), cplx{});
      for (int j = 0; j < cfg.n_subcarriers; ++j) {
        if (!cfg.active_mask.empty() && !cfg.active_mask[static_cast<std::size_t>(j)]) continue;
        int b = j - cfg.n_subcarriers / 2;
        if (b < 0) b += n_fft;
        bins[static_cast<std::size_t>(b)] = draw_symbol(rng, cfg.constellation);
      }
      fft.inv(time, bins);
      for (int n = 0; n < n_fft; ++n)
        out[static_cast<Eigen::Index>(sym) * n_fft + n] = time[static_cast<std::size_t>(n)];
    }
  }

  if (cfg.normalize) {
    const double p = out.squaredNorm() / static_cast<double>(out.size());
    if (p > 0.0) out /= std::sqrt(p);
  }
  return ComplexBlock(std::move(out), static_cast<double>(cfg.oversampling));
}

double nmse_db(const CVec& ref, const CVec& test) {
  if (ref.size() != test.size())
    throw DimensionError("nmse_db: length mismatch (" + std::to_string(ref.size()) + " vs " +
                         std::to_string(test.size()) + ")");
  const double den = ref.squaredNorm();
  if (den == 0.0) throw DimensionError("nmse_db: reference block is all zero");
  const double num = (ref - test).squaredNorm();
  const double ratio = num / den;
  if (!(ratio > 1e-30)) return kFloorDb;
  return 10.0 * std::log10(ratio);
}

double nmse_db(const ComplexBlock& ref, const ComplexBlock& test) {
  return nmse_db(ref.samples, test.samples);
}

void write_block(std::ostream& os, const ComplexBlock& block) {
  char buf[64];
  auto put = [&](double v) {
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    os.write(buf, res.ptr - buf);
  };
  os << "# rate=";
  put(block.rate);
  os << '\n';
  for (Eigen::Index n = 0; n < block.size(); ++n) {
    put(block.samples[n].real());
    os << ',';
    put(block.samples[n].imag());
    os << '\n';
  }
}

ComplexBlock read_block(std::istream& is) {
  std::string line;
  double rate = 1.0;
  std::vector<cplx> vals;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto pos = line.find("rate=");
      if (pos != std::string::npos) rate = std::stod(line.substr(pos + 5));
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw ConfigError("block line " + std::to_string(lineno) + ": expected \"re,im\"");
    double re = 0.0;
    double im = 0.0;
    const char* b = line.data();
    auto r1 = std::from_chars(b, b + comma, re);
    auto r2 = std::from_chars(b + comma + 1, b + line.size(), im);
    if (r1.ec != std::errc{} || r2.ec != std::errc{})
      throw ConfigError("block line " + std::to_string(lineno) + ": malformed number");
    vals.emplace_back(re, im);
  }
  if (vals.empty()) throw ConfigError("block file contains no samples");
  CVec s(static_cast<Eigen::Index>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i) s[static_cast<Eigen::Index>(i)] = vals[i];
  return ComplexBlock(std::move(s), rate);
}

}  // namespace pwdpd
