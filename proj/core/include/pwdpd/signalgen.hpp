#pragma once

#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "pwdpd/types.hpp"

namespace pwdpd {

/// Identifier of the pseudo-random engine behind every seeded draw in the
/// library. Written into result documents so fixtures can be regenerated.
inline constexpr std::string_view kRngAlgorithm = "mt19937_64";

enum class Constellation { QPSK, QAM16 };

/// PerSymbol: one inverse DFT of size n_subcarriers*oversampling per symbol,
/// symbols concatenated. Block: a single inverse DFT over the whole block with
/// each subcarrier split into n_symbols fine bins, which keeps the block
/// periodic and strictly band-limited (no symbol-boundary spectral regrowth).
enum class Synthesis { PerSymbol, Block };

struct SignalConfig {
  int n_subcarriers = 64;
  std::vector<bool> active_mask;  // empty means "all active"
  Constellation constellation = Constellation::QPSK;
  int oversampling = 4;
  int n_symbols = 16;
  std::uint64_t seed = 7;
  bool normalize = true;
  bool allow_all_zero = false;
  Synthesis synthesis = Synthesis::PerSymbol;

  [[nodiscard]] Eigen::Index block_length() const {
    return static_cast<Eigen::Index>(n_subcarriers) * oversampling * n_symbols;
  }
  void validate() const;
};

/// Multicarrier test block: random constellation points on the active bins
/// (centered on DC), inverse DFT of size n_subcarriers*oversampling per symbol,
/// no cyclic prefix. Occupied bandwidth is 1/oversampling in normalized units.
ComplexBlock generate_multicarrier(const SignalConfig& cfg);

/// 10*log10(sum|ref-test|^2 / sum|ref|^2). kFloorDb when the error vanishes.
double nmse_db(const ComplexBlock& ref, const ComplexBlock& test);
double nmse_db(const CVec& ref, const CVec& test);

/// Uniform double in [0,1) from the top 53 bits of a 64-bit draw. Used instead
/// of std::uniform_real_distribution so results do not depend on the standard
/// library implementation.
double unit_uniform(std::uint64_t bits);

// Columnar text format: "# rate=<value>" header, then one "re,im" line per sample.
void write_block(std::ostream& os, const ComplexBlock& block);
ComplexBlock read_block(std::istream& is);

}  // namespace pwdpd
