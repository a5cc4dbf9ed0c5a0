#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pwdpd/arraysim.hpp"
#include "pwdpd/postweight.hpp"
#include "pwdpd/signalgen.hpp"

namespace pwdpd {

inline constexpr int kScenarioMajor = 1;

struct LayoutChoice {
  PwScheme scheme = PwScheme::FF;
  Ratio r{1, 1};
  int nu = 0;
};

struct Scenario {
  std::string source;  // path the scenario was read from, if any

  SignalConfig signal;
  double drive_rms = 0.3;

  ArrayGeometry geometry{2, 16, 0.5};
  double adjacent_db = -10.0;
  PhaseRule phase_rule = PhaseRule::Alternating;
  double pa_spread = 0.05;
  std::vector<std::string> pa_files;  // K*S files, overrides the synthetic bank

  BasisSpec dpd_spec = default_dpd_spec();
  double dpd_tol = 1e-6;
  int dpd_max_iter = 50;

  int subarray = 0;
  double phi0 = 0.0;
  std::pair<double, double> sweep_range{-1.5707963267948966, 1.5707963267948966};
  int sweep_points = 121;

  std::vector<LayoutChoice> layouts{{PwScheme::FF, {1, 1}, 0}, {PwScheme::LC, {1, 2}, 1}};

  double ridge = 0.0;
  bool auto_ridge = true;
  bool per_sample_constraint = false;  // optimizer.constraint = "per_sample"

  double acpr_bw = 0.25;
  double acpr_guard = 0.0;

  std::uint64_t seed_signal = 7;
  std::uint64_t seed_pa_bank = 11;
  std::uint64_t seed_phase = 13;

  std::string output_dir = "out";

  void validate() const;
  /// First layout of the given scheme in `layouts`, or the scheme's default.
  [[nodiscard]] LayoutChoice layout_for(PwScheme s) const;
};

/// Parses a scenario document. Unknown fields and type mismatches raise
/// ConfigError naming the field (e.g. "signal.n_subcarriers").
Scenario parse_scenario(const std::string& text, const std::string& source = "");
Scenario load_scenario(const std::string& path);

/// "1/2", "0.25" or "1" into an exact ratio (decimals with up to 9 digits).
Ratio parse_ratio(const std::string& text);

}  // namespace pwdpd
