#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "pwdpd/postweight.hpp"
#include "pwdpd/types.hpp"

namespace pwdpd {

/// Power of one or more curves over a common angle grid.
struct SweepResult {
  std::vector<double> angles;
  std::vector<std::string> labels;
  std::vector<std::vector<double>> power_db;  // [label][angle]

  void add(std::string label, std::vector<double> curve);
  [[nodiscard]] const std::vector<double>& curve(const std::string& label) const;
};

struct AcprResult {
  double lower_db = 0.0;
  double upper_db = 0.0;
  double average_db = 0.0;
  double channel_bw = 0.0;
  double guard = 0.0;
};

/// 10*log10(mean|residual|^2 / ref_power), kFloorDb once the ratio underflows.
double radiation_power_db(const CVec& residual, double ref_power);

/// Nonlinear radiation of subarray k over `angles` given the PA outputs Y of
/// the whole array and the DPD linear coefficient (1 for no DPD). Powers are
/// relative to the message power, so a unit-power message sits at 0 dB.
std::vector<double> radiation_curve(const ArrayModel& model, const CMat& Y, int k, cplx phi0,
                                    const CVec& s_k, const std::vector<double>& angles);

/// Message signals transmitted unpredistorted by every subarray.
CMat dnr_outputs(const PwContext& ctx);
/// The post-weighted chain: expanded gamma applied to subarray k's DPD terms.
CMat pw_outputs(const PwContext& ctx, const PwLayout& layout, const CVec& gamma);

std::vector<double> sweep_dnr(const PwContext& ctx, const std::vector<double>& angles);
std::vector<double> sweep_dpd(const PwContext& ctx, const std::vector<double>& angles);
std::vector<double> radiation_sweep(const PwContext& ctx, const PwLayout& layout,
                                    const CVec& gamma, const std::vector<double>& angles);

/// Uniform grid of `points` angles over [lo, hi] inclusive.
std::vector<double> angle_grid(double lo, double hi, int points);

inline constexpr int kWelchSegment = 512;

/// Averaged periodogram: periodic Hann taper, 512-sample segments, 50% overlap.
/// Bin j covers normalized frequency j/512 (wrapped to [-0.5, 0.5)).
RVec welch_psd(const CVec& z);

/// ACPR from an already estimated power spectrum (bin layout of welch_psd).
AcprResult acpr_from_psd(const RVec& psd, double channel_bw, double guard = 0.0);

/// Main channel [-bw/2, bw/2), upper [bw/2+g, 3bw/2+g), lower its mirror.
/// A side whose adjacent power vanishes next to the main power reports +300 dB.
AcprResult acpr(const CVec& z, double channel_bw, double guard = 0.0);

/// Mean over grid angles inside [lo, hi] of (a - b).
double average_improvement_db(const std::vector<double>& angles, const std::vector<double>& a,
                              const std::vector<double>& b, std::pair<double, double> range);

void write_sweep_csv(std::ostream& os, const SweepResult& sweep);
void write_acpr_csv(std::ostream& os, const AcprResult& r);

}  // namespace pwdpd
