#include "pwdpd/metrics.hpp"

#include <cmath>
#include <numbers>
#include <ostream>

#include <unsupported/Eigen/FFT>

#include "pwdpd/serialize.hpp"

namespace pwdpd {

void SweepResult::add(std::string label, std::vector<double> curve) {
  if (curve.size() != angles.size())
    throw DimensionError("sweep curve \"" + label + "\" does not match the angle grid");
  labels.push_back(std::move(label));
  power_db.push_back(std::move(curve));
}

const std::vector<double>& SweepResult::curve(const std::string& label) const {
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == label) return power_db[i];
  throw ConfigError("sweep has no curve \"" + label + "\"");
}

double radiation_power_db(const CVec& residual, double ref_power) {
  if (residual.size() == 0) throw DimensionError("empty residual");
  if (!(ref_power > 0.0)) throw DimensionError("reference power must be positive");
  const double ratio = residual.squaredNorm() / static_cast<double>(residual.size()) / ref_power;
  if (!(ratio > 1e-30)) return kFloorDb;
  return 10.0 * std::log10(ratio);
}

std::vector<double> radiation_curve(const ArrayModel& model, const CMat& Y, int k, cplx phi0,
                                    const CVec& s_k, const std::vector<double>& angles) {
  const double ref = s_k.squaredNorm() / static_cast<double>(s_k.size());
  std::vector<double> out;
  out.reserve(angles.size());
  for (double a : angles) {
    const CVec res = beam_output(model.geometry(), Y, k, a) - desired_linear(model, k, a, phi0, s_k);
    out.push_back(radiation_power_db(res, ref));
  }
  return out;
}

CMat dnr_outputs(const PwContext& ctx) {
  return simulate_subarrays(*ctx.model, ctx.s, ctx.mode).Y;
}

CMat pw_outputs(const PwContext& ctx, const PwLayout& layout, const CVec& gamma) {
  return simulate_pa_drives(*ctx.model, pw_drives(ctx, layout, gamma), ctx.mode).Y;
}

std::vector<double> sweep_dnr(const PwContext& ctx, const std::vector<double>& angles) {
  return radiation_curve(*ctx.model, dnr_outputs(ctx), ctx.k, 1.0, ctx.s.row(ctx.k).transpose(),
                         angles);
}

std::vector<double> sweep_dpd(const PwContext& ctx, const std::vector<double>& angles) {
  return radiation_curve(*ctx.model, ctx.Y_dpd, ctx.k, ctx.dpd[static_cast<std::size_t>(ctx.k)].phi[0],
                         ctx.s.row(ctx.k).transpose(), angles);
}

std::vector<double> radiation_sweep(const PwContext& ctx, const PwLayout& layout,
                                    const CVec& gamma, const std::vector<double>& angles) {
  return radiation_curve(*ctx.model, pw_outputs(ctx, layout, gamma), ctx.k,
                         ctx.dpd[static_cast<std::size_t>(ctx.k)].phi[0],
                         ctx.s.row(ctx.k).transpose(), angles);
}

std::vector<double> angle_grid(double lo, double hi, int points) {
  if (points < 1) throw ConfigError("sweep.points must be >= 1");
  if (!(lo <= hi)) throw ConfigError("sweep.range must satisfy lo <= hi");
  std::vector<double> a(static_cast<std::size_t>(points));
  if (points == 1) {
    a[0] = lo;
    return a;
  }
  const double step = (hi - lo) / static_cast<double>(points - 1);
  for (int i = 0; i < points; ++i) a[static_cast<std::size_t>(i)] = lo + step * i;
  a.back() = hi;
  return a;
}

RVec welch_psd(const CVec& z) {
  constexpr int L = kWelchSegment;
  constexpr int hop = L / 2;
  if (z.size() < L)
    throw DimensionError("ACPR needs at least " + std::to_string(L) + " samples");
  RVec win(L);
  for (int n = 0; n < L; ++n) win[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / L);

  Eigen::FFT<double> fft;
  RVec psd = RVec::Zero(L);
  CVec seg(L);
  CVec spec(L);
  int count = 0;
  for (Eigen::Index start = 0; start + L <= z.size(); start += hop) {
    seg = z.segment(start, L).cwiseProduct(win.cast<cplx>());
    fft.fwd(spec, seg);
    psd += spec.cwiseAbs2();
    ++count;
  }
  return psd / (static_cast<double>(count) * win.squaredNorm());
}

AcprResult acpr_from_psd(const RVec& psd, double channel_bw, double guard) {
  if (!(channel_bw > 0.0) || guard < 0.0)
    throw ConfigError("acpr: channel_bw must be positive and guard non-negative");
  if (1.5 * channel_bw + guard > 0.5)
    throw ConfigError("acpr: insufficient bandwidth headroom (3*bw/2 + guard must be <= 0.5)");
  const Eigen::Index L = psd.size();
  double main = 0.0;
  double upper = 0.0;
  double lower = 0.0;
  const double h = 0.5 * channel_bw;
  for (Eigen::Index j = 0; j < L; ++j) {
    const double f = static_cast<double>(j < L / 2 ? j : j - L) / static_cast<double>(L);
    if (f >= -h && f < h)
      main += psd[j];
    else if (f >= h + guard && f < 3 * h + guard)
      upper += psd[j];
    else if (f >= -3 * h - guard && f < -h - guard)
      lower += psd[j];
  }
  auto side = [&](double adj) {
    if (!(main > 0.0)) return kFloorDb;
    if (adj <= 1e-20 * main) return -kFloorDb;
    return 10.0 * std::log10(main / adj);
  };
  AcprResult r;
  r.channel_bw = channel_bw;
  r.guard = guard;
  r.lower_db = side(lower);
  r.upper_db = side(upper);
  r.average_db = 0.5 * (r.lower_db + r.upper_db);
  return r;
}

AcprResult acpr(const CVec& z, double channel_bw, double guard) {
  // Validate the band plan before spending time on the spectrum.
  acpr_from_psd(RVec::Ones(kWelchSegment), channel_bw, guard);
  return acpr_from_psd(welch_psd(z), channel_bw, guard);
}

double average_improvement_db(const std::vector<double>& angles, const std::vector<double>& a,
                              const std::vector<double>& b, std::pair<double, double> range) {
  if (a.size() != angles.size() || b.size() != angles.size())
    throw DimensionError("average_improvement_db: curves do not match the angle grid");
  if (angles.empty()) throw DimensionError("average_improvement_db: empty grid");
  const double eps = 1e-12;
  const auto [lo, hi] = range;
  if (lo > hi || lo < angles.front() - eps || hi > angles.back() + eps)
    throw ConfigError("average_improvement_db: range lies outside the angle grid");
  double sum = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < angles.size(); ++i) {
    if (angles[i] < lo - eps || angles[i] > hi + eps) continue;
    sum += a[i] - b[i];
    ++n;
  }
  if (n == 0) throw ConfigError("average_improvement_db: no grid angle inside the range");
  return sum / n;
}

void write_sweep_csv(std::ostream& os, const SweepResult& sweep) {
  os << "angle_rad";
  for (const auto& l : sweep.labels) os << ',' << l << "_db";
  os << '\n';
  for (std::size_t i = 0; i < sweep.angles.size(); ++i) {
    os << format_double(sweep.angles[i]);
    for (const auto& c : sweep.power_db) os << ',' << format_double(c[i]);
    os << '\n';
  }
}

void write_acpr_csv(std::ostream& os, const AcprResult& r) {
  os << "lower_db,upper_db,average_db\n"
     << format_double(r.lower_db) << ',' << format_double(r.upper_db) << ','
     << format_double(r.average_db) << '\n';
}

}  // namespace pwdpd
