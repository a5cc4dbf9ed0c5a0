#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pwdpd/dpdtrain.hpp"
#include "pwdpd/metrics.hpp"
#include "pwdpd/postweight.hpp"
#include "pwdpd/pwopt.hpp"
#include "pwdpd/scenario.hpp"

namespace pwdpd {

/// Array, messages and crosstalk estimates built from a scenario.
struct Setup {
  Scenario sc;
  ArrayModel model;
  CMat s;  // K x N messages at drive_rms
  CMat lambdas;
  std::vector<LambdaEstimate> estimates;
};

/// Messages of every subarray: one multicarrier block per subarray, seeded
/// with seeds.signal + k and scaled to drive_rms.
CMat make_messages(const Scenario& sc);
ArrayModel make_array(const Scenario& sc);
Setup prepare(const Scenario& sc);

std::vector<TrainingResult> train_all(const Setup& st);

struct Optimized {
  PwLayout layout;
  QuadraticProblem problem;
  OptResult result;
};

/// Problem assembled over the sweep grid for subarray sc.subarray and solved.
Optimized optimize_layout(const Setup& st, const PwContext& ctx, const LayoutChoice& choice);

/// Labels "dnr", "dpd", "ff", "lc". Trains and optimizes as needed.
SweepResult run_sweep(const Setup& st, const PwContext& ctx, const std::vector<std::string>& schemes);

/// ACPR of one scheme from the beam-output spectrum accumulated over the
/// sweep grid.
AcprResult scheme_acpr(const Setup& st, const PwContext& ctx, const std::string& scheme);

/// Beam-direction NMSE of subarray k (output / G0 against the message).
double beam_nmse_db(const Setup& st, const CMat& Y, int k);

}  // namespace pwdpd
