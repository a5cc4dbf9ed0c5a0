// pwdpd: scenario-driven front end for training, post-weighting optimization,
// radiation sweeps and ACPR.
//
// Exit codes: 0 success, 1 input error, 2 non-convergence, 3 verification
// disagreement. Log verbosity comes from PWDPD_LOG (quiet, info, debug).

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pwdpd/pipeline.hpp"
#include "pwdpd/serialize.hpp"

namespace fs = std::filesystem;
using namespace pwdpd;

namespace {

enum Exit { kOk = 0, kInput = 1, kNoConverge = 2, kVerify = 3 };

int log_level() {
  const char* v = std::getenv("PWDPD_LOG");
  if (!v) return 1;
  const std::string s(v);
  if (s == "quiet") return 0;
  if (s == "debug") return 2;
  return 1;
}

template <typename... Args>
void log(int level, const Args&... args) {
  if (log_level() < level) return;
  std::ostringstream os;
  (os << ... << args);
  std::cerr << os.str() << '\n';
}

// Output files are staged next to their destination and renamed once every
// computation has succeeded, so a failing run leaves nothing half written.
class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}

  void add(const std::string& name, std::string content) {
    files_.push_back({name, std::move(content)});
  }

  void commit() const {
    fs::create_directories(dir_);
    for (const auto& [name, content] : files_) {
      const fs::path dst = dir_ / name;
      const fs::path tmp = dir_ / (name + ".tmp");
      {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw ConfigError("cannot write " + tmp.string());
        out << content;
      }
      fs::rename(tmp, dst);
      log(1, "wrote ", dst.string());
    }
  }

 private:
  fs::path dir_;
  std::vector<std::pair<std::string, std::string>> files_;
};

fs::path out_dir(const Scenario& sc, const std::string& override_dir) {
  return override_dir.empty() ? fs::path(sc.output_dir) : fs::path(override_dir);
}

LayoutChoice parse_layout_arg(const Scenario& sc, const std::string& arg) {
  // "ff", "lc" (first matching layout of the scenario), or "lc:<r>:<nu>".
  if (arg == "ff" || arg == "FF") return sc.layout_for(PwScheme::FF);
  if (arg == "lc" || arg == "LC") return sc.layout_for(PwScheme::LC);
  if (arg.rfind("lc:", 0) == 0 || arg.rfind("LC:", 0) == 0) {
    const auto second = arg.find(':', 3);
    if (second == std::string::npos) throw ConfigError("--layout: expected lc:<r>:<nu>");
    LayoutChoice c;
    c.scheme = PwScheme::LC;
    c.r = parse_ratio(arg.substr(3, second - 3));
    c.nu = std::stoi(arg.substr(second + 1));
    return c;
  }
  throw ConfigError("--layout: expected ff, lc or lc:<r>:<nu>");
}

std::string layout_tag(const PwLayout& L) {
  if (L.scheme == PwScheme::FF) return "ff";
  return "lc_r" + std::to_string(L.r.num) + "-" + std::to_string(L.r.den) + "_nu" +
         std::to_string(L.nu);
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

bool all_converged(const std::vector<TrainingResult>& t) {
  for (const auto& r : t)
    if (!r.converged) return false;
  return true;
}

PwContext context_for(const Setup& st, const std::vector<TrainingResult>& dpd) {
  return make_pw_context(st.model, st.sc.subarray, st.s, dpd);
}

int cmd_train(const std::string& path, const std::string& dir) {
  const Scenario sc = load_scenario(path);
  const Setup st = prepare(sc);
  const auto dpd = train_all(st);
  Outputs out(out_dir(sc, dir));
  out.add("training.json", training_results_json(dpd, st.estimates));
  out.commit();
  for (const auto& t : dpd)
    log(1, "subarray ", t.k, ": iterations ", t.iterations, ", converged ",
        t.converged ? "yes" : "no", ", beam NMSE ",
        format_double(beam_nmse_db(st, context_for(st, dpd).Y_dpd, t.k)), " dB");
  return all_converged(dpd) ? kOk : kNoConverge;
}

int cmd_optimize(const std::string& path, const std::string& layout_arg, bool verify,
                 const std::string& dir) {
  const Scenario sc = load_scenario(path);
  const LayoutChoice choice = parse_layout_arg(sc, layout_arg);
  const Setup st = prepare(sc);
  const auto dpd = train_all(st);
  if (!all_converged(dpd)) {
    log(0, "error: DPD training did not converge");
    return kNoConverge;
  }
  const PwContext ctx = context_for(st, dpd);
  const Optimized o = optimize_layout(st, ctx, choice);

  double rel = 0.0;
  if (verify) {
    const CVec g = oracle_solve(o.problem, sc.per_sample_constraint);
    rel = (g - o.result.gamma_hat).norm() / std::max(o.result.gamma_hat.norm(), 1e-300);
    const double f_or = evaluate_objective(o.problem, g);
    const double f_rel = std::abs(f_or - o.result.objective_at_opt) /
                         std::max(std::abs(o.result.objective_at_opt), 1e-300);
    rel = std::max(rel, f_rel);
    log(1, "verify: relative difference to null-space oracle ", format_double(rel));
  }
  Outputs out(out_dir(sc, dir));
  out.add("opt_" + layout_tag(o.layout) + ".json", opt_result_json(o.result, o.layout, verify, rel));
  out.commit();
  log(1, "objective ", format_double(o.result.objective_at_opt), ", constraint residual ",
      format_double(o.result.constraint_residual));
  if (verify && !(rel <= 1e-6)) {
    log(0, "error: KKT and oracle solutions disagree (relative ", format_double(rel), ")");
    return kVerify;
  }
  return kOk;
}

int cmd_sweep(const std::string& path, const std::string& schemes_arg, const std::string& dir,
              const std::string& file) {
  const Scenario sc = load_scenario(path);
  const auto schemes = split(schemes_arg);
  if (schemes.empty()) throw ConfigError("--schemes: list at least one of dnr,dpd,ff,lc");
  for (const auto& s : schemes)
    if (s != "dnr" && s != "dpd" && s != "ff" && s != "lc")
      throw ConfigError("--schemes: unknown scheme \"" + s + "\"");
  const Setup st = prepare(sc);
  const auto dpd = train_all(st);
  if (!all_converged(dpd)) {
    log(0, "error: DPD training did not converge");
    return kNoConverge;
  }
  const PwContext ctx = context_for(st, dpd);
  const SweepResult sw = run_sweep(st, ctx, schemes);
  std::ostringstream csv;
  write_sweep_csv(csv, sw);
  Outputs out(out_dir(sc, dir));
  out.add(file, csv.str());
  out.commit();
  for (std::size_t i = 0; i < sw.labels.size(); ++i) {
    double mean = 0.0;
    for (double v : sw.power_db[i]) mean += v;
    log(1, sw.labels[i], ": mean radiation ", format_double(mean / sw.angles.size()), " dB");
  }
  return kOk;
}

int cmd_acpr(const std::string& path, const std::string& scheme, const std::string& dir) {
  const Scenario sc = load_scenario(path);
  if (scheme != "dnr" && scheme != "dpd" && scheme != "ff" && scheme != "lc")
    throw ConfigError("--scheme: expected dnr, dpd, ff or lc");
  const Setup st = prepare(sc);
  const auto dpd = train_all(st);
  if (!all_converged(dpd)) {
    log(0, "error: DPD training did not converge");
    return kNoConverge;
  }
  const PwContext ctx = context_for(st, dpd);
  const AcprResult r = scheme_acpr(st, ctx, scheme);
  std::ostringstream csv;
  write_acpr_csv(csv, r);
  Outputs out(out_dir(sc, dir));
  out.add("acpr_" + scheme + ".csv", csv.str());
  out.commit();
  log(1, scheme, ": average ACPR ", format_double(r.average_db), " dB");
  return kOk;
}

void counts_row(std::ostream& os, int S, int Q, Ratio r, int nu, double expect_mult) {
  const PwLayout ff = build_layout(PwScheme::FF, S, Q);
  const PwLayout lc = build_layout(PwScheme::LC, S, Q, r, nu);
  const double closed = closed_form_n_gamma(S, Q, r.value(), nu);
  const double fm = static_cast<double>(ff.n_gamma) / lc.n_gamma;
  const double fa = static_cast<double>(ff.n_adders) / lc.n_adders;
  const double fr = static_cast<double>(ff.n_rf) / lc.n_rf;
  std::string seq;
  for (std::size_t i = 0; i < lc.counts.size(); ++i) seq += (i ? " " : "") + std::to_string(lc.counts[i]);
  os << S << ',' << Q << ',' << r.num << '/' << r.den << ',' << nu << ",\"" << seq << "\","
     << ff.n_gamma << ',' << ff.n_adders << ',' << ff.n_rf << ',' << lc.n_gamma << ','
     << lc.n_adders << ',' << lc.n_rf << ',' << format_double(fm) << ',' << format_double(fa)
     << ',' << format_double(fr) << ',' << (std::abs(closed - lc.n_gamma) < 1e-9 ? "yes" : "no")
     << '\n';
  if (expect_mult > 0.0 && std::abs(expect_mult - fm) > 1e-9)
    std::cerr << "note: expected multiplier reduction " << format_double(expect_mult)
              << " is inconsistent with the enumerated counts (" << ff.n_gamma << "/" << lc.n_gamma
              << " = " << format_double(fm) << ")\n";
}

int cmd_counts(int S, int Q, const std::string& r_arg, int nu, bool grid, double expect_mult) {
  const char* head =
      "S,Q,r,nu,counts,n_gamma_ff,n_adders_ff,n_rf_ff,n_gamma_lc,n_adders_lc,n_rf_lc,"
      "mult_factor,adder_factor,rf_factor,closed_form_match\n";
  std::ostringstream os;
  os << head;
  if (grid) {
    for (int s : {2, 4, 8, 16})
      for (int q = 1; q <= 4; ++q)
        for (Ratio r : {Ratio{1, 2}, Ratio{1, 4}})
          for (int n = 0; n <= 2; ++n) counts_row(os, s, q, r, n, 0.0);
  } else {
    counts_row(os, S, Q, parse_ratio(r_arg), nu, expect_mult);
  }
  std::cout << os.str();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Beam-oriented DPD with post-weighting under crosstalk"};
  app.require_subcommand(1);
  std::string scenario;
  std::string dir;

  auto* train = app.add_subcommand("train", "estimate crosstalk and train the BO-DPD of every subarray");
  train->add_option("scenario", scenario, "scenario file")->required();
  train->add_option("--out", dir, "output directory (overrides the scenario)");

  std::string layout = "ff";
  bool verify = false;
  auto* opt = app.add_subcommand("optimize", "solve for post-weighting coefficients");
  opt->add_option("scenario", scenario, "scenario file")->required();
  opt->add_option("--layout", layout, "ff, lc or lc:<r>:<nu>");
  opt->add_flag("--verify", verify, "cross-check against the null-space oracle");
  opt->add_option("--out", dir, "output directory (overrides the scenario)");

  std::string schemes = "dnr,dpd,ff,lc";
  std::string sweep_file = "sweep.csv";
  auto* sweep = app.add_subcommand("sweep", "nonlinear radiation versus angle");
  sweep->add_option("scenario", scenario, "scenario file")->required();
  sweep->add_option("--schemes", schemes, "comma-separated subset of dnr,dpd,ff,lc");
  sweep->add_option("--out", dir, "output directory (overrides the scenario)");
  sweep->add_option("--file", sweep_file, "CSV file name inside the output directory");

  int S = 4;
  int Q = 3;
  std::string r = "1/2";
  int nu = 1;
  bool grid = false;
  double expect_mult = 0.0;
  auto* counts = app.add_subcommand("counts", "coefficient, adder and RF-chain counts");
  counts->add_option("--S", S, "PAs per subarray")->check(CLI::PositiveNumber);
  counts->add_option("--Q", Q, "nonlinear DPD outputs")->check(CLI::PositiveNumber);
  counts->add_option("--r", r, "LC common ratio, e.g. 1/2");
  counts->add_option("--nu", nu, "LC offset exponent")->check(CLI::NonNegativeNumber);
  counts->add_flag("--grid", grid, "tabulate S in {2,4,8,16}, Q in 1..4, r in {1/2,1/4}, nu in 0..2");
  counts->add_option("--expect-mult-factor", expect_mult,
                     "report when the multiplier reduction differs from this value");

  std::string scheme = "dpd";
  auto* acpr = app.add_subcommand("acpr", "average adjacent channel power ratio of one scheme");
  acpr->add_option("scenario", scenario, "scenario file")->required();
  acpr->add_option("--scheme", scheme, "dnr, dpd, ff or lc");
  acpr->add_option("--out", dir, "output directory (overrides the scenario)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInput;
  }

  try {
    if (*train) return cmd_train(scenario, dir);
    if (*opt) return cmd_optimize(scenario, layout, verify, dir);
    if (*sweep) return cmd_sweep(scenario, schemes, dir, sweep_file);
    if (*counts) return cmd_counts(S, Q, r, nu, grid, expect_mult);
    if (*acpr) return cmd_acpr(scenario, scheme, dir);
  } catch (const TrainingError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNoConverge;
  } catch (const SimulationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNoConverge;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInput;
  }
  return kInput;
}
