#include "pwdpd/scenario.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"

namespace pwdpd {

using nlohmann::json;

namespace {

// Typed access to one object of the document, with the dotted path of the
// object kept for error messages and unknown keys rejected.
class Fields {
 public:
  Fields(const json& j, std::string path, std::set<std::string> allowed)
      : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
    for (const auto& [key, value] : j_.items())
      if (!allowed.count(key)) throw ConfigError(name(key) + ": unknown field");
  }

  [[nodiscard]] bool has(const std::string& key) const { return j_.contains(key); }
  [[nodiscard]] const json& at(const std::string& key) const { return j_.at(key); }
  [[nodiscard]] std::string name(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  void get(const std::string& key, double& out) const {
    if (!has(key)) return;
    if (!at(key).is_number()) throw ConfigError(name(key) + ": expected a number");
    out = at(key).get<double>();
    if (!std::isfinite(out)) throw ConfigError(name(key) + ": must be finite");
  }
  void get(const std::string& key, int& out) const {
    if (!has(key)) return;
    if (!at(key).is_number_integer()) throw ConfigError(name(key) + ": expected an integer");
    out = at(key).get<int>();
  }
  void get(const std::string& key, std::uint64_t& out) const {
    if (!has(key)) return;
    if (!at(key).is_number_unsigned())
      throw ConfigError(name(key) + ": expected a non-negative integer");
    out = at(key).get<std::uint64_t>();
  }
  void get(const std::string& key, bool& out) const {
    if (!has(key)) return;
    if (!at(key).is_boolean()) throw ConfigError(name(key) + ": expected true or false");
    out = at(key).get<bool>();
  }
  void get(const std::string& key, std::string& out) const {
    if (!has(key)) return;
    if (!at(key).is_string()) throw ConfigError(name(key) + ": expected a string");
    out = at(key).get<std::string>();
  }

 private:
  [[nodiscard]] std::string where() const { return path_.empty() ? "scenario" : path_; }
  const json& j_;
  std::string path_;
};

void check_version(const json& root) {
  if (!root.contains("version")) throw ConfigError("version: missing field");
  const json& v = root["version"];
  int major = -1;
  if (v.is_number_integer()) {
    major = v.get<int>();
  } else if (v.is_string()) {
    const std::string s = v.get<std::string>();
    const auto res = std::from_chars(s.data(), s.data() + s.size(), major);
    if (res.ec != std::errc() || (res.ptr != s.data() + s.size() && *res.ptr != '.'))
      throw ConfigError("version: cannot parse \"" + s + "\"");
  } else {
    throw ConfigError("version: expected an integer or \"major.minor\" string");
  }
  if (major != kScenarioMajor)
    throw ConfigError("version: unsupported major version " + std::to_string(major) +
                      " (this build reads " + std::to_string(kScenarioMajor) + ")");
}

Ratio ratio_field(const json& j, const std::string& name) {
  try {
    if (j.is_string()) return parse_ratio(j.get<std::string>());
    if (j.is_number_integer()) return parse_ratio(std::to_string(j.get<long>()));
    if (j.is_array() && j.size() == 2 && j[0].is_number_integer() && j[1].is_number_integer()) {
      Ratio r{j[0].get<long>(), j[1].get<long>()};
      if (r.num <= 0 || r.den <= 0) throw ConfigError("numerator and denominator must be positive");
      const long g = std::gcd(r.num, r.den);
      return {r.num / g, r.den / g};
    }
    if (j.is_number()) {
      std::ostringstream os;
      os.precision(9);
      os << std::fixed << j.get<double>();
      return parse_ratio(os.str());
    }
  } catch (const ConfigError& e) {
    throw ConfigError(name + ": " + e.what());
  }
  throw ConfigError(name + ": expected \"num/den\", a number or [num, den]");
}

PhaseRule phase_rule_from(const std::string& s, const std::string& name) {
  if (s == "alternating") return PhaseRule::Alternating;
  if (s == "real") return PhaseRule::Real;
  if (s == "random") return PhaseRule::Random;
  throw ConfigError(name + ": expected \"alternating\", \"real\" or \"random\"");
}

}  // namespace

Ratio parse_ratio(const std::string& text) {
  auto parse_long = [&](std::string_view sv) {
    long v = 0;
    const auto res = std::from_chars(sv.data(), sv.data() + sv.size(), v);
    if (res.ec != std::errc() || res.ptr != sv.data() + sv.size())
      throw ConfigError("cannot parse ratio \"" + text + "\"");
    return v;
  };
  Ratio r;
  const auto slash = text.find('/');
  const auto dot = text.find('.');
  if (slash != std::string::npos) {
    r.num = parse_long(std::string_view(text).substr(0, slash));
    r.den = parse_long(std::string_view(text).substr(slash + 1));
  } else if (dot != std::string::npos) {
    std::string digits = text.substr(dot + 1);
    while (!digits.empty() && digits.back() == '0') digits.pop_back();
    if (digits.size() > 9) throw ConfigError("ratio \"" + text + "\" has too many decimals");
    r.den = 1;
    for (std::size_t i = 0; i < digits.size(); ++i) r.den *= 10;
    r.num = parse_long(text.substr(0, dot)) * r.den + (digits.empty() ? 0 : parse_long(digits));
  } else {
    r.num = parse_long(text);
    r.den = 1;
  }
  if (r.num <= 0 || r.den <= 0) throw ConfigError("ratio \"" + text + "\" must be positive");
  const long g = std::gcd(r.num, r.den);
  return {r.num / g, r.den / g};
}

void Scenario::validate() const {
  signal.validate();
  geometry.validate();
  if (!(drive_rms > 0.0)) throw ConfigError("signal.drive_rms must be positive");
  if (!(adjacent_db < 0.0)) throw ConfigError("array.adjacent_db must be negative");
  if (pa_spread < 0.0 || pa_spread >= 1.0) throw ConfigError("array.pa_bank.spread must be in [0, 1)");
  if (!pa_files.empty() && static_cast<int>(pa_files.size()) != geometry.n_pa())
    throw ConfigError("array.pa_files must list K*S files");
  if (!(dpd_tol > 0.0)) throw ConfigError("dpd.tol must be positive");
  if (dpd_max_iter < 0) throw ConfigError("dpd.max_iter must be >= 0");
  if (subarray < 0 || subarray >= geometry.K) throw ConfigError("subarray must lie in [0, K)");
  if (sweep_points < 1) throw ConfigError("sweep.points must be >= 1");
  if (!(sweep_range.first <= sweep_range.second)) throw ConfigError("sweep.range must be [lo, hi] with lo <= hi");
  if (ridge < 0.0) throw ConfigError("optimizer.ridge must be >= 0");
  for (const auto& l : layouts) build_layout(l.scheme, geometry.S, dpd_spec.nonlinear_count(), l.r, l.nu);
  if (!(acpr_bw > 0.0) || acpr_guard < 0.0 || 1.5 * acpr_bw + acpr_guard > 0.5)
    throw ConfigError("acpr: channel_bw and guard leave no room for both adjacent channels");
  if (signal.oversampling * acpr_bw < 1.0 - 1e-12)
    throw ConfigError("acpr.channel_bw is narrower than the occupied signal bandwidth");
}

LayoutChoice Scenario::layout_for(PwScheme s) const {
  for (const auto& l : layouts)
    if (l.scheme == s) return l;
  return s == PwScheme::FF ? LayoutChoice{PwScheme::FF, {1, 1}, 0}
                           : LayoutChoice{PwScheme::LC, {1, 2}, 1};
}

Scenario parse_scenario(const std::string& text, const std::string& source) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed scenario: ") + e.what());
  }
  Scenario sc;
  sc.source = source;
  const Fields top(root, "",
                   {"version", "description", "signal", "array", "dpd", "subarray", "phi0", "sweep",
                    "layouts", "optimizer", "acpr", "seeds", "output_dir"});
  check_version(root);
  top.get("subarray", sc.subarray);
  top.get("phi0", sc.phi0);
  top.get("output_dir", sc.output_dir);

  if (top.has("signal")) {
    const Fields f(top.at("signal"), "signal",
                   {"n_subcarriers", "active_mask", "constellation", "oversampling", "n_symbols",
                    "normalize", "drive_rms", "synthesis"});
    f.get("n_subcarriers", sc.signal.n_subcarriers);
    f.get("oversampling", sc.signal.oversampling);
    f.get("n_symbols", sc.signal.n_symbols);
    f.get("normalize", sc.signal.normalize);
    f.get("drive_rms", sc.drive_rms);
    if (f.has("constellation")) {
      std::string c;
      f.get("constellation", c);
      if (c == "QPSK")
        sc.signal.constellation = Constellation::QPSK;
      else if (c == "QAM16")
        sc.signal.constellation = Constellation::QAM16;
      else
        throw ConfigError("signal.constellation: expected \"QPSK\" or \"QAM16\"");
    }
    if (f.has("synthesis")) {
      std::string m;
      f.get("synthesis", m);
      if (m == "per_symbol")
        sc.signal.synthesis = Synthesis::PerSymbol;
      else if (m == "block")
        sc.signal.synthesis = Synthesis::Block;
      else
        throw ConfigError("signal.synthesis: expected \"per_symbol\" or \"block\"");
    }
    if (f.has("active_mask")) {
      const json& m = f.at("active_mask");
      if (!m.is_array()) throw ConfigError("signal.active_mask: expected an array of booleans");
      sc.signal.active_mask.clear();
      for (const auto& b : m) {
        if (!b.is_boolean()) throw ConfigError("signal.active_mask: expected an array of booleans");
        sc.signal.active_mask.push_back(b.get<bool>());
      }
    }
  }

  if (top.has("array")) {
    const Fields f(top.at("array"), "array",
                   {"K", "S", "spacing", "adjacent_db", "phase_rule", "pa_bank", "pa_files"});
    f.get("K", sc.geometry.K);
    f.get("S", sc.geometry.S);
    f.get("spacing", sc.geometry.spacing);
    f.get("adjacent_db", sc.adjacent_db);
    if (f.has("phase_rule")) {
      std::string s;
      f.get("phase_rule", s);
      sc.phase_rule = phase_rule_from(s, "array.phase_rule");
    }
    if (f.has("pa_bank")) {
      const Fields b(f.at("pa_bank"), "array.pa_bank", {"spread"});
      b.get("spread", sc.pa_spread);
    }
    if (f.has("pa_files")) {
      const json& a = f.at("pa_files");
      if (!a.is_array()) throw ConfigError("array.pa_files: expected an array of paths");
      const std::filesystem::path base =
          source.empty() ? std::filesystem::path{} : std::filesystem::path(source).parent_path();
      for (const auto& p : a) {
        if (!p.is_string()) throw ConfigError("array.pa_files: expected an array of paths");
        std::filesystem::path fp(p.get<std::string>());
        if (fp.is_relative()) fp = base / fp;
        if (!std::filesystem::exists(fp))
          throw ConfigError("array.pa_files: file not found: " + fp.string());
        sc.pa_files.push_back(fp.string());
      }
    }
  }

  if (top.has("dpd")) {
    const Fields f(top.at("dpd"), "dpd", {"terms", "order_P", "tol", "max_iter"});
    f.get("tol", sc.dpd_tol);
    f.get("max_iter", sc.dpd_max_iter);
    int P = sc.dpd_spec.order();
    f.get("order_P", P);
    std::vector<BasisTerm> terms = sc.dpd_spec.terms();
    if (f.has("terms")) {
      terms.clear();
      const json& a = f.at("terms");
      if (!a.is_array()) throw ConfigError("dpd.terms: expected an array of [p, v] pairs");
      for (std::size_t i = 0; i < a.size(); ++i) {
        const json& t = a[i];
        if (!t.is_array() || t.size() != 2 || !t[0].is_number_integer() || !t[1].is_number_integer())
          throw ConfigError("dpd.terms[" + std::to_string(i) + "]: expected [p, v]");
        terms.push_back({t[0].get<int>(), t[1].get<int>()});
      }
    }
    try {
      sc.dpd_spec = BasisSpec(std::move(terms), P);
    } catch (const Error& e) {
      throw ConfigError(std::string("dpd.terms: ") + e.what());
    }
  }

  if (top.has("sweep")) {
    const Fields f(top.at("sweep"), "sweep", {"range", "points"});
    f.get("points", sc.sweep_points);
    if (f.has("range")) {
      const json& r = f.at("range");
      if (!r.is_array() || r.size() != 2 || !r[0].is_number() || !r[1].is_number())
        throw ConfigError("sweep.range: expected [lo, hi] in radians");
      sc.sweep_range = {r[0].get<double>(), r[1].get<double>()};
    }
  }

  if (top.has("layouts")) {
    const json& a = top.at("layouts");
    if (!a.is_array() || a.empty()) throw ConfigError("layouts: expected a non-empty array");
    sc.layouts.clear();
    for (std::size_t i = 0; i < a.size(); ++i) {
      const std::string path = "layouts[" + std::to_string(i) + "]";
      const Fields f(a[i], path, {"scheme", "r", "nu"});
      std::string scheme;
      if (!f.has("scheme")) throw ConfigError(path + ".scheme: missing field");
      f.get("scheme", scheme);
      LayoutChoice l;
      try {
        l.scheme = scheme_from_string(scheme);
      } catch (const ConfigError& e) {
        throw ConfigError(path + ".scheme: " + e.what());
      }
      if (l.scheme == PwScheme::LC) {
        if (f.has("r")) l.r = ratio_field(f.at("r"), path + ".r");
        else l.r = {1, 2};
        l.nu = 1;
        f.get("nu", l.nu);
      } else if (f.has("r") || f.has("nu")) {
        throw ConfigError(path + ": r and nu only apply to LC layouts");
      }
      sc.layouts.push_back(l);
    }
  }

  if (top.has("optimizer")) {
    const Fields f(top.at("optimizer"), "optimizer", {"ridge", "auto_ridge", "constraint"});
    f.get("ridge", sc.ridge);
    f.get("auto_ridge", sc.auto_ridge);
    std::string mode = "averaged";
    f.get("constraint", mode);
    if (mode != "averaged" && mode != "per_sample")
      throw ConfigError("optimizer.constraint: expected \"averaged\" or \"per_sample\"");
    sc.per_sample_constraint = mode == "per_sample";
  }
  if (top.has("acpr")) {
    const Fields f(top.at("acpr"), "acpr", {"channel_bw", "guard"});
    f.get("channel_bw", sc.acpr_bw);
    f.get("guard", sc.acpr_guard);
  }
  if (top.has("seeds")) {
    const Fields f(top.at("seeds"), "seeds", {"signal", "pa_bank", "phase"});
    f.get("signal", sc.seed_signal);
    f.get("pa_bank", sc.seed_pa_bank);
    f.get("phase", sc.seed_phase);
  }
  sc.signal.seed = sc.seed_signal;
  sc.validate();
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_scenario(ss.str(), path);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace pwdpd
