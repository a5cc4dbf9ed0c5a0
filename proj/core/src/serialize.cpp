#include "pwdpd/serialize.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "pwdpd/signalgen.hpp"

namespace pwdpd {

using nlohmann::json;

namespace {

constexpr int kDocVersion = 1;

json cjson(cplx z) { return json::array({z.real(), z.imag()}); }

json cvec_json(const CVec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(cjson(v[i]));
  return a;
}

cplx parse_cplx(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ConfigError(where + ": expected a [re, im] pair");
  return {j[0].get<double>(), j[1].get<double>()};
}

json header(const char* kind) {
  json j;
  j["version"] = kDocVersion;
  j["kind"] = kind;
  j["rng"] = std::string(kRngAlgorithm);
  return j;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, res.ptr};
}

std::string pa_model_json(const PaModel& pa) {
  json j = header("pa_model");
  j["order_P"] = pa.spec.order();
  json terms = json::array();
  for (const auto& t : pa.spec.terms()) terms.push_back({t.p, t.v});
  j["terms"] = terms;
  j["coeffs"] = cvec_json(pa.coeffs);
  return j.dump(2) + "\n";
}

PaModel parse_pa_model(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("PA model: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("PA model: expected a JSON object");
  for (const char* key : {"order_P", "terms", "coeffs"})
    if (!j.contains(key)) throw ConfigError(std::string("PA model: missing field \"") + key + "\"");
  if (!j["order_P"].is_number_integer()) throw ConfigError("PA model: order_P must be an integer");
  if (!j["terms"].is_array() || !j["coeffs"].is_array())
    throw ConfigError("PA model: terms and coeffs must be arrays");
  std::vector<BasisTerm> terms;
  for (std::size_t i = 0; i < j["terms"].size(); ++i) {
    const json& t = j["terms"][i];
    if (!t.is_array() || t.size() != 2 || !t[0].is_number_integer() || !t[1].is_number_integer())
      throw ConfigError("PA model: terms[" + std::to_string(i) + "] must be [p, v]");
    terms.push_back({t[0].get<int>(), t[1].get<int>()});
  }
  CoeffVector c(static_cast<Eigen::Index>(j["coeffs"].size()));
  for (std::size_t i = 0; i < j["coeffs"].size(); ++i)
    c[static_cast<Eigen::Index>(i)] =
        parse_cplx(j["coeffs"][i], "PA model: coeffs[" + std::to_string(i) + "]");
  try {
    return PaModel(BasisSpec(std::move(terms), j["order_P"].get<int>()), std::move(c));
  } catch (const Error& e) {
    throw ConfigError(std::string("PA model: ") + e.what());
  }
}

PaModel read_pa_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open PA model file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_pa_model(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string training_results_json(const std::vector<TrainingResult>& results,
                                  const std::vector<LambdaEstimate>& estimates) {
  json j = header("training_result");
  json subs = json::array();
  for (std::size_t i = 0; i < results.size(); ++i) {
    const TrainingResult& t = results[i];
    json s;
    s["subarray"] = t.k;
    json terms = json::array();
    for (const auto& b : t.spec.terms()) terms.push_back({b.p, b.v});
    s["terms"] = terms;
    s["order_P"] = t.spec.order();
    s["phi"] = cvec_json(t.phi);
    s["lambda"] = cvec_json(t.lambda);
    s["gain"] = cjson(t.gain);
    s["iterations"] = t.iterations;
    s["converged"] = t.converged;
    s["trace"] = t.trace;
    if (i < estimates.size()) {
      s["lambda_residual"] = estimates[i].residual;
      s["lambda_condition"] = estimates[i].condition;
    }
    s["ops"] = {{"ls_mults", t.ops.ls_mults},
                {"xtalk_mults", t.ops.xtalk_mults},
                {"samples", t.ops.samples}};
    subs.push_back(s);
  }
  j["subarrays"] = subs;
  return j.dump(2) + "\n";
}

namespace {

json layout_object(const PwLayout& L) {
  json j;
  j["scheme"] = to_string(L.scheme);
  j["S"] = L.S;
  j["Q"] = L.Q;
  j["r"] = std::to_string(L.r.num) + "/" + std::to_string(L.r.den);
  j["nu"] = L.nu;
  j["counts"] = L.counts;
  j["assignment"] = L.assignment;
  j["n_gamma"] = L.n_gamma;
  j["n_adders"] = L.n_adders;
  j["n_rf"] = L.n_rf;
  j["m_split"] = L.m_split;
  return j;
}

}  // namespace

std::string layout_json(const PwLayout& layout) {
  json j = header("layout");
  j["layout"] = layout_object(layout);
  return j.dump(2) + "\n";
}

std::string opt_result_json(const OptResult& r, const PwLayout& layout, bool verified,
                            double oracle_rel_diff) {
  json j = header("opt_result");
  j["layout"] = layout_object(layout);
  j["gamma_hat"] = cvec_json(r.gamma_hat);
  j["eta_hat"] = cjson(r.eta_hat);
  j["objective_at_opt"] = r.objective_at_opt;
  j["constraint_residual"] = r.constraint_residual;
  j["solver"] = {{"method", r.stacked ? "kkt_stacked" : "kkt"},
                 {"ridge_used", r.ridge_used},
                 {"condition", r.condition},
                 {"stationarity_residual", r.stationarity_residual}};
  if (verified) j["verification"] = {{"oracle", "null_space"}, {"relative_difference", oracle_rel_diff}};
  return j.dump(2) + "\n";
}

}  // namespace pwdpd
