#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "pwdpd/dpdtrain.hpp"
#include "pwdpd/polymodel.hpp"
#include "pwdpd/postweight.hpp"
#include "pwdpd/pwopt.hpp"

namespace pwdpd {

/// Shortest text that parses back to the same double. Locale independent.
std::string format_double(double v);

// JSON documents. Complex numbers are written as [re, im].

/// {"order_P": P, "terms": [[p, v], ...], "coeffs": [[re, im], ...]}
std::string pa_model_json(const PaModel& pa);
PaModel parse_pa_model(const std::string& text);
PaModel read_pa_model_file(const std::string& path);

std::string training_results_json(const std::vector<TrainingResult>& results,
                                  const std::vector<LambdaEstimate>& estimates);
std::string layout_json(const PwLayout& layout);
std::string opt_result_json(const OptResult& r, const PwLayout& layout, bool verified,
                            double oracle_rel_diff);

}  // namespace pwdpd
