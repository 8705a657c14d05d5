#include "tsattr/attribution.hpp"

#include <cmath>

#include "tsattr/errors.hpp"
#include "tsattr/io.hpp"

namespace tsattr {

namespace {

constexpr std::string_view kMethodNames[] = {"GR", "IG", "FO"};

void apply_sign(std::vector<double>& scores, SignMode mode) {
  if (mode == SignMode::Absolute) {
    for (auto& v : scores) v = std::abs(v);
  }
}

void check_length(const Classifier& model, std::span<const double> x) {
  if (static_cast<int>(x.size()) != model.input_length()) {
    throw ShapeError("input has length " + std::to_string(x.size()) + ", model expects " +
                     std::to_string(model.input_length()));
  }
}

}  // namespace

std::string_view to_string(Method method) { return kMethodNames[static_cast<int>(method)]; }

Method parse_method(std::string_view name) {
  for (int i = 0; i < 3; ++i) {
    if (kMethodNames[i] == name) return static_cast<Method>(i);
  }
  throw InvalidInput("unknown attribution method '" + std::string(name) + "'");
}

std::string_view to_string(SignMode mode) { return mode == SignMode::Absolute ? "absolute" : "signed"; }

SignMode parse_sign_mode(std::string_view name) {
  if (name == "absolute") return SignMode::Absolute;
  if (name == "signed") return SignMode::Signed;
  throw InvalidInput("unknown sign mode '" + std::string(name) + "'");
}

AttributionResult saliency(const Classifier& model, std::span<const double> x, const AttributionOptions& options) {
  check_length(model, x);
  AttributionResult out;
  out.method = Method::GR;
  out.explained_class = model.predict(x).predicted_class;
  out.scores = model.input_gradient(x, out.explained_class, options.space);
  apply_sign(out.scores, options.gradient_sign);
  return out;
}

AttributionResult integrated_gradients(const Classifier& model, std::span<const double> x, int steps,
                                       const AttributionOptions& options) {
  if (steps < 1) throw InvalidInput("integrated_gradients: steps must be at least 1");
  check_length(model, x);
  AttributionResult out;
  out.method = Method::IG;
  out.ig_steps = steps;
  out.explained_class = model.predict(x).predicted_class;

  const std::size_t n = x.size();
  std::vector<double> sum(n, 0.0);
  std::vector<double> point(n);
  for (int k = 1; k <= steps; ++k) {
    const double alpha = static_cast<double>(k) / static_cast<double>(steps);
    for (std::size_t i = 0; i < n; ++i) point[i] = alpha * x[i];
    const auto g = model.input_gradient(point, out.explained_class, options.space);
    for (std::size_t i = 0; i < n; ++i) sum[i] += g[i];
  }
  out.scores.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.scores[i] = x[i] * (sum[i] / static_cast<double>(steps));
  apply_sign(out.scores, options.ig_sign);
  return out;
}

AttributionResult occlusion(const Classifier& model, std::span<const double> x, const AttributionOptions& options) {
  check_length(model, x);
  AttributionResult out;
  out.method = Method::FO;
  auto editor = model.editor(x);
  const auto reference = editor->predict();
  out.explained_class = reference.predicted_class;
  const double q = reference.probs[static_cast<std::size_t>(out.explained_class)];
  out.scores.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const int idx = static_cast<int>(i);
    editor->set(idx, 0.0);
    out.scores[i] = q - editor->predict().probs[static_cast<std::size_t>(out.explained_class)];
    editor->set(idx, x[i]);
  }
  apply_sign(out.scores, options.occlusion_sign);
  return out;
}

AttributionResult attribute(const Classifier& model, std::span<const double> x, Method method,
                            const AttributionOptions& options) {
  switch (method) {
    case Method::GR:
      return saliency(model, x, options);
    case Method::IG:
      return integrated_gradients(model, x, options.ig_steps, options);
    case Method::FO:
      return occlusion(model, x, options);
  }
  throw InvalidInput("unknown attribution method");
}

std::string attributions_to_csv(std::span<const AttributionResult> results, int series_length) {
  std::string out = "id,explained_class";
  for (int i = 0; i < series_length; ++i) out += ",r_" + std::to_string(i);
  out += '\n';
  for (const auto& r : results) {
    if (static_cast<int>(r.scores.size()) != series_length) throw InvalidInput("attribution length mismatch");
    out += std::to_string(r.instance_id) + ',' + std::to_string(r.explained_class);
    for (double v : r.scores) {
      out += ',';
      out += io::format_double(v);
    }
    out += '\n';
  }
  return out;
}

std::vector<AttributionResult> attributions_from_csv(std::string_view text, Method method) {
  const auto table = io::parse_csv(text);
  if (table.header.size() < 3 || table.header[0] != "id" || table.header[1] != "explained_class") {
    throw InvalidInput("not an attribution CSV");
  }
  std::vector<AttributionResult> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    AttributionResult r;
    r.method = method;
    r.instance_id = static_cast<int>(io::parse_int(row[0]));
    r.explained_class = static_cast<int>(io::parse_int(row[1]));
    r.scores.reserve(row.size() - 2);
    for (std::size_t i = 2; i < row.size(); ++i) r.scores.push_back(io::parse_double(row[i]));
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace tsattr
