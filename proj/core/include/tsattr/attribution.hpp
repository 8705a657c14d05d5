#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tsattr/network.hpp"

namespace tsattr {

enum class Method { GR, IG, FO };
enum class SignMode { Absolute, Signed };

std::string_view to_string(Method method);
Method parse_method(std::string_view name);
std::string_view to_string(SignMode mode);
SignMode parse_sign_mode(std::string_view name);

inline constexpr int kDefaultIgSteps = 50;

struct AttributionOptions {
  int ig_steps = kDefaultIgSteps;
  // Saliency takes |gradient|; IG and occlusion keep their sign.
  SignMode gradient_sign = SignMode::Absolute;
  SignMode ig_sign = SignMode::Signed;
  SignMode occlusion_sign = SignMode::Signed;
  GradientSpace space = GradientSpace::Probability;
};

struct AttributionResult {
  std::vector<double> scores;
  Method method = Method::GR;
  int explained_class = 0;  // predicted class on the unperturbed input
  int ig_steps = 0;         // IG only
  int instance_id = -1;
  std::string model_id;
};

// r_i = |d q_c / d x_i| for the predicted class c.
AttributionResult saliency(const Classifier& model, std::span<const double> x, const AttributionOptions& options = {});

// Right-endpoint Riemann sum of the gradient along the straight path from the
// all-zero baseline to x, scaled by (x - baseline).
AttributionResult integrated_gradients(const Classifier& model, std::span<const double> x, int steps,
                                       const AttributionOptions& options = {});

// r_i = q_c(x) - q_c(x with x_i = 0).
AttributionResult occlusion(const Classifier& model, std::span<const double> x, const AttributionOptions& options = {});

AttributionResult attribute(const Classifier& model, std::span<const double> x, Method method,
                            const AttributionOptions& options = {});

// CSV with header id,explained_class,r_0,...,r_{N-1}.
std::string attributions_to_csv(std::span<const AttributionResult> results, int series_length);
std::vector<AttributionResult> attributions_from_csv(std::string_view text, Method method);

}  // namespace tsattr
