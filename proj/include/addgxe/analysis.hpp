#pragma once

#include <optional>

#include "addgxe/dataset.hpp"
#include "addgxe/interaction.hpp"
#include "addgxe/nuisance.hpp"
#include "addgxe/variance.hpp"

namespace addgxe {

enum class VarianceChoice { automatic, closed_form, sandwich };

VarianceChoice parse_variance_choice(const std::string& text);

/// Automatic routing takes the closed form when it applies and independence
/// is assumed; with omega estimated it takes the sandwich.
struct TestOptions {
  ModelPlan plan;
  /// Default: polytomous centred product for categorical a1, centred product otherwise.
  std::optional<GFunction> g;
  VarianceChoice variance = VarianceChoice::automatic;
  std::optional<BootstrapOptions> bootstrap;
};

GFunction default_contrast(const Dataset& ds);

/// Nuisance fits, contributions and variance for one dataset.
struct Analysis {
  NuisanceModels nuisance;
  UVector u;
  TestResult result;
};

/// Binary exposures, no covariates, no weights, logit a2 model.
bool closed_form_applicable(const Dataset& ds, const NuisanceModels& nm);

Analysis analyze(const Dataset& ds, const TestOptions& opt);

inline TestResult run_test(const Dataset& ds, const TestOptions& opt) { return analyze(ds, opt).result; }

/// Mean contribution after refitting the nuisance models; the bootstrap pipeline.
double mean_contribution(const Dataset& ds, const ModelPlan& plan, const GFunction& g);

}  // namespace addgxe
