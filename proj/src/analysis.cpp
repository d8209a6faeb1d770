#include "addgxe/analysis.hpp"

#include "addgxe/errors.hpp"

namespace addgxe {

VarianceChoice parse_variance_choice(const std::string& text) {
  if (text == "auto") return VarianceChoice::automatic;
  if (text == "closed-form") return VarianceChoice::closed_form;
  if (text == "sandwich") return VarianceChoice::sandwich;
  throw ConfigError("unknown variance method '" + text + "' (expected auto, closed-form or sandwich)");
}

GFunction default_contrast(const Dataset& ds) {
  if (ds.a1_kind().tag == ExposureTag::categorical) return PolytomousCenteredProduct{};
  return CenteredProduct{};
}

bool closed_form_applicable(const Dataset& ds, const NuisanceModels& nm) {
  if (ds.a1_kind().tag != ExposureTag::binary || ds.a2_kind().tag != ExposureTag::binary) return false;
  if (ds.has_weights() || !nm.a1_model.covariate_columns.empty()) return false;
  return nm.a2_family == A2Family::logit;
}

double mean_contribution(const Dataset& ds, const ModelPlan& plan, const GFunction& g) {
  return mean_w(ds, fit_nuisance(ds, plan), g);
}

Analysis analyze(const Dataset& ds, const TestOptions& opt) {
  ds.require_cases_and_controls();
  const GFunction g = opt.g.value_or(default_contrast(ds));
  Analysis a;
  a.nuisance = fit_nuisance(ds, opt.plan);
  a.u = compute_u(ds, a.nuisance, g);

  bool closed = false;
  switch (opt.variance) {
    case VarianceChoice::closed_form:
      if (!std::holds_alternative<CenteredProduct>(g) || !closed_form_applicable(ds, a.nuisance))
        throw UnsupportedError("closed-form variance needs binary exposures, no covariates and no weights");
      closed = true;
      break;
    case VarianceChoice::automatic:
      closed = opt.plan.independence && std::holds_alternative<CenteredProduct>(g) &&
               closed_form_applicable(ds, a.nuisance);
      break;
    case VarianceChoice::sandwich: break;
  }
  VarianceDecomposition v;
  if (closed) {
    v = closed_form_binary_variance(ds, opt.plan.independence);
  } else if (opt.plan.independence) {
    v = sandwich_variance(a.u, a.nuisance, w_jacobian(ds, a.nuisance, g));
  } else {
    ModelPlan sub = opt.plan;
    sub.independence = true;
    const NuisanceModels submodel = fit_nuisance(ds, sub);
    v = sandwich_variance(a.u, a.nuisance, w_jacobian(ds, a.nuisance, g), &submodel.influence);
  }
  a.result = standardized_test(a.u, v, ds.n_cases());
  if (opt.bootstrap) {
    const ModelPlan plan = opt.plan;
    a.result.bootstrap = bootstrap(ds, [plan, g](const Dataset& r) { return mean_contribution(r, plan, g); },
                                   *opt.bootstrap);
  }
  return a;
}

}  // namespace addgxe
