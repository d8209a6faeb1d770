#pragma once

#include <cstddef>
#include <string>

namespace addgxe {

enum class VarianceMethod { closed_form_binary, sandwich, bootstrap };

std::string to_string(VarianceMethod m);

/// Var(sum u_i / n) split into the core term (v1), the exposure-model term (v2)
/// and the odds-ratio term (v3, exactly 0 under independence).
struct VarianceDecomposition {
  double v1 = 0.0;
  double v2 = 0.0;
  double v3 = 0.0;
  double total = 0.0;
  VarianceMethod method = VarianceMethod::sandwich;
};

/// Percentile interval and p-value from a nonparametric bootstrap.
struct BootstrapSummary {
  double variance = 0.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  double p_value = 1.0;
  std::size_t replicates = 0;  // successful replicates
  std::size_t dropped = 0;
};

}  // namespace addgxe
