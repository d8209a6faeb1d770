#pragma once

#include <iosfwd>
#include <string>

#include "addgxe/dataset.hpp"
#include "addgxe/interaction.hpp"
#include "addgxe/reri.hpp"
#include "addgxe/simulation.hpp"

namespace addgxe {

/// Version of the machine-readable output layout.
inline constexpr int kSchemaVersion = 1;

enum class OutputFormat { json, csv };

OutputFormat parse_output_format(const std::string& text);

/// Flat JSON object: schema_version, method, statistic, p_value,
/// variance_total, v1, v2, v3, variance_method, mean_u, n, n_cases and, with a
/// bootstrap, bootstrap_variance, bootstrap_ci_lower, bootstrap_ci_upper,
/// bootstrap_p_value, bootstrap_replicates, bootstrap_dropped.
std::string test_result_json(const TestResult& r);
std::string test_result_csv(const TestResult& r);

/// schema_version, method = "prosp-reri", reri, se, statistic, p_value, n,
/// n_cases, coefficients (array: intercept, a1, a2, a1*a2, covariates).
std::string reri_result_json(const ReriResult& r);
std::string reri_result_csv(const ReriResult& r);

std::string power_table_json(const PowerTable& t, std::size_t reps, std::uint64_t seed);
std::string failure_report_json(const FailureReport& r, std::uint64_t seed);
void write_failure_csv(std::ostream& out, const FailureReport& r);

std::string summary_json(const DatasetSummary& s);

/// Human-readable tables for standard output.
void print_test_result(std::ostream& out, const TestResult& r);
void print_reri_result(std::ostream& out, const ReriResult& r);
void print_power_table(std::ostream& out, const PowerTable& t);
void print_failure_report(std::ostream& out, const FailureReport& r);

}  // namespace addgxe
