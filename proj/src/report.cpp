#include "addgxe/report.hpp"

#include <iomanip>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "addgxe/errors.hpp"

namespace addgxe {

namespace {

using nlohmann::ordered_json;

ordered_json test_json(const TestResult& r) {
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["method"] = r.method;
  j["statistic"] = r.statistic;
  j["p_value"] = r.p_value;
  j["variance_total"] = r.variance.total;
  j["v1"] = r.variance.v1;
  j["v2"] = r.variance.v2;
  j["v3"] = r.variance.v3;
  j["variance_method"] = to_string(r.variance.method);
  j["mean_u"] = r.mean_u;
  j["n"] = r.n;
  j["n_cases"] = r.n_cases;
  if (r.bootstrap) {
    j["bootstrap_variance"] = r.bootstrap->variance;
    j["bootstrap_ci_lower"] = r.bootstrap->ci_lower;
    j["bootstrap_ci_upper"] = r.bootstrap->ci_upper;
    j["bootstrap_p_value"] = r.bootstrap->p_value;
    j["bootstrap_replicates"] = r.bootstrap->replicates;
    j["bootstrap_dropped"] = r.bootstrap->dropped;
  }
  return j;
}

ordered_json cell_json(const PowerCell& c) {
  ordered_json j;
  j["cell"] = c.cell;
  j["p_g"] = c.scenario.p_g;
  j["p_e"] = c.scenario.p_e;
  j["alpha0"] = c.scenario.alpha0;
  j["alpha1"] = c.scenario.alpha1;
  j["alpha2"] = c.scenario.alpha2;
  j["alpha3"] = c.scenario.resolved_alpha3();
  j["reri"] = c.scenario.reri();
  j["n_cases"] = c.scenario.n_cases;
  j["n_controls"] = c.scenario.n_controls;
  j["test"] = to_string(c.test);
  j["reps"] = c.reps;
  j["failures"] = c.failures;
  j["rejections"] = c.rejections;
  j["rate"] = c.rate;
  j["se"] = c.se;
  j["flagged"] = c.flagged;
  return j;
}

/// Flat object -> header line plus one value line.
std::string flat_csv(const ordered_json& j) {
  std::ostringstream head, row;
  bool first = true;
  for (const auto& [key, value] : j.items()) {
    if (value.is_structured()) continue;
    if (!first) {
      head << ',';
      row << ',';
    }
    first = false;
    head << key;
    if (value.is_number_float()) row << format_double(value.get<double>());
    else if (value.is_string()) row << value.get<std::string>();
    else row << value.dump();
  }
  return head.str() + "\n" + row.str() + "\n";
}

}  // namespace

OutputFormat parse_output_format(const std::string& text) {
  if (text == "json") return OutputFormat::json;
  if (text == "csv") return OutputFormat::csv;
  throw ConfigError("unknown output format '" + text + "' (expected json or csv)");
}

std::string test_result_json(const TestResult& r) { return test_json(r).dump(2) + "\n"; }

std::string test_result_csv(const TestResult& r) { return flat_csv(test_json(r)); }

std::string reri_result_json(const ReriResult& r) {
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["method"] = "prosp-reri";
  j["reri"] = r.reri;
  j["se"] = r.se;
  j["statistic"] = r.statistic;
  j["p_value"] = r.p_value;
  j["n"] = r.n;
  j["n_cases"] = r.n_cases;
  j["coefficients"] = std::vector<double>(r.coefficients.data(), r.coefficients.data() + r.coefficients.size());
  return j.dump(2) + "\n";
}

std::string reri_result_csv(const ReriResult& r) {
  ordered_json j = ordered_json::parse(reri_result_json(r));
  for (Eigen::Index k = 0; k < r.coefficients.size(); ++k) j["coef_" + std::to_string(k)] = r.coefficients[k];
  return flat_csv(j);
}

std::string power_table_json(const PowerTable& t, std::size_t reps, std::uint64_t seed) {
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["reps"] = reps;
  j["seed"] = seed;
  j["level"] = 0.05;
  ordered_json rows = ordered_json::array();
  for (const auto& c : t.rows) rows.push_back(cell_json(c));
  j["cells"] = rows;
  return j.dump(2) + "\n";
}

std::string failure_report_json(const FailureReport& r, std::uint64_t seed) {
  const auto& s = r.scenario;
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["reps"] = r.reps;
  j["seed"] = seed;
  j["scenario"] = {{"gamma0", s.gamma0}, {"gamma_g", s.gamma_g}, {"gamma_e", s.gamma_e},
                   {"gamma_x", s.gamma_x}, {"p_g", s.p_g},         {"p_x", s.p_x},
                   {"e_bound", s.e_bound}, {"n_cases", s.n_cases}, {"n_controls", s.n_controls},
                   {"dichotomize", s.dichotomize}};
  for (const PowerCell* c : {&r.reri, &r.t3}) {
    j[to_string(c->test)] = {{"size", c->rate},         {"se", c->se},       {"rejections", c->rejections},
                             {"failures", c->failures}, {"reps", c->reps},   {"flagged", c->flagged}};
  }
  return j.dump(2) + "\n";
}

void write_failure_csv(std::ostream& out, const FailureReport& r) {
  out << "test,reps,failures,rejections,size,se,flagged\n";
  for (const PowerCell* c : {&r.reri, &r.t3})
    out << to_string(c->test) << ',' << c->reps << ',' << c->failures << ',' << c->rejections << ','
        << format_double(c->rate) << ',' << format_double(c->se) << ',' << (c->flagged ? 1 : 0) << '\n';
}

std::string summary_json(const DatasetSummary& s) {
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["n"] = s.n;
  j["cases"] = s.cases;
  j["controls"] = s.controls;
  j["usable"] = s.usable;
  j["weighted"] = s.weighted;
  j["problems"] = s.problems;
  for (const ExposureSummary* e : {&s.a1, &s.a2}) {
    ordered_json x;
    x["name"] = e->name;
    x["kind"] = e->kind.to_string();
    x["control_mean"] = e->control_mean;
    x["control_sd"] = e->control_sd;
    x["case_mean"] = e->case_mean;
    x["case_sd"] = e->case_sd;
    if (e->kind.finite_levels() > 0) {
      ordered_json lv = ordered_json::object();
      for (const auto& [level, count] : e->control_levels) lv[std::to_string(level)]["controls"] = count;
      for (const auto& [level, count] : e->case_levels) lv[std::to_string(level)]["cases"] = count;
      x["levels"] = lv;
    }
    j[e == &s.a1 ? "a1" : "a2"] = x;
  }
  return j.dump(2) + "\n";
}

void print_test_result(std::ostream& out, const TestResult& r) {
  std::ostringstream s;
  s << std::setprecision(6);
  s << "method           " << r.method << '\n'
    << "n / cases        " << r.n << " / " << r.n_cases << '\n'
    << "mean u           " << r.mean_u << '\n'
    << "variance         " << r.variance.total << "  (" << to_string(r.variance.method) << ": v1 " << r.variance.v1
    << ", v2 " << r.variance.v2 << ", v3 " << r.variance.v3 << ")\n"
    << "statistic        " << r.statistic << '\n'
    << "p-value          " << r.p_value << '\n';
  if (r.bootstrap)
    s << "bootstrap        B=" << r.bootstrap->replicates << " (dropped " << r.bootstrap->dropped << "), variance "
      << r.bootstrap->variance << ", 95% CI [" << r.bootstrap->ci_lower << ", " << r.bootstrap->ci_upper
      << "], p " << r.bootstrap->p_value << '\n';
  out << s.str();
}

void print_reri_result(std::ostream& out, const ReriResult& r) {
  std::ostringstream s;
  s << std::setprecision(6);
  s << "n / cases        " << r.n << " / " << r.n_cases << '\n'
    << "log odds         a1 " << r.coefficients[1] << ", a2 " << r.coefficients[2] << ", a1*a2 " << r.coefficients[3]
    << '\n'
    << "RERI             " << r.reri << " (se " << r.se << ")\n"
    << "statistic        " << r.statistic << '\n'
    << "p-value          " << r.p_value << '\n';
  out << s.str();
}

void print_power_table(std::ostream& out, const PowerTable& t) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(4);
  s << "cell   p_g     alpha1   alpha2   reri    test       rate    se      fail\n";
  for (const auto& c : t.rows)
    s << std::setw(4) << c.cell << "  " << std::setw(6) << c.scenario.p_g << "  " << std::setw(7) << c.scenario.alpha1
      << "  " << std::setw(7) << c.scenario.alpha2 << "  " << std::setw(6) << c.scenario.reri() << "  " << std::left
      << std::setw(9) << to_string(c.test) << std::right << "  " << c.rate << "  " << c.se << "  " << c.failures
      << (c.flagged ? "  FLAGGED" : "") << '\n';
  out << s.str();
}

void print_failure_report(std::ostream& out, const FailureReport& r) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(4);
  s << "reps " << r.reps << (r.scenario.dichotomize ? ", a2 dichotomized" : ", a2 continuous") << '\n';
  for (const PowerCell* c : {&r.reri, &r.t3})
    s << std::left << std::setw(10) << to_string(c->test) << std::right << " size " << c->rate << " (se " << c->se
      << ", failures " << c->failures << ")\n";
  out << s.str();
}

}  // namespace addgxe
