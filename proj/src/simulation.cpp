#include "addgxe/simulation.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "addgxe/analysis.hpp"
#include "addgxe/errors.hpp"
#include "addgxe/reri.hpp"

namespace addgxe {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ConfigError("not a number: '" + text + "'");
  }
  if (used != text.size()) throw ConfigError("not a number: '" + text + "'");
  return v;
}

/// number, log(x) or logit(x)
double parse_value(const std::string& raw) {
  const std::string t = trim(raw);
  auto wrapped = [&](const std::string& fn) {
    return t.size() > fn.size() + 2 && t.compare(0, fn.size() + 1, fn + "(") == 0 && t.back() == ')';
  };
  if (wrapped("logit")) {
    const double p = parse_number(trim(t.substr(6, t.size() - 7)));
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("logit argument must lie in (0, 1): '" + t + "'");
    return logit(p);
  }
  if (wrapped("log")) {
    const double x = parse_number(trim(t.substr(4, t.size() - 5)));
    if (!(x > 0.0)) throw ConfigError("log argument must be positive: '" + t + "'");
    return std::log(x);
  }
  return parse_number(t);
}

std::size_t parse_count(const std::string& raw) {
  const double v = parse_value(raw);
  if (!(v >= 1.0) || v != std::floor(v)) throw ConfigError("expected a positive integer, got '" + raw + "'");
  return static_cast<std::size_t>(v);
}

void assign(Scenario& sc, const std::string& key, const std::string& value) {
  if (key == "alpha0") sc.alpha0 = parse_value(value);
  else if (key == "alpha1") sc.alpha1 = parse_value(value);
  else if (key == "alpha2") sc.alpha2 = parse_value(value);
  else if (key == "alpha3") {
    sc.alpha3 = parse_value(value);
    sc.target_reri.reset();
  } else if (key == "reri") {
    sc.target_reri = parse_value(value);
    sc.alpha3.reset();
  } else if (key == "p_g") sc.p_g = parse_value(value);
  else if (key == "p_e") sc.p_e = parse_value(value);
  else if (key == "log_or_ge") sc.log_or_ge = parse_value(value);
  else if (key == "n_cases") sc.n_cases = parse_count(value);
  else if (key == "n_controls") sc.n_controls = parse_count(value);
  else throw ConfigError("unknown scenario key '" + key + "'");
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) out.push_back(trim(item));
  return out;
}

Dataset assemble(std::vector<int> d, std::vector<double> a1, std::vector<double> a2, Eigen::MatrixXd x,
                 ExposureKind k1, ExposureKind k2, std::vector<std::string> covariate_names) {
  Schema names;
  names.outcome = "d";
  names.a1 = "a1";
  names.a1_kind = k1;
  names.a2 = "a2";
  names.a2_kind = k2;
  names.covariates = std::move(covariate_names);
  return Dataset(Dataset::Columns{std::move(d), std::move(a1), std::move(a2), std::move(x), std::nullopt}, names);
}

double truncated_normal(Rng& rng, double bound) {
  for (;;) {
    const double e = rng.normal();
    if (std::abs(e) <= bound) return e;
  }
}

int sample_rejection(const Dataset& ds, SimTest t) {
  try {
    return rejects(ds, t) ? 1 : 0;
  } catch (const Error&) {
    return -1;
  }
}

PowerCell tally(std::size_t cell, const Scenario& sc, SimTest t, const std::vector<signed char>& outcomes) {
  PowerCell pc;
  pc.cell = cell;
  pc.scenario = sc;
  pc.test = t;
  pc.reps = outcomes.size();
  for (auto o : outcomes) {
    if (o < 0) ++pc.failures;
    if (o > 0) ++pc.rejections;
  }
  const std::size_t ok = pc.reps - pc.failures;
  if (ok > 0) {
    pc.rate = static_cast<double>(pc.rejections) / static_cast<double>(ok);
    pc.se = std::sqrt(pc.rate * (1.0 - pc.rate) / static_cast<double>(ok));
  }
  pc.flagged = static_cast<double>(pc.failures) > 0.01 * static_cast<double>(pc.reps);
  return pc;
}

/// Runs body(k) for k in [0, count), in parallel or serially.
void for_each_index(std::size_t count, Execution exec, const std::function<void(std::size_t)>& body) {
  const auto m = static_cast<long>(count);
  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (long k = 0; k < m; ++k) body(static_cast<std::size_t>(k));
  } else {
    for (long k = 0; k < m; ++k) body(static_cast<std::size_t>(k));
  }
}

}  // namespace

double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double logit(double p) { return std::log(p / (1.0 - p)); }

double alpha3_from_reri(double alpha0, double alpha1, double alpha2, double reri) {
  const double inner = (reri - 1.0) * expit(alpha0) + expit(alpha0 + alpha1) + expit(alpha0 + alpha2);
  if (!(inner > 0.0 && inner < 1.0))
    throw DomainError("RERI " + format_double(reri) + " is infeasible for these main effects");
  return logit(inner) - alpha0 - alpha1 - alpha2;
}

double reri_from_alphas(double alpha0, double alpha1, double alpha2, double alpha3) {
  const double r00 = expit(alpha0);
  return (expit(alpha0 + alpha1 + alpha2 + alpha3) - expit(alpha0 + alpha1) - expit(alpha0 + alpha2)) / r00 + 1.0;
}

void Scenario::validate() const {
  auto prob = [](double p, const char* name) {
    if (!(p > 0.0 && p < 1.0)) throw ScenarioError(std::string(name) + " must lie in (0, 1)");
  };
  prob(p_g, "p_g");
  prob(p_e, "p_e");
  if (alpha3.has_value() == target_reri.has_value())
    throw ScenarioError("exactly one of alpha3 and reri must be given");
  if (n_cases == 0 || n_controls == 0) throw ScenarioError("case and control counts must be positive");
  for (double v : {alpha0, alpha1, alpha2, log_or_ge})
    if (!std::isfinite(v)) throw ScenarioError("scenario coefficients must be finite");
  try {
    (void)resolved_alpha3();
  } catch (const DomainError& e) {
    throw ScenarioError(e.what());
  }
}

double Scenario::resolved_alpha3() const {
  if (alpha3) return *alpha3;
  if (target_reri) return alpha3_from_reri(alpha0, alpha1, alpha2, *target_reri);
  throw ScenarioError("scenario has neither alpha3 nor reri");
}

double Scenario::reri() const {
  if (target_reri) return *target_reri;
  return reri_from_alphas(alpha0, alpha1, alpha2, resolved_alpha3());
}

CellLaws cell_laws(const Scenario& sc) {
  sc.validate();
  const double a3 = sc.resolved_alpha3();
  CellLaws c;
  for (int g = 0; g < 2; ++g)
    for (int e = 0; e < 2; ++e) {
      c.population(g, e) = (g ? sc.p_g : 1.0 - sc.p_g) * (e ? sc.p_e : 1.0 - sc.p_e) * std::exp(sc.log_or_ge * g * e);
      c.risk(g, e) = expit(sc.alpha0 + sc.alpha1 * g + sc.alpha2 * e + a3 * g * e);
    }
  c.population /= c.population.sum();
  c.cases = c.population.cwiseProduct(c.risk);
  c.prevalence = c.cases.sum();
  c.controls = c.population - c.cases;
  c.cases /= c.prevalence;
  c.controls /= 1.0 - c.prevalence;
  return c;
}

Dataset generate_case_control(const Scenario& sc, Rng& rng) {
  const CellLaws c = cell_laws(sc);
  const std::size_t n = sc.n_cases + sc.n_controls;
  std::vector<int> d(n);
  std::vector<double> a1(n), a2(n);
  auto draw = [&](const Eigen::Matrix2d& law, std::size_t i) {
    const double u = rng.uniform();
    double cum = 0.0;
    int cell = 3;
    for (int k = 0; k < 4; ++k) {
      cum += law(k / 2, k % 2);
      if (u < cum) {
        cell = k;
        break;
      }
    }
    a1[i] = cell / 2;
    a2[i] = cell % 2;
  };
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = i < sc.n_cases ? 1 : 0;
    draw(d[i] ? c.cases : c.controls, i);
  }
  return assemble(std::move(d), std::move(a1), std::move(a2), Eigen::MatrixXd(n, 0), ExposureKind::binary(),
                  ExposureKind::binary(), {});
}

Dataset generate_case_control(const Scenario& sc, std::uint64_t seed) {
  Rng rng(seed);
  return generate_case_control(sc, rng);
}

std::string to_string(SimTest t) {
  switch (t) {
    case SimTest::u: return "u";
    case SimTest::u_ind: return "u-ind";
    case SimTest::prosp: return "prosp";
    case SimTest::t3: return "t3";
    case SimTest::reri_cont: return "reri-cont";
  }
  return "?";
}

std::vector<SimTest> parse_tests(const std::string& list) {
  std::vector<SimTest> out;
  for (const auto& name : split(list, ',')) {
    if (name == "u") out.push_back(SimTest::u);
    else if (name == "u-ind") out.push_back(SimTest::u_ind);
    else if (name == "prosp") out.push_back(SimTest::prosp);
    else if (name == "t3") out.push_back(SimTest::t3);
    else if (name == "reri-cont") out.push_back(SimTest::reri_cont);
    else throw ConfigError("unknown test '" + name + "' (expected u, u-ind, prosp, t3 or reri-cont)");
  }
  if (out.empty()) throw ConfigError("no tests requested");
  return out;
}

bool rejects(const Dataset& ds, SimTest t, double level) {
  switch (t) {
    case SimTest::u:
    case SimTest::u_ind: {
      TestOptions opt;
      opt.plan.independence = t == SimTest::u_ind;
      return run_test(ds, opt).p_value < level;
    }
    case SimTest::t3: {
      TestOptions opt;
      opt.plan.independence = true;
      if (ds.a2_kind().tag == ExposureTag::continuous) opt.plan.a2_family = A2Family::identity;
      opt.variance = VarianceChoice::sandwich;
      return run_test(ds, opt).p_value < level;
    }
    case SimTest::prosp: return reri_test(ds).p_value < level;
    case SimTest::reri_cont: {
      ReriOptions opt;
      opt.allow_non_binary = true;
      return reri_test(ds, opt).p_value < level;
    }
  }
  return false;
}

const PowerCell& PowerTable::at(std::size_t cell, SimTest t) const {
  for (const auto& r : rows)
    if (r.cell == cell && r.test == t) return r;
  throw ConfigError("no power table row for cell " + std::to_string(cell) + " and test " + to_string(t));
}

PowerTable run_power_experiment(const std::vector<Scenario>& grid, const std::vector<SimTest>& tests,
                                std::size_t reps, std::uint64_t seed, Execution exec) {
  if (reps < 100) throw ConfigError("power experiments need at least 100 replicates");
  if (grid.empty()) throw ConfigError("empty scenario grid");
  if (tests.empty()) throw ConfigError("no tests requested");
  for (const auto& sc : grid) sc.validate();
  const std::size_t nt = tests.size();
  std::vector<signed char> outcome(grid.size() * reps * nt, -1);
  for_each_index(grid.size() * reps, exec, [&](std::size_t k) {
    const std::size_t cell = k / reps, rep = k % reps;
    Rng rng = stream(seed, cell, rep);
    const Dataset ds = generate_case_control(grid[cell], rng);
    for (std::size_t j = 0; j < nt; ++j) outcome[k * nt + j] = static_cast<signed char>(sample_rejection(ds, tests[j]));
  });
  PowerTable table;
  for (std::size_t c = 0; c < grid.size(); ++c)
    for (std::size_t j = 0; j < nt; ++j) {
      std::vector<signed char> o(reps);
      for (std::size_t r = 0; r < reps; ++r) o[r] = outcome[((c * reps) + r) * nt + j];
      table.rows.push_back(tally(c, grid[c], tests[j], o));
    }
  return table;
}

void write_power_csv(std::ostream& out, const PowerTable& t) {
  out << "cell,p_g,p_e,alpha0,alpha1,alpha2,alpha3,reri,n_cases,n_controls,test,reps,failures,rejections,rate,se,"
         "flagged\n";
  for (const auto& r : t.rows) {
    const auto& s = r.scenario;
    out << r.cell << ',' << format_double(s.p_g) << ',' << format_double(s.p_e) << ',' << format_double(s.alpha0)
        << ',' << format_double(s.alpha1) << ',' << format_double(s.alpha2) << ','
        << format_double(s.resolved_alpha3()) << ',' << format_double(s.reri()) << ',' << s.n_cases << ','
        << s.n_controls << ',' << to_string(r.test) << ',' << r.reps << ',' << r.failures << ',' << r.rejections
        << ',' << format_double(r.rate) << ',' << format_double(r.se) << ',' << (r.flagged ? 1 : 0) << '\n';
  }
}

std::vector<Scenario> parse_grid(std::istream& in) {
  Scenario defaults;
  defaults.target_reri = 0.0;
  std::vector<Scenario> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    try {
      std::istringstream ls(line);
      std::string head;
      ls >> head;
      if (head == "cell" || head == "grid") {
        std::vector<std::pair<std::string, std::vector<std::string>>> axes;
        std::string tok;
        while (ls >> tok) {
          const auto eq = tok.find('=');
          if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + tok + "'");
          auto values = head == "grid" ? split(tok.substr(eq + 1), ',') : std::vector<std::string>{tok.substr(eq + 1)};
          if (values.empty()) throw ConfigError("no values for '" + tok.substr(0, eq) + "'");
          axes.emplace_back(tok.substr(0, eq), std::move(values));
        }
        std::vector<std::size_t> idx(axes.size(), 0);
        for (;;) {
          Scenario sc = defaults;
          for (std::size_t a = 0; a < axes.size(); ++a) assign(sc, axes[a].first, axes[a].second[idx[a]]);
          sc.validate();
          out.push_back(sc);
          bool done = true;
          for (std::size_t a = axes.size(); a-- > 0;) {
            if (++idx[a] < axes[a].second.size()) {
              done = false;
              break;
            }
            idx[a] = 0;
          }
          if (done) break;
        }
      } else {
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("expected 'key = value', 'cell ...' or 'grid ...'");
        assign(defaults, trim(line.substr(0, eq)), line.substr(eq + 1));
      }
    } catch (const ConfigError& e) {
      throw ConfigError("grid line " + std::to_string(lineno) + ": " + e.what());
    } catch (const ScenarioError& e) {
      throw ConfigError("grid line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (out.empty()) throw ConfigError("grid defines no cells");
  return out;
}

std::vector<Scenario> load_grid(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open grid file '" + path + "'");
  return parse_grid(in);
}

std::vector<Scenario> size_table_grid(double p_g, double reri) {
  const double effects[] = {std::log(0.7), std::log(1.2), std::log(2.0)};
  std::vector<Scenario> out;
  for (double a1 : effects)
    for (double a2 : effects) {
      Scenario sc;
      sc.p_g = p_g;
      sc.alpha1 = a1;
      sc.alpha2 = a2;
      sc.target_reri = reri;
      out.push_back(sc);
    }
  return out;
}

double FailureScenario::risk(int g, double e, int x) const {
  const double base = gamma0 + gamma_x * x;
  return expit(base + gamma_g * g) + expit(base + gamma_e * e) - expit(base);
}

void FailureScenario::validate() const {
  if (!(p_g > 0.0 && p_g < 1.0) || !(p_x > 0.0 && p_x < 1.0)) throw ScenarioError("p_g and p_x must lie in (0, 1)");
  if (!(e_bound > 0.0)) throw ScenarioError("e_bound must be positive");
  if (n_cases == 0 || n_controls == 0) throw ScenarioError("case and control counts must be positive");
  // The risk is monotone in each argument, so the extremes sit at the corners.
  for (int g = 0; g < 2; ++g)
    for (int x = 0; x < 2; ++x)
      for (double e : {-e_bound, e_bound}) {
        const double r = risk(g, e, x);
        if (!(r > 0.0 && r < 1.0))
          throw ScenarioError("additive risk leaves (0, 1) at a1=" + std::to_string(g) + ", a2=" + format_double(e) +
                              ", x=" + std::to_string(x));
      }
}

Dataset generate_failure_case_control(const FailureScenario& fs, Rng& rng) {
  fs.validate();
  std::vector<double> ca1, ca2, cx, oa1, oa2, ox;
  ca1.reserve(fs.n_cases);
  oa1.reserve(fs.n_controls);
  const std::size_t max_draws = 100000 * (fs.n_cases + fs.n_controls);
  for (std::size_t draws = 0; ca1.size() < fs.n_cases || oa1.size() < fs.n_controls; ++draws) {
    if (draws >= max_draws) throw ScenarioError("case or control quota unreachable");
    const int g = rng.bernoulli(fs.p_g) ? 1 : 0;
    const int x = rng.bernoulli(fs.p_x) ? 1 : 0;
    const double e = truncated_normal(rng, fs.e_bound);
    const bool d = rng.bernoulli(fs.risk(g, e, x));
    const double e_out = fs.dichotomize ? (e > 0.0 ? 1.0 : 0.0) : e;
    if (d && ca1.size() < fs.n_cases) {
      ca1.push_back(g);
      ca2.push_back(e_out);
      cx.push_back(x);
    } else if (!d && oa1.size() < fs.n_controls) {
      oa1.push_back(g);
      oa2.push_back(e_out);
      ox.push_back(x);
    }
  }
  const std::size_t n = fs.n_cases + fs.n_controls;
  std::vector<int> d(n);
  std::vector<double> a1(n), a2(n);
  Eigen::MatrixXd xm(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    const bool is_case = i < fs.n_cases;
    const std::size_t j = is_case ? i : i - fs.n_cases;
    d[i] = is_case ? 1 : 0;
    a1[i] = is_case ? ca1[j] : oa1[j];
    a2[i] = is_case ? ca2[j] : oa2[j];
    xm(static_cast<Eigen::Index>(i), 0) = is_case ? cx[j] : ox[j];
  }
  return assemble(std::move(d), std::move(a1), std::move(a2), std::move(xm), ExposureKind::binary(),
                  fs.dichotomize ? ExposureKind::binary() : ExposureKind::continuous(), {"x"});
}

FailureScenario parse_failure_scenario(std::istream& in) {
  FailureScenario fs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    try {
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ConfigError("expected 'key = value'");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key == "gamma0") fs.gamma0 = parse_value(value);
      else if (key == "gamma_g") fs.gamma_g = parse_value(value);
      else if (key == "gamma_e") fs.gamma_e = parse_value(value);
      else if (key == "gamma_x") fs.gamma_x = parse_value(value);
      else if (key == "p_g") fs.p_g = parse_value(value);
      else if (key == "p_x") fs.p_x = parse_value(value);
      else if (key == "e_bound") fs.e_bound = parse_value(value);
      else if (key == "n_cases") fs.n_cases = parse_count(value);
      else if (key == "n_controls") fs.n_controls = parse_count(value);
      else if (key == "dichotomize") {
        if (value == "true" || value == "1") fs.dichotomize = true;
        else if (value == "false" || value == "0") fs.dichotomize = false;
        else throw ConfigError("dichotomize must be true or false");
      } else throw ConfigError("unknown failure-scenario key '" + key + "'");
    } catch (const ConfigError& e) {
      throw ConfigError("scenario line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  try {
    fs.validate();
  } catch (const ScenarioError& e) {
    throw ConfigError(e.what());
  }
  return fs;
}

FailureScenario load_failure_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
  return parse_failure_scenario(in);
}

FailureReport run_reri_failure_experiment(const FailureScenario& fs, std::size_t reps, std::uint64_t seed,
                                          Execution exec) {
  if (reps < 100) throw ConfigError("failure experiments need at least 100 replicates");
  fs.validate();
  std::vector<signed char> reri(reps, -1), t3(reps, -1);
  for_each_index(reps, exec, [&](std::size_t r) {
    Rng rng = stream(seed, 0, r);
    const Dataset ds = generate_failure_case_control(fs, rng);
    reri[r] = static_cast<signed char>(sample_rejection(ds, SimTest::reri_cont));
    t3[r] = static_cast<signed char>(sample_rejection(ds, SimTest::t3));
  });
  FailureReport rep;
  rep.scenario = fs;
  rep.reps = reps;
  Scenario placeholder;
  placeholder.target_reri = 0.0;
  placeholder.n_cases = fs.n_cases;
  placeholder.n_controls = fs.n_controls;
  placeholder.p_g = fs.p_g;
  rep.reri = tally(0, placeholder, SimTest::reri_cont, reri);
  rep.t3 = tally(0, placeholder, SimTest::t3, t3);
  return rep;
}

Dataset generate_count_exposure_study(std::size_t n_cases, std::size_t n_controls, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<int> d;
  std::vector<double> a1, a2, age, flag;
  std::size_t cases = 0, controls = 0;
  const std::size_t max_draws = 100000 * (n_cases + n_controls);
  std::vector<std::array<double, 4>> kept_cases, kept_controls;
  for (std::size_t draws = 0; cases < n_cases || controls < n_controls; ++draws) {
    if (draws >= max_draws) throw ScenarioError("case or control quota unreachable");
    const double z = rng.normal();
    const double f = rng.bernoulli(0.3) ? 1.0 : 0.0;
    const double g = rng.bernoulli(expit(logit(0.08) + 0.3 * f)) ? 1.0 : 0.0;
    const double e = static_cast<double>(rng.poisson(std::exp(std::log(1.8) + 0.25 * z - 0.2 * f)));
    const double risk = expit(logit(0.015) + std::log(4.0) * g - 0.15 * e + 0.2 * z);
    const bool dz = rng.bernoulli(risk);
    if (dz && cases < n_cases) {
      kept_cases.push_back({g, e, z, f});
      ++cases;
    } else if (!dz && controls < n_controls) {
      kept_controls.push_back({g, e, z, f});
      ++controls;
    }
  }
  const std::size_t n = n_cases + n_controls;
  Eigen::MatrixXd x(n, 2);
  std::size_t i = 0;
  for (const auto* block : {&kept_cases, &kept_controls})
    for (const auto& r : *block) {
      d.push_back(block == &kept_cases ? 1 : 0);
      a1.push_back(r[0]);
      a2.push_back(r[1]);
      x(static_cast<Eigen::Index>(i), 0) = r[2];
      x(static_cast<Eigen::Index>(i), 1) = r[3];
      ++i;
    }
  return assemble(std::move(d), std::move(a1), std::move(a2), std::move(x), ExposureKind::binary(),
                  ExposureKind::count(), {"age", "smoker"});
}

}  // namespace addgxe
