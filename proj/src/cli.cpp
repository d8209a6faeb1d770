#include "addgxe/cli.hpp"

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"

#include "addgxe/analysis.hpp"
#include "addgxe/errors.hpp"
#include "addgxe/parallel.hpp"
#include "addgxe/report.hpp"
#include "addgxe/reri.hpp"
#include "addgxe/simulation.hpp"

namespace addgxe {

namespace {

/// Flag misuse detected after parsing; reported with exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataFlags {
  std::string data;
  std::string schema;
  std::string outcome, a1, a2;
  std::string a1_kind = "binary", a2_kind = "binary";
  std::vector<std::string> covariates;
  bool covariates_given = false;
  std::string weight;

  void add(CLI::App* app) {
    app->add_option("--data", data, "Case-control CSV with a header row")->required();
    app->add_option("--schema", schema, "Schema file mapping column roles");
    app->add_option("--outcome", outcome, "Outcome column (0 = control, 1 = case)");
    app->add_option("--a1", a1, "First exposure column");
    app->add_option("--a2", a2, "Second exposure column");
    app->add_option("--a1-kind", a1_kind, "binary | categorical:K")->capture_default_str();
    app->add_option("--a2-kind", a2_kind, "binary | count | continuous")->capture_default_str();
    app->add_option("--covariates", covariates, "Covariate columns (comma separated)")->delimiter(',');
    app->add_option("--weight", weight, "Sampling-weight column");
  }

  Schema resolve(const CLI::App* app) const {
    const bool columns = app->count("--outcome") || app->count("--a1") || app->count("--a2") ||
                         app->count("--a1-kind") || app->count("--a2-kind") || app->count("--weight");
    if (!schema.empty()) {
      if (columns) throw UsageError("--schema cannot be combined with column flags");
      Schema s = load_schema(schema);
      if (app->count("--covariates")) s.covariates = covariates;
      return s;
    }
    if (outcome.empty() || a1.empty() || a2.empty())
      throw UsageError("give --schema or all of --outcome, --a1 and --a2");
    Schema s;
    s.outcome = outcome;
    s.a1 = a1;
    s.a2 = a2;
    try {
      s.a1_kind = ExposureKind::parse(a1_kind);
      s.a2_kind = ExposureKind::parse(a2_kind);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
    s.covariates = covariates;
    if (!weight.empty()) s.weight = weight;
    return s;
  }
};

struct OutputFlags {
  std::string path;
  std::string format = "json";

  void add(CLI::App* app) {
    app->add_option("--output", path, "Write machine-readable results here (default: standard output)");
    app->add_option("--format", format, "json | csv")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
  }

  /// Writes `machine` to the output path, or to `out` when none was given, in
  /// which case the human table is skipped.
  void emit(std::ostream& out, const std::string& machine, const std::function<void(std::ostream&)>& human) const {
    if (path.empty()) {
      out << machine;
      return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot write '" + path + "'");
    f << machine;
    if (!f) throw ConfigError("failed writing '" + path + "'");
    human(out);
  }
};

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tests for additive interaction between two exposures in case-control data", "addgxe"};
  app.set_version_flag("--version", std::string("addgxe ") + kVersion);
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: ADDGXE_THREADS or all cores)");

  // test
  auto* test = app.add_subcommand("test", "Score test of no additive interaction");
  DataFlags test_data;
  test_data.add(test);
  bool independence = false;
  std::string a2_family, variance = "auto", stratified = "on";
  std::size_t boot = 1000;
  std::uint64_t seed = 1;
  OutputFlags test_out;
  test->add_flag("--independence", independence, "Assume the exposures are independent given covariates");
  test->add_option("--a2-family", a2_family, "Link for the a2 model: logit | identity | log")
      ->check(CLI::IsMember({"logit", "identity", "log"}));
  test->add_option("--variance", variance, "auto | closed-form | sandwich")
      ->check(CLI::IsMember({"auto", "closed-form", "sandwich"}))
      ->capture_default_str();
  auto* boot_opt = test->add_option("--bootstrap", boot, "Add a nonparametric bootstrap with B replicates")
                       ->expected(0, 1)
                       ->default_str("1000");
  test->add_option("--bootstrap-stratified", stratified, "Resample cases and controls separately: on | off")
      ->check(CLI::IsMember({"on", "off"}))
      ->capture_default_str();
  test->add_option("--seed", seed, "Random seed")->capture_default_str();
  test_out.add(test);

  // reri
  auto* reri = app.add_subcommand("reri", "Prospective logistic RERI test");
  DataFlags reri_data;
  reri_data.add(reri);
  OutputFlags reri_out;
  reri_out.add(reri);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Monte Carlo size and power experiments");
  std::string grid, failure, tests = "u,u-ind,prosp", summary;
  std::size_t reps = 2000;
  std::uint64_t sim_seed = 1;
  OutputFlags sim_out;
  sim_out.format = "csv";
  auto* grid_opt = sim->add_option("--grid", grid, "Scenario grid file");
  auto* fail_opt = sim->add_option("--failure", failure, "Additive-null scenario with a continuous a2");
  grid_opt->excludes(fail_opt);
  sim->add_option("--reps", reps, "Replicates per cell")->capture_default_str();
  sim->add_option("--seed", sim_seed, "Random seed")->capture_default_str();
  sim->add_option("--tests", tests, "Comma list of u, u-ind, prosp, t3, reri-cont")->capture_default_str();
  sim->add_option("--summary", summary, "Also write the JSON summary here");
  sim_out.add(sim);

  // summarize
  auto* summ = app.add_subcommand("summarize", "Validate a dataset and print exposure counts");
  DataFlags summ_data;
  summ_data.add(summ);
  OutputFlags summ_out;
  summ_out.add(summ);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << "addgxe " << kVersion << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    if (const auto nl = msg.find('\n'); nl != std::string::npos) msg.erase(nl);
    err << "addgxe: " << msg << '\n';
    return 2;
  }

  try {
    set_threads(threads > 0 ? threads : default_threads());

    if (*test) {
      const Schema schema = test_data.resolve(test);
      TestOptions opt;
      opt.plan.independence = independence;
      if (!a2_family.empty()) opt.plan.a2_family = parse_a2_family(a2_family);
      if (test->count("--covariates") || !schema.covariates.empty()) opt.plan.covariates = schema.covariates;
      opt.variance = parse_variance_choice(variance);
      if (opt.variance == VarianceChoice::closed_form && opt.plan.a2_family && *opt.plan.a2_family != A2Family::logit)
        throw UsageError("--variance closed-form requires the logit a2 family");
      if (test->count("--bootstrap-stratified") && boot_opt->count() == 0)
        throw UsageError("--bootstrap-stratified needs --bootstrap");
      if (boot_opt->count()) {
        if (boot < 100) throw UsageError("--bootstrap needs at least 100 replicates");
        opt.bootstrap = BootstrapOptions{boot, seed, stratified == "on", Execution::parallel};
      }
      const Dataset ds = load_dataset(test_data.data, schema);
      const TestResult r = run_test(ds, opt);
      test_out.emit(out, test_out.format == "json" ? test_result_json(r) : test_result_csv(r),
                    [&](std::ostream& o) { print_test_result(o, r); });
    } else if (*reri) {
      const Schema schema = reri_data.resolve(reri);
      ReriOptions opt;
      opt.covariates = schema.covariates;
      const Dataset ds = load_dataset(reri_data.data, schema);
      const ReriResult r = reri_test(ds, opt);
      reri_out.emit(out, reri_out.format == "json" ? reri_result_json(r) : reri_result_csv(r),
                    [&](std::ostream& o) { print_reri_result(o, r); });
    } else if (*sim) {
      if (grid.empty() == failure.empty()) throw UsageError("simulate needs exactly one of --grid and --failure");
      if (reps < 100) throw UsageError("--reps must be at least 100");
      if (!failure.empty()) {
        if (sim->count("--tests")) throw UsageError("--tests applies to --grid runs only");
        const FailureScenario fs = load_failure_scenario(failure);
        const FailureReport r = run_reri_failure_experiment(fs, reps, sim_seed);
        std::ostringstream csv;
        write_failure_csv(csv, r);
        const std::string json = failure_report_json(r, sim_seed);
        sim_out.emit(out, sim_out.format == "csv" ? csv.str() : json, [&](std::ostream& o) { print_failure_report(o, r); });
        if (!summary.empty()) {
          std::ofstream f(summary, std::ios::binary);
          if (!(f << json)) throw ConfigError("cannot write '" + summary + "'");
        }
      } else {
        std::vector<SimTest> list;
        try {
          list = parse_tests(tests);
        } catch (const ConfigError& e) {
          throw UsageError(e.what());
        }
        const auto scenarios = load_grid(grid);
        const PowerTable t = run_power_experiment(scenarios, list, reps, sim_seed);
        std::ostringstream csv;
        write_power_csv(csv, t);
        const std::string json = power_table_json(t, reps, sim_seed);
        sim_out.emit(out, sim_out.format == "csv" ? csv.str() : json, [&](std::ostream& o) { print_power_table(o, t); });
        if (!summary.empty()) {
          std::ofstream f(summary, std::ios::binary);
          if (!(f << json)) throw ConfigError("cannot write '" + summary + "'");
        }
      }
    } else if (*summ) {
      const Schema schema = summ_data.resolve(summ);
      const DatasetSummary s = summarize(load_dataset(summ_data.data, schema));
      std::ostringstream human;
      print_summary(human, s);
      summ_out.emit(out, summ_out.format == "json" ? summary_json(s) : human.str(),
                    [&](std::ostream& o) { o << human.str(); });
    }
  } catch (const UsageError& e) {
    err << "addgxe: " << e.what() << '\n';
    return 2;
  } catch (const ValidationError& e) {
    err << "addgxe: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    err << "addgxe: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "addgxe: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

int run(int argc, const char* const* argv) { return run(argc, argv, std::cout, std::cerr); }

}  // namespace addgxe
