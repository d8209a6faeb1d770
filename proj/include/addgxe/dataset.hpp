#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace addgxe {

enum class ExposureTag { binary, categorical, count, continuous };

/// Declared measurement type of an exposure column. Kinds are never inferred
/// from data.
struct ExposureKind {
  ExposureTag tag = ExposureTag::binary;
  int levels = 2;  // categorical only: values in {0, ..., levels-1}

  static ExposureKind binary() { return {ExposureTag::binary, 2}; }
  static ExposureKind categorical(int k);
  static ExposureKind count() { return {ExposureTag::count, 0}; }
  static ExposureKind continuous() { return {ExposureTag::continuous, 0}; }

  /// Parses "binary", "categorical:K", "count" or "continuous".
  static ExposureKind parse(const std::string& text);
  std::string to_string() const;

  bool is_integer() const { return tag != ExposureTag::continuous; }
  /// Number of distinct levels for binary/categorical, 0 otherwise.
  int finite_levels() const;

  bool operator==(const ExposureKind&) const = default;
};

/// Column-role mapping used to read a delimited file.
struct Schema {
  std::string outcome;
  std::string a1;
  ExposureKind a1_kind = ExposureKind::binary();
  std::string a2;
  ExposureKind a2_kind = ExposureKind::binary();
  std::vector<std::string> covariates;
  std::optional<std::string> weight;
};

/// Reads the key-value schema grammar:
///
///     # comment
///     outcome    = d
///     a1         = g
///     a2         = e
///     kind.a1    = binary
///     kind.a2    = count
///     covariates = age, smoker
///     weight     = w
Schema parse_schema(std::istream& in);
Schema load_schema(const std::string& path);

/// Immutable case-control dataset. Construction validates every invariant and
/// throws ValidationError with the offending 1-based row.
class Dataset {
 public:
  struct Columns {
    std::vector<int> d;
    std::vector<double> a1;
    std::vector<double> a2;
    Eigen::MatrixXd x;  // n x p, p may be 0
    std::optional<std::vector<double>> w;
  };

  Dataset(Columns cols, ExposureKind a1_kind, ExposureKind a2_kind);
  Dataset(Columns cols, const Schema& names);

  std::size_t n() const { return d_.size(); }
  std::size_t p() const { return static_cast<std::size_t>(x_.cols()); }
  std::size_t n_cases() const { return n_cases_; }
  std::size_t n_controls() const { return n() - n_cases_; }

  const std::vector<int>& d() const { return d_; }
  const std::vector<double>& a1() const { return a1_; }
  const std::vector<double>& a2() const { return a2_; }
  const Eigen::MatrixXd& x() const { return x_; }
  bool has_weights() const { return w_.has_value(); }
  /// Sampling weight of row i (1 when the dataset carries no weights).
  double weight(std::size_t i) const { return w_ ? (*w_)[i] : 1.0; }
  const std::optional<std::vector<double>>& weights() const { return w_; }

  const ExposureKind& a1_kind() const { return a1_kind_; }
  const ExposureKind& a2_kind() const { return a2_kind_; }
  /// Column names used when writing; defaults d, a1, a2, x1..xp, w.
  const Schema& names() const { return names_; }

  /// Index of a covariate column by name, or nullopt.
  std::optional<std::size_t> covariate_index(const std::string& name) const;

  /// Rows in the given order (duplicates allowed). Used for resampling.
  Dataset subset(std::span<const std::size_t> rows) const;
  /// Same records with only the listed covariate columns.
  Dataset select_covariates(std::span<const std::size_t> cols) const;
  /// Same records with the exposure columns replaced (kinds re-validated).
  Dataset with_exposures(std::vector<double> a1, ExposureKind k1, std::vector<double> a2,
                         ExposureKind k2) const;

  /// Throws ValidationError unless both cases and controls are present.
  void require_cases_and_controls() const;

 private:
  void validate();

  std::vector<int> d_;
  std::vector<double> a1_;
  std::vector<double> a2_;
  Eigen::MatrixXd x_;
  std::optional<std::vector<double>> w_;
  ExposureKind a1_kind_;
  ExposureKind a2_kind_;
  Schema names_;
  std::size_t n_cases_ = 0;
};

Dataset read_dataset(std::istream& in, const Schema& schema);
Dataset load_dataset(const std::string& path, const Schema& schema);

/// Writes the dataset as CSV with header. Integer-kind columns are written as
/// integers; real-valued columns use the shortest round-trip decimal form, so
/// write(read(write(ds))) is byte-identical to write(ds).
void write_dataset(std::ostream& out, const Dataset& ds);
void save_dataset(const std::string& path, const Dataset& ds);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

struct ExposureSummary {
  std::string name;
  ExposureKind kind;
  /// Discrete kinds: level -> count, separately for controls and cases.
  std::map<long, std::size_t> control_levels;
  std::map<long, std::size_t> case_levels;
  /// Moments by status (always filled).
  double control_mean = 0.0, control_sd = 0.0;
  double case_mean = 0.0, case_sd = 0.0;
};

struct DatasetSummary {
  std::size_t n = 0;
  std::size_t cases = 0;
  std::size_t controls = 0;
  bool usable = false;  // both cases and controls present
  std::vector<std::string> problems;
  ExposureSummary a1;
  ExposureSummary a2;
  bool weighted = false;
};

DatasetSummary summarize(const Dataset& ds);
void print_summary(std::ostream& out, const DatasetSummary& s);

}  // namespace addgxe
