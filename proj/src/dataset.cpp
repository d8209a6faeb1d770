#include "addgxe/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "addgxe/errors.hpp"

namespace addgxe {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(trim(std::string_view(line).substr(start, pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

bool parse_number(const std::string& cell, double& out) {
  if (cell.empty()) return false;
  const char* first = cell.data();
  const char* last = first + cell.size();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

void check_exposure(const std::vector<double>& v, const ExposureKind& kind, const std::string& label) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double a = v[i];
    if (!std::isfinite(a)) throw ValidationError(i + 1, label + " is not finite");
    switch (kind.tag) {
      case ExposureTag::binary:
        if (a != 0.0 && a != 1.0)
          throw ValidationError(i + 1, label + " declared binary but has value " + format_double(a));
        break;
      case ExposureTag::categorical:
        if (a != std::floor(a) || a < 0.0 || a >= kind.levels)
          throw ValidationError(i + 1, label + " declared categorical:" + std::to_string(kind.levels) +
                                           " but has value " + format_double(a));
        break;
      case ExposureTag::count:
        if (a != std::floor(a) || a < 0.0)
          throw ValidationError(i + 1, label + " declared count but has value " + format_double(a));
        break;
      case ExposureTag::continuous:
        break;
    }
  }
}

Schema default_names(std::size_t p, bool weighted) {
  Schema s;
  s.outcome = "d";
  s.a1 = "a1";
  s.a2 = "a2";
  for (std::size_t j = 0; j < p; ++j) s.covariates.push_back("x" + std::to_string(j + 1));
  if (weighted) s.weight = "w";
  return s;
}

}  // namespace

ExposureKind ExposureKind::categorical(int k) {
  if (k < 2) throw ConfigError("categorical exposure needs at least 2 levels, got " + std::to_string(k));
  return {ExposureTag::categorical, k};
}

ExposureKind ExposureKind::parse(const std::string& raw) {
  const std::string text = trim(raw);
  if (text == "binary") return binary();
  if (text == "count") return count();
  if (text == "continuous") return continuous();
  if (text.rfind("categorical", 0) == 0) {
    const auto colon = text.find(':');
    if (colon == std::string::npos)
      throw ConfigError("categorical kind needs a level count, e.g. categorical:3");
    int k = 0;
    const std::string num = trim(text.substr(colon + 1));
    const auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), k);
    if (ec != std::errc() || ptr != num.data() + num.size())
      throw ConfigError("bad categorical level count '" + num + "'");
    return categorical(k);
  }
  throw ConfigError("unknown exposure kind '" + text + "'");
}

std::string ExposureKind::to_string() const {
  switch (tag) {
    case ExposureTag::binary: return "binary";
    case ExposureTag::categorical: return "categorical:" + std::to_string(levels);
    case ExposureTag::count: return "count";
    case ExposureTag::continuous: return "continuous";
  }
  return "?";
}

int ExposureKind::finite_levels() const {
  switch (tag) {
    case ExposureTag::binary: return 2;
    case ExposureTag::categorical: return levels;
    default: return 0;
  }
}

Schema parse_schema(std::istream& in) {
  Schema s;
  bool have_outcome = false, have_a1 = false, have_a2 = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("schema line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (value.empty() && key != "covariates")
      throw ConfigError("schema line " + std::to_string(lineno) + ": empty value for '" + key + "'");
    if (key == "outcome") {
      s.outcome = value;
      have_outcome = true;
    } else if (key == "a1") {
      s.a1 = value;
      have_a1 = true;
    } else if (key == "a2") {
      s.a2 = value;
      have_a2 = true;
    } else if (key == "kind.a1") {
      s.a1_kind = ExposureKind::parse(value);
    } else if (key == "kind.a2") {
      s.a2_kind = ExposureKind::parse(value);
    } else if (key == "covariates") {
      s.covariates.clear();
      if (!value.empty())
        for (auto& c : split(value, ','))
          if (!c.empty()) s.covariates.push_back(c);
    } else if (key == "weight") {
      s.weight = value;
    } else {
      throw ConfigError("schema line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  if (!have_outcome) throw ConfigError("schema does not name the outcome column");
  if (!have_a1 || !have_a2) throw ConfigError("schema must name both exposure columns (a1, a2)");
  return s;
}

Schema load_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open schema file '" + path + "'");
  return parse_schema(in);
}

Dataset::Dataset(Columns cols, ExposureKind a1_kind, ExposureKind a2_kind)
    : d_(std::move(cols.d)),
      a1_(std::move(cols.a1)),
      a2_(std::move(cols.a2)),
      x_(std::move(cols.x)),
      w_(std::move(cols.w)),
      a1_kind_(a1_kind),
      a2_kind_(a2_kind) {
  if (x_.rows() == 0 && x_.cols() == 0) x_.resize(static_cast<Eigen::Index>(d_.size()), 0);
  names_ = default_names(static_cast<std::size_t>(x_.cols()), w_.has_value());
  names_.a1_kind = a1_kind_;
  names_.a2_kind = a2_kind_;
  validate();
}

Dataset::Dataset(Columns cols, const Schema& names) : Dataset(std::move(cols), names.a1_kind, names.a2_kind) {
  if (names.covariates.size() != p())
    throw ConfigError("schema lists " + std::to_string(names.covariates.size()) + " covariates, data has " +
                      std::to_string(p()));
  if (names.weight.has_value() != has_weights()) throw ConfigError("schema weight column does not match data");
  names_ = names;
}

void Dataset::validate() {
  const std::size_t n = d_.size();
  if (n == 0) throw EmptyInputError("dataset has no records");
  if (a1_.size() != n || a2_.size() != n || static_cast<std::size_t>(x_.rows()) != n ||
      (w_ && w_->size() != n))
    throw ValidationError(0, "columns have unequal lengths");
  n_cases_ = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (d_[i] != 0 && d_[i] != 1) throw ValidationError(i + 1, "outcome must be 0 or 1");
    n_cases_ += static_cast<std::size_t>(d_[i]);
  }
  check_exposure(a1_, a1_kind_, "exposure a1");
  check_exposure(a2_, a2_kind_, "exposure a2");
  for (std::size_t i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < x_.cols(); ++j)
      if (!std::isfinite(x_(static_cast<Eigen::Index>(i), j)))
        throw ValidationError(i + 1, "covariate " + std::to_string(j + 1) + " is not finite");
  if (w_)
    for (std::size_t i = 0; i < n; ++i)
      if (!((*w_)[i] > 0.0) || !std::isfinite((*w_)[i]))
        throw ValidationError(i + 1, "sampling weight must be positive and finite");
}

std::optional<std::size_t> Dataset::covariate_index(const std::string& name) const {
  const auto it = std::find(names_.covariates.begin(), names_.covariates.end(), name);
  if (it == names_.covariates.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names_.covariates.begin());
}

void Dataset::require_cases_and_controls() const {
  if (n_cases_ == 0) throw ValidationError(0, "dataset has no cases");
  if (n_cases_ == n()) throw ValidationError(0, "dataset has no controls");
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Columns c;
  const auto m = rows.size();
  c.d.resize(m);
  c.a1.resize(m);
  c.a2.resize(m);
  c.x.resize(static_cast<Eigen::Index>(m), x_.cols());
  if (w_) c.w.emplace(m);
  for (std::size_t k = 0; k < m; ++k) {
    const auto i = rows[k];
    c.d[k] = d_[i];
    c.a1[k] = a1_[i];
    c.a2[k] = a2_[i];
    if (x_.cols() > 0) c.x.row(static_cast<Eigen::Index>(k)) = x_.row(static_cast<Eigen::Index>(i));
    if (w_) (*c.w)[k] = (*w_)[i];
  }
  return Dataset(std::move(c), names_);
}

Dataset Dataset::select_covariates(std::span<const std::size_t> cols) const {
  Columns c{d_, a1_, a2_, Eigen::MatrixXd(x_.rows(), static_cast<Eigen::Index>(cols.size())), w_};
  Schema names = names_;
  names.covariates.clear();
  for (std::size_t k = 0; k < cols.size(); ++k) {
    if (cols[k] >= p()) throw ConfigError("covariate index out of range");
    c.x.col(static_cast<Eigen::Index>(k)) = x_.col(static_cast<Eigen::Index>(cols[k]));
    names.covariates.push_back(names_.covariates[cols[k]]);
  }
  return Dataset(std::move(c), names);
}

Dataset Dataset::with_exposures(std::vector<double> a1, ExposureKind k1, std::vector<double> a2,
                                ExposureKind k2) const {
  Schema names = names_;
  names.a1_kind = k1;
  names.a2_kind = k2;
  return Dataset(Columns{d_, std::move(a1), std::move(a2), x_, w_}, names);
}

Dataset read_dataset(std::istream& in, const Schema& schema) {
  std::string line;
  std::string header_line;
  while (std::getline(in, header_line)) {
    if (!trim(header_line).empty()) break;
    header_line.clear();
  }
  if (trim(header_line).empty()) throw EmptyInputError("input file is empty (no header row)");
  const auto header = split(header_line, ',');
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t j = 0; j < header.size(); ++j) index.emplace(header[j], j);

  auto locate = [&](const std::string& name, const char* role) {
    const auto it = index.find(name);
    if (it == index.end())
      throw SchemaError(name, std::string("column '") + name + "' (" + role + ") not found in header");
    return it->second;
  };
  const auto col_d = locate(schema.outcome, "outcome");
  const auto col_a1 = locate(schema.a1, "a1");
  const auto col_a2 = locate(schema.a2, "a2");
  std::vector<std::size_t> col_x;
  for (const auto& c : schema.covariates) col_x.push_back(locate(c, "covariate"));
  std::optional<std::size_t> col_w;
  if (schema.weight) col_w = locate(*schema.weight, "weight");

  std::vector<int> d;
  std::vector<double> a1, a2, w;
  std::vector<double> xflat;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto cells = split(line, ',');
    if (cells.size() != header.size())
      throw ValidationError(row, "expected " + std::to_string(header.size()) + " cells, found " +
                                     std::to_string(cells.size()));
    auto number = [&](std::size_t col) {
      const auto& cell = cells[col];
      if (cell.empty()) throw ValidationError(row, "missing value in column '" + header[col] + "'");
      double v = 0.0;
      if (!parse_number(cell, v))
        throw ValidationError(row, "non-numeric value '" + cell + "' in column '" + header[col] + "'");
      return v;
    };
    const double dv = number(col_d);
    if (dv != 0.0 && dv != 1.0) throw ValidationError(row, "outcome must be 0 or 1");
    d.push_back(static_cast<int>(dv));
    a1.push_back(number(col_a1));
    a2.push_back(number(col_a2));
    for (auto c : col_x) xflat.push_back(number(c));
    if (col_w) w.push_back(number(*col_w));
  }
  if (row == 0) throw EmptyInputError("input file has a header but no data rows");

  Dataset::Columns cols;
  cols.d = std::move(d);
  cols.a1 = std::move(a1);
  cols.a2 = std::move(a2);
  const auto n = static_cast<Eigen::Index>(row);
  const auto p = static_cast<Eigen::Index>(col_x.size());
  cols.x.resize(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j) cols.x(i, j) = xflat[static_cast<std::size_t>(i * p + j)];
  if (col_w) cols.w = std::move(w);
  return Dataset(std::move(cols), schema);
}

Dataset load_dataset(const std::string& path, const Schema& schema) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open data file '" + path + "'");
  return read_dataset(in, schema);
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw DomainError("cannot format value");
  return std::string(buf, ptr);
}

namespace {

std::string format_exposure(double v, const ExposureKind& kind) {
  if (kind.is_integer()) return std::to_string(static_cast<long long>(v));
  return format_double(v);
}

}  // namespace

void write_dataset(std::ostream& out, const Dataset& ds) {
  const auto& nm = ds.names();
  out << nm.outcome << ',' << nm.a1 << ',' << nm.a2;
  for (const auto& c : nm.covariates) out << ',' << c;
  if (ds.has_weights()) out << ',' << *nm.weight;
  out << '\n';
  for (std::size_t i = 0; i < ds.n(); ++i) {
    out << ds.d()[i] << ',' << format_exposure(ds.a1()[i], ds.a1_kind()) << ','
        << format_exposure(ds.a2()[i], ds.a2_kind());
    for (Eigen::Index j = 0; j < ds.x().cols(); ++j)
      out << ',' << format_double(ds.x()(static_cast<Eigen::Index>(i), j));
    if (ds.has_weights()) out << ',' << format_double(ds.weight(i));
    out << '\n';
  }
}

void save_dataset(const std::string& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write data file '" + path + "'");
  write_dataset(out, ds);
}

namespace {

ExposureSummary summarize_exposure(const Dataset& ds, const std::vector<double>& a, const ExposureKind& kind,
                                   const std::string& name) {
  ExposureSummary s;
  s.name = name;
  s.kind = kind;
  double sum[2] = {0, 0}, sq[2] = {0, 0};
  std::size_t cnt[2] = {0, 0};
  for (std::size_t i = 0; i < ds.n(); ++i) {
    const int d = ds.d()[i];
    sum[d] += a[i];
    sq[d] += a[i] * a[i];
    ++cnt[d];
    if (kind.is_integer()) {
      auto& table = d ? s.case_levels : s.control_levels;
      ++table[static_cast<long>(a[i])];
    }
  }
  auto moments = [&](int d, double& mean, double& sd) {
    if (cnt[d] == 0) return;
    mean = sum[d] / static_cast<double>(cnt[d]);
    sd = cnt[d] > 1 ? std::sqrt(std::max(0.0, (sq[d] - cnt[d] * mean * mean) / (cnt[d] - 1.0))) : 0.0;
  };
  moments(0, s.control_mean, s.control_sd);
  moments(1, s.case_mean, s.case_sd);
  return s;
}

}  // namespace

DatasetSummary summarize(const Dataset& ds) {
  DatasetSummary s;
  s.n = ds.n();
  s.cases = ds.n_cases();
  s.controls = ds.n_controls();
  s.weighted = ds.has_weights();
  if (s.cases == 0) s.problems.push_back("no cases: dataset unusable for testing");
  if (s.controls == 0) s.problems.push_back("no controls: dataset unusable for testing");
  s.usable = s.problems.empty();
  s.a1 = summarize_exposure(ds, ds.a1(), ds.a1_kind(), ds.names().a1);
  s.a2 = summarize_exposure(ds, ds.a2(), ds.a2_kind(), ds.names().a2);
  return s;
}

void print_summary(std::ostream& out, const DatasetSummary& s) {
  out << "records   " << s.n << (s.weighted ? " (weighted)" : "") << '\n';
  out << "cases     " << s.cases << '\n';
  out << "controls  " << s.controls << '\n';
  for (const auto& p : s.problems) out << "WARNING   " << p << '\n';
  for (const auto* e : {&s.a1, &s.a2}) {
    out << '\n' << e->name << " [" << e->kind.to_string() << "]\n";
    out << std::fixed << std::setprecision(4);
    out << "  controls mean " << e->control_mean << " sd " << e->control_sd << '\n';
    out << "  cases    mean " << e->case_mean << " sd " << e->case_sd << '\n';
    out.unsetf(std::ios::floatfield);
    if (e->kind.is_integer()) {
      out << "  level  controls  cases\n";
      std::map<long, std::pair<std::size_t, std::size_t>> merged;
      for (auto [lvl, c] : e->control_levels) merged[lvl].first = c;
      for (auto [lvl, c] : e->case_levels) merged[lvl].second = c;
      for (auto [lvl, c] : merged)
        out << "  " << std::setw(5) << lvl << "  " << std::setw(8) << c.first << "  " << std::setw(5) << c.second
            << '\n';
    }
  }
}

}  // namespace addgxe
