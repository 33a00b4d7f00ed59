#include "binfair/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

#include "binfair/errors.hpp"

namespace binfair {

namespace {

int metadata_count(const Dataset& ds, const char* key) {
  const auto it = ds.metadata.find(key);
  if (it == ds.metadata.end()) return 0;
  try {
    return std::stoi(it->second);
  } catch (const std::exception&) {
    return 0;
  }
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// RFC-4180 style: quoted fields may contain the delimiter and "" escapes.
std::vector<std::string> split_csv_line(const std::string& line, char delim) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
      was_quoted = true;
    } else if (c == delim) {
      fields.push_back(was_quoted ? cur : trim(cur));
      cur.clear();
      was_quoted = false;
    } else {
      cur += c;
    }
  }
  fields.push_back(was_quoted ? cur : trim(cur));
  return fields;
}

bool is_missing(const std::string& s) {
  return s.empty() || s == "NA" || s == "?" || s == "nan" || s == "NaN" || s == "null";
}

std::optional<double> parse_number(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) return std::nullopt;
  return v;
}

// Integer codes for distinct string values: numeric order when every value
// is a number, lexicographic otherwise.
std::map<std::string, int> code_values(const std::vector<std::string>& values) {
  std::vector<std::string> distinct(values);
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  const bool numeric = std::all_of(distinct.begin(), distinct.end(), [](const std::string& v) { return parse_number(v).has_value(); });
  if (numeric)
    std::stable_sort(distinct.begin(), distinct.end(),
                     [](const std::string& a, const std::string& b) { return *parse_number(a) < *parse_number(b); });
  std::map<std::string, int> codes;
  for (std::size_t i = 0; i < distinct.size(); ++i) codes.emplace(distinct[i], static_cast<int>(i));
  return codes;
}

std::string describe_codes(const std::map<std::string, int>& codes) {
  std::vector<std::pair<int, std::string>> ordered;
  for (const auto& [k, v] : codes) ordered.emplace_back(v, k);
  std::sort(ordered.begin(), ordered.end());
  std::string out;
  for (const auto& [v, k] : ordered) {
    if (!out.empty()) out += ';';
    out += std::to_string(v) + '=' + k;
  }
  return out;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

int Dataset::num_classes() const {
  int hi = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  return std::max(hi, metadata_count(*this, "classes"));
}

int Dataset::num_groups() const {
  int hi = groups.empty() ? 0 : *std::max_element(groups.begin(), groups.end()) + 1;
  return std::max(hi, metadata_count(*this, "groups"));
}

void Dataset::validate() const {
  const std::size_t n = labels.size();
  if (n == 0) throw DataError("dataset is empty");
  if (groups.size() != n || static_cast<std::size_t>(features.rows()) != n)
    throw DataError("features, labels and groups disagree on the number of rows");
  if (!feature_names.empty() && feature_names.size() != dim()) throw DataError("feature name count mismatch");
  if (!numeric_mask.empty() && numeric_mask.size() != dim()) throw DataError("numeric mask size mismatch");
  if (!features.allFinite()) throw DataError("dataset contains non-finite features");
  auto check_codes = [](const std::vector<int>& codes, const char* what) {
    std::set<int> seen(codes.begin(), codes.end());
    if (*seen.begin() < 0) throw DataError(std::string(what) + " codes must be non-negative");
    if (static_cast<int>(seen.size()) != *seen.rbegin() + 1)
      throw DataError(std::string("some ") + what + " in 0.." + std::to_string(*seen.rbegin()) + " has no rows");
  };
  check_codes(labels, "class");
  check_codes(groups, "group");
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
  out.labels.reserve(rows.size());
  out.groups.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= size()) throw ContractViolation("subset row index out of range");
    out.features.row(static_cast<Eigen::Index>(i)) = features.row(static_cast<Eigen::Index>(rows[i]));
    out.labels.push_back(labels[rows[i]]);
    out.groups.push_back(groups[rows[i]]);
  }
  out.feature_names = feature_names;
  out.numeric_mask = numeric_mask;
  out.metadata = metadata;
  out.metadata["classes"] = std::to_string(num_classes());
  out.metadata["groups"] = std::to_string(num_groups());
  return out;
}

CsvSchema compas_schema() {
  CsvSchema s;
  s.label_column = "two_year_recid";
  s.group_column = "race";
  s.categorical_columns = {"sex", "age_cat", "c_charge_degree"};
  s.feature_columns = {"sex", "age", "age_cat", "juv_fel_count", "juv_misd_count", "juv_other_count", "priors_count",
                       "c_charge_degree"};
  return s;
}

CsvSchema adult_schema() {
  CsvSchema s;
  s.label_column = "income";
  s.group_column = "sex";
  s.categorical_columns = {"workclass", "education", "marital-status", "occupation", "relationship", "race",
                           "native-country"};
  s.feature_columns = {"age",          "workclass",    "fnlwgt",       "education",      "education-num",
                       "marital-status", "occupation", "relationship", "race",           "capital-gain",
                       "capital-loss", "hours-per-week", "native-country"};
  return s;
}

CsvSchema bank_schema() {
  CsvSchema s;
  s.label_column = "y";
  s.group_column = "age";
  s.group_inside_range = std::pair{25.0, 65.0};
  s.categorical_columns = {"job", "marital", "education", "default", "housing", "loan", "contact", "month", "poutcome"};
  s.feature_columns = {"job",     "marital", "education", "default",  "balance", "housing", "loan",
                       "contact", "day",     "month",     "duration", "campaign", "pdays",  "previous",
                       "poutcome"};
  s.delimiter = ';';
  return s;
}

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return load_csv(in, schema, path.string());
}

Dataset load_csv(std::istream& in, const CsvSchema& schema, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw DataError(source + ": missing header row");
  const auto header = split_csv_line(line, schema.delimiter);
  auto column_index = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError(source + ": column '" + name + "' not found");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t label_col = column_index(schema.label_column);
  const std::size_t group_col = column_index(schema.group_column);
  std::set<std::size_t> categorical;
  for (const auto& c : schema.categorical_columns) categorical.insert(column_index(c));

  std::vector<std::size_t> feature_cols;
  if (schema.feature_columns.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c)
      if (c != label_col && c != group_col) feature_cols.push_back(c);
  } else {
    for (const auto& c : schema.feature_columns) feature_cols.push_back(column_index(c));
    std::sort(feature_cols.begin(), feature_cols.end());
  }

  std::vector<std::vector<std::string>> rows;
  std::size_t dropped = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line, schema.delimiter);
    if (fields.size() != header.size())
      throw DataError(source + ": row " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                      " fields, header has " + std::to_string(header.size()));
    if (is_missing(fields[label_col]) || is_missing(fields[group_col])) {
      ++dropped;
      continue;
    }
    rows.push_back(std::move(fields));
  }
  if (rows.empty()) throw DataError(source + ": no usable rows");
  const std::size_t n = rows.size();

  std::vector<std::string> warnings;
  std::vector<Vector> columns;
  std::vector<std::string> names;
  std::vector<bool> numeric_mask;
  for (std::size_t c : feature_cols) {
    if (categorical.count(c)) {
      std::set<std::string> levels;
      for (const auto& r : rows) levels.insert(r[c]);
      for (const auto& level : levels) {
        Vector col(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) col(static_cast<Eigen::Index>(i)) = rows[i][c] == level ? 1.0 : 0.0;
        columns.push_back(std::move(col));
        names.push_back(header[c] + "=" + level);
        numeric_mask.push_back(false);
      }
      continue;
    }
    Vector col(static_cast<Eigen::Index>(n));
    std::vector<double> observed;
    std::vector<std::size_t> missing;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& cell = rows[i][c];
      if (is_missing(cell)) {
        missing.push_back(i);
        continue;
      }
      const auto v = parse_number(cell);
      if (!v)
        throw DataError(source + ": data row " + std::to_string(i + 1) + ", column '" + header[c] +
                        "': cannot parse '" + cell + "' as a number");
      col(static_cast<Eigen::Index>(i)) = *v;
      observed.push_back(*v);
    }
    if (observed.empty()) {
      warnings.push_back("column '" + header[c] + "' has no values; skipped");
      continue;
    }
    const double fill = median(observed);
    for (std::size_t i : missing) col(static_cast<Eigen::Index>(i)) = fill;
    if (col.maxCoeff() == col.minCoeff()) {
      warnings.push_back("column '" + header[c] + "' is constant; skipped");
      continue;
    }
    columns.push_back(std::move(col));
    names.push_back(header[c]);
    numeric_mask.push_back(true);
  }
  if (columns.empty()) throw DataError(source + ": no usable feature columns");

  Dataset ds;
  ds.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) ds.features.col(static_cast<Eigen::Index>(j)) = columns[j];
  ds.feature_names = std::move(names);
  ds.numeric_mask = std::move(numeric_mask);

  std::vector<std::string> label_values;
  for (const auto& r : rows) label_values.push_back(r[label_col]);
  const auto label_codes = code_values(label_values);
  for (const auto& v : label_values) ds.labels.push_back(label_codes.at(v));

  if (schema.group_inside_range) {
    const auto [lo, hi] = *schema.group_inside_range;
    for (std::size_t i = 0; i < n; ++i) {
      const auto v = parse_number(rows[i][group_col]);
      if (!v) throw DataError(source + ": data row " + std::to_string(i + 1) + ": group value is not numeric");
      ds.groups.push_back(*v >= lo && *v <= hi ? 0 : 1);
    }
    ds.metadata["group_codes"] = "0=inside;1=outside";
  } else {
    std::vector<std::string> group_values;
    for (const auto& r : rows) group_values.push_back(r[group_col]);
    const auto group_codes = code_values(group_values);
    for (const auto& v : group_values) ds.groups.push_back(group_codes.at(v));
    ds.metadata["group_codes"] = describe_codes(group_codes);
  }

  ds.metadata["source"] = source;
  ds.metadata["label_codes"] = describe_codes(label_codes);
  ds.metadata["rows_dropped"] = std::to_string(dropped);
  ds.metadata["classes"] = std::to_string(ds.num_classes());
  ds.metadata["groups"] = std::to_string(ds.num_groups());
  if (!warnings.empty()) {
    std::string joined;
    for (const auto& w : warnings) joined += (joined.empty() ? "" : "; ") + w;
    ds.metadata["warnings"] = joined;
  }

  if (schema.standardize) {
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    Standardizer::fit(ds, all).apply(ds);
    ds.metadata["standardized"] = "all-rows";
  }
  ds.validate();
  return ds;
}

Standardizer Standardizer::fit(const Dataset& ds, std::span<const std::size_t> rows) {
  if (rows.empty()) throw DataError("cannot fit a standardizer on zero rows");
  Standardizer s;
  const auto d = static_cast<Eigen::Index>(ds.dim());
  s.mask_ = ds.numeric_mask.empty() ? std::vector<bool>(ds.dim(), true) : ds.numeric_mask;
  s.mean_ = Vector::Zero(d);
  s.stddev_ = Vector::Ones(d);
  const auto n = static_cast<double>(rows.size());
  for (Eigen::Index j = 0; j < d; ++j) {
    if (!s.mask_[static_cast<std::size_t>(j)]) continue;
    double mean = 0.0;
    for (std::size_t r : rows) mean += ds.features(static_cast<Eigen::Index>(r), j);
    mean /= n;
    double var = 0.0;
    for (std::size_t r : rows) {
      const double e = ds.features(static_cast<Eigen::Index>(r), j) - mean;
      var += e * e;
    }
    var /= n;
    s.mean_(j) = mean;
    s.stddev_(j) = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  return s;
}

void Standardizer::apply(Dataset& ds) const {
  if (static_cast<Eigen::Index>(ds.dim()) != mean_.size()) throw ContractViolation("standardizer width mismatch");
  for (Eigen::Index j = 0; j < mean_.size(); ++j) {
    if (!mask_[static_cast<std::size_t>(j)]) continue;
    ds.features.col(j) = (ds.features.col(j).array() - mean_(j)) / stddev_(j);
  }
}

}  // namespace binfair
