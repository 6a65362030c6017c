#include "exactmatch/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "exactmatch/errors.hpp"

namespace exactmatch {

const char* to_string(CovariateKind kind) {
  switch (kind) {
    case CovariateKind::Continuous:
      return "continuous";
    case CovariateKind::Binary:
      return "binary";
    case CovariateKind::Categorical:
      return "categorical";
  }
  return "?";
}

CovariateKind parse_kind(const std::string& text) {
  if (text == "continuous" || text == "numeric") return CovariateKind::Continuous;
  if (text == "binary") return CovariateKind::Binary;
  if (text == "categorical" || text == "factor") return CovariateKind::Categorical;
  throw SchemaError("unknown covariate kind '" + text + "'");
}

CovariateSchema::CovariateSchema(std::vector<Covariate> covariates) : covariates_(std::move(covariates)) {
  std::set<std::string> names;
  for (const auto& c : covariates_) {
    if (c.name.empty()) throw SchemaError("covariate with empty name");
    if (!names.insert(c.name).second) throw SchemaError("duplicate covariate '" + c.name + "'");
    std::set<std::string> levels(c.levels.begin(), c.levels.end());
    if (levels.size() != c.levels.size()) throw SchemaError("covariate '" + c.name + "' has duplicate levels");
    if (c.kind == CovariateKind::Categorical && c.levels.empty()) {
      throw SchemaError("categorical covariate '" + c.name + "' has no levels declared");
    }
    if (c.kind == CovariateKind::Binary && !c.levels.empty() && c.levels.size() != 2) {
      throw SchemaError("binary covariate '" + c.name + "' must declare exactly two levels or none");
    }
    if (c.kind == CovariateKind::Continuous && !c.levels.empty()) {
      throw SchemaError("continuous covariate '" + c.name + "' cannot declare levels");
    }
  }
}

std::optional<std::size_t> CovariateSchema::find(const std::string& name) const {
  for (std::size_t i = 0; i < covariates_.size(); ++i)
    if (covariates_[i].name == name) return i;
  return std::nullopt;
}

SchemaDirectives parse_schema_json(const std::string& text) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("schema JSON does not parse: ") + e.what());
  }
  if (!j.is_object() || !j.contains("covariates") || !j["covariates"].is_array()) {
    throw SchemaError("schema JSON needs a 'covariates' array");
  }
  std::vector<Covariate> covs;
  for (const auto& item : j["covariates"]) {
    if (!item.contains("name") || !item["name"].is_string()) throw SchemaError("covariate entry without 'name'");
    Covariate c;
    c.name = item["name"].get<std::string>();
    if (!item.contains("kind")) throw SchemaError("covariate '" + c.name + "' has no 'kind'");
    c.kind = parse_kind(item["kind"].get<std::string>());
    if (item.contains("levels")) {
      for (const auto& l : item["levels"]) c.levels.push_back(l.is_string() ? l.get<std::string>() : l.dump());
    }
    covs.push_back(std::move(c));
  }
  SchemaDirectives d;
  d.schema = CovariateSchema(std::move(covs));
  if (!j.contains("study_col") || !j["study_col"].is_string()) throw SchemaError("schema JSON needs 'study_col'");
  d.study_col = j["study_col"].get<std::string>();
  auto label = [&](const char* key) -> std::optional<std::string> {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return j[key].is_string() ? j[key].get<std::string>() : j[key].dump();
  };
  d.study0 = label("study0");
  d.study1 = label("study1");
  d.response_col = label("response_col");
  return d;
}

SchemaDirectives read_schema_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open schema file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_schema_json(ss.str());
}

CovariateTable::CovariateTable(CovariateSchema schema, std::vector<int> study, Matrix values,
                               std::optional<Vector> response, std::array<std::string, 2> study_labels)
    : schema_(std::move(schema)),
      study_(std::move(study)),
      values_(std::move(values)),
      response_(std::move(response)),
      study_labels_(std::move(study_labels)) {
  if (values_.rows() != study_.size() || values_.cols() != schema_.size()) {
    throw DimensionMismatch("CovariateTable: values must be rows × covariates");
  }
  if (response_ && response_->size() != study_.size()) {
    throw DimensionMismatch("CovariateTable: response length differs from row count");
  }
  for (int s : study_)
    if (s != 0 && s != 1) throw SchemaError("study indicator must be 0 or 1");
  if (count(0) == 0 || count(1) == 0) throw SingleStudy("both studies must contain at least one row");
  for (std::size_t r = 0; r < rows(); ++r) {
    for (std::size_t c = 0; c < schema_.size(); ++c) {
      const double v = values_(r, c);
      if (!std::isfinite(v)) throw MissingValue(r + 1, schema_[c].name);
      const auto& cov = schema_[c];
      if (cov.kind == CovariateKind::Binary && v != 0.0 && v != 1.0) {
        throw UnknownLevel(r + 1, cov.name, std::to_string(v));
      }
      if (cov.kind == CovariateKind::Categorical &&
          (v < 0.0 || v >= static_cast<double>(cov.levels.size()) || v != std::floor(v))) {
        throw UnknownLevel(r + 1, cov.name, std::to_string(v));
      }
    }
    if (response_ && !std::isfinite((*response_)[r])) throw MissingValue(r + 1, "response");
  }
}

std::size_t CovariateTable::count(int study) const {
  return static_cast<std::size_t>(std::count(study_.begin(), study_.end(), study));
}

std::vector<std::size_t> CovariateTable::rows_of(int study) const {
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < study_.size(); ++r)
    if (study_[r] == study) out.push_back(r);
  return out;
}

namespace {

std::vector<std::vector<std::string>> parse_csv_records(std::istream& in) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  char ch;
  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    if (!(record.size() == 1 && record[0].empty())) records.push_back(std::move(record));
    record.clear();
  };
  while (in.get(ch)) {
    if (in_quotes) {
      if (ch == '"') {
        if (in.peek() == '"') {
          in.get(ch);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(ch);
      }
      continue;
    }
    switch (ch) {
      case '"':
        if (field_started && !field.empty()) throw CsvError("stray quote inside unquoted field");
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        break;
      default:
        field.push_back(ch);
        field_started = true;
    }
  }
  if (in_quotes) throw CsvError("unterminated quoted field");
  if (!field.empty() || !record.empty()) end_record();
  return records;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::optional<double> parse_double(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace

CovariateTable read_csv(std::istream& in, const SchemaDirectives& directives) {
  auto records = parse_csv_records(in);
  if (records.empty()) throw CsvError("CSV has no header row");
  std::vector<std::string> header;
  for (const auto& h : records[0]) header.push_back(trim(h));
  if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0] = header[0].substr(3);

  auto column_of = [&](const std::string& name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw SchemaError("column '" + name + "' not found in CSV header");
    return static_cast<std::size_t>(it - header.begin());
  };

  const auto& schema = directives.schema;
  if (schema.size() == 0) throw SchemaError("schema declares no covariates");
  const std::size_t study_idx = column_of(directives.study_col);
  std::vector<std::size_t> cov_idx;
  for (const auto& c : schema.covariates()) cov_idx.push_back(column_of(c.name));
  std::optional<std::size_t> resp_idx;
  if (directives.response_col) resp_idx = column_of(*directives.response_col);

  const std::size_t nrows = records.size() - 1;
  std::vector<int> study(nrows);
  Matrix values(nrows, schema.size());
  std::optional<Vector> response;
  if (resp_idx) response.emplace(nrows);

  std::array<std::string, 2> labels;
  std::size_t labels_seen = 0;
  if (directives.study0) labels[0] = *directives.study0, ++labels_seen;
  if (directives.study1) labels[1] = *directives.study1, ++labels_seen;
  if (directives.study0.has_value() != directives.study1.has_value()) {
    throw SchemaError("study0 and study1 must be given together");
  }
  const bool fixed_labels = labels_seen == 2;
  if (fixed_labels && labels[0] == labels[1]) throw SchemaError("study0 and study1 labels are identical");

  for (std::size_t r = 0; r < nrows; ++r) {
    const auto& rec = records[r + 1];
    const std::size_t row_no = r + 1;
    if (rec.size() != header.size()) {
      throw CsvError("row " + std::to_string(row_no) + " has " + std::to_string(rec.size()) + " fields, header has " +
                     std::to_string(header.size()));
    }
    auto cell = [&](std::size_t idx, const std::string& col) {
      std::string v = trim(rec[idx]);
      if (v.empty() || v == "NA") throw MissingValue(row_no, col);
      return v;
    };

    const std::string label = cell(study_idx, directives.study_col);
    if (fixed_labels) {
      if (label == labels[0]) {
        study[r] = 0;
      } else if (label == labels[1]) {
        study[r] = 1;
      } else {
        throw UnknownLevel(row_no, directives.study_col, label);
      }
    } else {
      if (labels_seen == 0) {
        labels[0] = label;
        labels_seen = 1;
      }
      if (label == labels[0]) {
        study[r] = 0;
      } else if (labels_seen == 1) {
        labels[1] = label;
        labels_seen = 2;
        study[r] = 1;
      } else if (label == labels[1]) {
        study[r] = 1;
      } else {
        throw UnknownLevel(row_no, directives.study_col, label);
      }
    }

    for (std::size_t c = 0; c < schema.size(); ++c) {
      const auto& cov = schema[c];
      const std::string v = cell(cov_idx[c], cov.name);
      switch (cov.kind) {
        case CovariateKind::Continuous: {
          auto d = parse_double(v);
          if (!d) {
            throw SchemaError("non-numeric value '" + v + "' at row " + std::to_string(row_no) + " in column '" +
                              cov.name + "'; declare it categorical with its levels");
          }
          values(r, c) = *d;
          break;
        }
        case CovariateKind::Binary: {
          if (cov.levels.empty()) {
            auto d = parse_double(v);
            if (!d || (*d != 0.0 && *d != 1.0)) throw UnknownLevel(row_no, cov.name, v);
            values(r, c) = *d;
          } else {
            auto it = std::find(cov.levels.begin(), cov.levels.end(), v);
            if (it == cov.levels.end()) throw UnknownLevel(row_no, cov.name, v);
            values(r, c) = static_cast<double>(it - cov.levels.begin());
          }
          break;
        }
        case CovariateKind::Categorical: {
          auto it = std::find(cov.levels.begin(), cov.levels.end(), v);
          if (it == cov.levels.end()) throw UnknownLevel(row_no, cov.name, v);
          values(r, c) = static_cast<double>(it - cov.levels.begin());
          break;
        }
      }
    }
    if (resp_idx) {
      const std::string v = cell(*resp_idx, *directives.response_col);
      auto d = parse_double(v);
      if (!d) throw SchemaError("non-numeric response '" + v + "' at row " + std::to_string(row_no));
      (*response)[r] = *d;
    }
  }
  if (labels_seen < 2 || std::count(study.begin(), study.end(), 1) == 0 ||
      std::count(study.begin(), study.end(), 0) == 0) {
    throw SingleStudy("study column '" + directives.study_col + "' does not contain two populated studies");
  }
  return CovariateTable(schema, std::move(study), std::move(values), std::move(response), labels);
}

std::vector<std::string> read_csv_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CsvError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  std::istringstream first(line);
  auto records = parse_csv_records(first);
  if (records.empty()) throw CsvError("CSV has no header row");
  std::vector<std::string> header;
  for (const auto& h : records[0]) header.push_back(trim(h));
  if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0] = header[0].substr(3);
  return header;
}

CovariateTable read_csv(const std::filesystem::path& path, const SchemaDirectives& directives) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CsvError("cannot open " + path.string());
  return read_csv(in, directives);
}

DesignMatrix DesignMatrix::select(const std::vector<std::size_t>& columns) const {
  DesignMatrix out;
  out.x0 = Matrix(n0(), columns.size());
  out.x1 = Matrix(n1(), columns.size());
  for (std::size_t k = 0; k < columns.size(); ++k) {
    const std::size_t c = columns.at(k);
    if (c >= cols()) throw DimensionMismatch("DesignMatrix::select: column out of range");
    for (std::size_t i = 0; i < n0(); ++i) out.x0(i, k) = x0(i, c);
    for (std::size_t i = 0; i < n1(); ++i) out.x1(i, k) = x1(i, c);
    out.column_names.push_back(column_names[c]);
    out.column_origin.push_back(column_origin[c]);
  }
  out.rows0 = rows0;
  out.rows1 = rows1;
  return out;
}

DesignMatrix encode(const CovariateTable& table) {
  const auto& schema = table.schema();
  DesignMatrix dm;
  for (std::size_t c = 0; c < schema.size(); ++c) {
    const auto& cov = schema[c];
    if (cov.kind == CovariateKind::Categorical) {
      for (std::size_t l = 0; l < cov.levels.size(); ++l) {
        dm.column_names.push_back(cov.name + "=" + cov.levels[l]);
        dm.column_origin.push_back({c, l});
      }
    } else {
      dm.column_names.push_back(cov.name);
      dm.column_origin.push_back({c, std::nullopt});
    }
  }
  dm.rows0 = table.rows_of(0);
  dm.rows1 = table.rows_of(1);
  auto fill = [&](const std::vector<std::size_t>& rows) {
    Matrix x(rows.size(), dm.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t k = 0; k < dm.cols(); ++k) {
        const auto& origin = dm.column_origin[k];
        const double v = table.values()(rows[i], origin.covariate);
        x(i, k) = origin.level ? (static_cast<std::size_t>(v) == *origin.level ? 1.0 : 0.0) : v;
      }
    }
    return x;
  };
  dm.x0 = fill(dm.rows0);
  dm.x1 = fill(dm.rows1);
  return dm;
}

std::array<Vector, 2> observed_means(const DesignMatrix& dm) {
  std::array<Vector, 2> out;
  const Matrix* xs[2] = {&dm.x0, &dm.x1};
  for (int s = 0; s < 2; ++s) {
    const Matrix& x = *xs[s];
    Vector m(dm.cols(), 0.0);
    for (std::size_t i = 0; i < x.rows(); ++i)
      for (std::size_t k = 0; k < x.cols(); ++k) m[k] += x(i, k);
    for (double& v : m) v /= static_cast<double>(x.rows());
    out[s] = std::move(m);
  }
  return out;
}

std::array<Vector, 2> observed_means(const CovariateTable& table) { return observed_means(encode(table)); }

Vector pooled_means(std::span<const double> mean0, std::span<const double> mean1, std::size_t n0, std::size_t n1) {
  if (mean0.size() != mean1.size()) throw DimensionMismatch("pooled_means: mean vectors differ in length");
  const double total = static_cast<double>(n0 + n1);
  Vector out(mean0.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = (static_cast<double>(n0) * mean0[k] + static_cast<double>(n1) * mean1[k]) / total;
  }
  return out;
}

}  // namespace exactmatch
