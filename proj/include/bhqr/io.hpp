#ifndef BHQR_IO_HPP_
#define BHQR_IO_HPP_

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "bhqr/diagnostics.hpp"
#include "bhqr/error.hpp"
#include "bhqr/simulation.hpp"
#include "bhqr/two_part.hpp"

namespace bhqr {

// ---------------------------------------------------------------------------
// Number formatting

// 17 significant digits; round-trips every double.
inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// Short form for file names and labels ("0.85").
inline std::string format_level(double tau) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", tau);
  return buf;
}

// ---------------------------------------------------------------------------
// JSON output
//
// Ordered objects keep insertion order so output is byte-stable.

using Json = nlohmann::ordered_json;

template <class T>
Json optional_json(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

inline std::string json_text(const Json& j) { return j.dump(2) + "\n"; }

// Every parameter block has exactly {mean, sd, lower, upper, psrf, ess}.
inline Json parameter_block(const ParameterSummary& s) {
  Json out = Json::object();
  out["mean"] = s.mean;
  out["sd"] = s.sd;
  out["lower"] = s.lower;
  out["upper"] = s.upper;
  out["psrf"] = optional_json(s.psrf);
  out["ess"] = optional_json(s.ess);
  return out;
}

inline Json summary_json(const FitSummary& summary) {
  Json out = Json::object();
  for (const auto& s : summary) out[s.name] = parameter_block(s);
  return out;
}

inline Json chain_config_json(const ChainConfig& c) {
  Json out = Json::object();
  out["chains"] = c.chains;
  out["iterations"] = c.iterations;
  out["burn_in"] = c.burn_in;
  out["thinning"] = c.thinning;
  out["retained_per_chain"] = c.retained();
  out["seed"] = c.seed;
  return out;
}

// ---------------------------------------------------------------------------
// CSV input

// Splits one CSV record. Double-quoted fields may contain commas and "" escapes.
inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cell += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else {
      cell += ch;
    }
  }
  cells.push_back(std::move(cell));
  for (auto& c : cells) {
    const auto first = c.find_first_not_of(" \t\r");
    const auto last = c.find_last_not_of(" \t\r");
    c = first == std::string::npos ? std::string() : c.substr(first, last - first + 1);
  }
  return cells;
}

inline std::optional<double> parse_number(const std::string& cell) {
  if (cell.empty()) return std::nullopt;
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  if (*begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) return std::nullopt;
  return value;
}

enum class ColumnTransform { kNone, kLog };

inline ColumnTransform parse_transform(const std::string& name) {
  if (name == "log" || name == "ln") return ColumnTransform::kLog;
  if (name == "none" || name.empty()) return ColumnTransform::kNone;
  throw ConfigError("unknown column transform '" + name + "'");
}

struct CsvSchema {
  std::string count_column;
  std::vector<std::string> covariates;
  std::map<std::string, ColumnTransform> transforms;
};

// Counts plus named covariate columns, after transforms. Rows with missing or
// non-numeric cells are dropped and counted.
struct Dataset {
  std::vector<double> counts;
  std::vector<std::string> covariate_names;
  std::vector<std::string> transform_tags;
  Eigen::MatrixXd covariates;
  std::size_t rows_in = 0;
  std::size_t rows_rejected = 0;

  std::size_t rows_used() const { return counts.size(); }

  Eigen::Index column(const std::string& name) const {
    for (std::size_t j = 0; j < covariate_names.size(); ++j) {
      if (covariate_names[j] == name) return static_cast<Eigen::Index>(j);
    }
    throw Error("unknown covariate '" + name + "'");
  }
};

inline Dataset load_csv(std::istream& in, const CsvSchema& schema) {
  std::string line;
  if (!std::getline(in, line)) throw Error("input CSV is empty (a header row is required)");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // UTF-8 BOM
  const std::vector<std::string> header = split_csv_line(line);
  auto index_of = [&](const std::string& name) {
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (header[j] == name) return j;
    }
    throw Error("declared column '" + name + "' is missing from the CSV header");
  };
  for (const auto& [name, _] : schema.transforms) {
    if (std::find(schema.covariates.begin(), schema.covariates.end(), name) == schema.covariates.end()) {
      throw ConfigError("transform declared for '" + name + "', which is not a covariate");
    }
  }
  const std::size_t count_index = index_of(schema.count_column);
  std::vector<std::size_t> cov_index;
  Dataset data;
  for (const auto& name : schema.covariates) {
    cov_index.push_back(index_of(name));
    data.covariate_names.push_back(name);
    const auto t = schema.transforms.find(name);
    data.transform_tags.push_back(t != schema.transforms.end() && t->second == ColumnTransform::kLog ? "log" : "");
  }

  std::vector<std::vector<double>> rows;
  std::size_t row_number = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++row_number;
    const std::vector<std::string> cells = split_csv_line(line);
    auto cell = [&](std::size_t j) { return j < cells.size() ? cells[j] : std::string(); };
    const std::optional<double> count = parse_number(cell(count_index));
    std::vector<double> values;
    bool missing = !count.has_value();
    for (std::size_t j : cov_index) {
      const auto v = parse_number(cell(j));
      if (!v) {
        missing = true;
        break;
      }
      values.push_back(*v);
    }
    if (missing) {
      ++data.rows_rejected;
      continue;
    }
    if (*count < 0.0 || std::floor(*count) != *count) {
      std::ostringstream msg;
      msg << "row " << row_number << ": count column '" << schema.count_column
          << "' must be a nonnegative integer, got " << cell(count_index);
      throw Error(msg.str());
    }
    for (std::size_t k = 0; k < values.size(); ++k) {
      if (data.transform_tags[k] == "log") {
        if (!(values[k] > 0.0)) {
          std::ostringstream msg;
          msg << "row " << row_number << ": log transform of column '" << data.covariate_names[k]
              << "' needs a positive value, got " << cell(cov_index[k]);
          throw Error(msg.str());
        }
        values[k] = std::log(values[k]);
      }
    }
    data.counts.push_back(*count);
    rows.push_back(std::move(values));
  }
  data.rows_in = row_number;
  data.covariates.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cov_index.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      data.covariates(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return data;
}

inline Dataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open input file '" + path + "'");
  return load_csv(in, schema);
}

// Designs for both parts: an intercept column followed by the named columns.
inline HurdleDataset to_hurdle_dataset(const Dataset& data, const std::vector<std::string>& x_columns,
                                       const std::vector<std::string>& z_columns) {
  auto design = [&](const std::vector<std::string>& cols, std::vector<std::string>& names) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(data.rows_used()), static_cast<Eigen::Index>(cols.size() + 1));
    m.col(0).setOnes();
    names = {"intercept"};
    for (std::size_t j = 0; j < cols.size(); ++j) {
      m.col(static_cast<Eigen::Index>(j + 1)) = data.covariates.col(data.column(cols[j]));
      names.push_back(cols[j]);
    }
    return m;
  };
  HurdleDataset out;
  out.counts = data.counts;
  out.x = design(x_columns, out.x_names);
  out.z = design(z_columns, out.z_names);
  return out;
}

// ---------------------------------------------------------------------------
// CSV output

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// Wide draws table: chain, draw, then one column per parameter.
inline void write_draws_csv(std::ostream& os, const PosteriorDraws& draws) {
  os << "chain,draw";
  for (const auto& name : draws.parameter_names) os << ',' << csv_escape(name);
  os << '\n';
  for (std::size_t c = 0; c < draws.chains.size(); ++c) {
    const auto& m = draws.chains[c];
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      os << c << ',' << r;
      for (Eigen::Index j = 0; j < m.cols(); ++j) os << ',' << format_number(m(r, j));
      os << '\n';
    }
  }
}

// Reads the table written by write_draws_csv.
inline PosteriorDraws read_draws_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error("draws file is empty");
  const auto header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "chain" || header[1] != "draw") {
    throw Error("draws file must start with columns chain,draw");
  }
  PosteriorDraws draws;
  draws.parameter_names.assign(header.begin() + 2, header.end());
  std::vector<std::vector<std::vector<double>>> by_chain;
  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) throw Error("draws file line " + std::to_string(line_number) + " is ragged");
    const auto chain = parse_number(cells[0]);
    if (!chain || *chain < 0 || std::floor(*chain) != *chain) {
      throw Error("draws file line " + std::to_string(line_number) + ": bad chain index");
    }
    const auto c = static_cast<std::size_t>(*chain);
    if (by_chain.size() <= c) by_chain.resize(c + 1);
    std::vector<double> row;
    for (std::size_t j = 2; j < cells.size(); ++j) {
      const auto v = parse_number(cells[j]);
      if (!v) throw Error("draws file line " + std::to_string(line_number) + ": non-numeric value");
      row.push_back(*v);
    }
    by_chain[c].push_back(std::move(row));
  }
  for (const auto& rows : by_chain) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(draws.parameter_names.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (std::size_t j = 0; j < rows[r].size(); ++j) {
        m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = rows[r][j];
      }
    }
    draws.chains.push_back(std::move(m));
  }
  if (draws.chains.empty()) throw Error("draws file holds no draws");
  return draws;
}

inline void write_jitter_audit_csv(std::ostream& os, const std::vector<JitteredValue>& audit) {
  os << "row,value,u,y_star\n";
  for (std::size_t i = 0; i < audit.size(); ++i) {
    os << i << ',' << format_number(audit[i].source) << ',' << (audit[i].u ? format_number(*audit[i].u) : "")
       << ',' << format_number(audit[i].y_star) << '\n';
  }
}

inline void write_simulation_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
  os << "replication,model,n,tau_requested,tau_effective,metric,parameter,value\n";
  for (const auto& r : rows) {
    os << r.replication << ',' << r.model << ',' << r.n << ',' << format_number(r.tau_requested) << ','
       << format_number(r.tau_effective) << ',' << r.metric << ',' << csv_escape(r.parameter) << ',';
    if (std::holds_alternative<std::uint64_t>(r.value)) {
      os << std::get<std::uint64_t>(r.value);
    } else {
      os << format_number(std::get<double>(r.value));
    }
    os << '\n';
  }
}

}  // namespace bhqr

#endif  // BHQR_IO_HPP_
