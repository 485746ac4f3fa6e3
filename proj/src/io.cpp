// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.

#include "heavytail/io.hpp"

#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "heavytail/errors.hpp"
#include "heavytail/rng.hpp"

namespace heavytail {
namespace {

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

// A parsed right-hand side; kind mirrors the TOML subset we accept.
struct TomlValue {
  enum class Kind { string, number, boolean, array } kind;
  std::string str;
  double num = 0.0;
  bool flag = false;
  std::vector<double> array;
};

double parse_number(const std::string& text, const std::string& where) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size() || errno == ERANGE)
    throw config_error(where + ": not a number: '" + text + "'");
  return v;
}

TomlValue parse_value(const std::string& text, const std::string& where) {
  TomlValue v{TomlValue::Kind::number, {}, 0.0, false, {}};
  if (text.empty()) throw config_error(where + ": missing value");
  if (text.front() == '"') {
    if (text.size() < 2 || text.back() != '"')
      throw config_error(where + ": unterminated string");
    v.kind = TomlValue::Kind::string;
    v.str = text.substr(1, text.size() - 2);
    return v;
  }
  if (text == "true" || text == "false") {
    v.kind = TomlValue::Kind::boolean;
    v.flag = text == "true";
    return v;
  }
  if (text.front() == '[') {
    if (text.back() != ']')
      throw config_error(where + ": unterminated array");
    v.kind = TomlValue::Kind::array;
    const std::string inner = trim(text.substr(1, text.size() - 2));
    if (inner.empty()) return v;
    std::size_t start = 0;
    while (start <= inner.size()) {
      const std::size_t comma = inner.find(',', start);
      const std::string item =
          trim(comma == std::string::npos ? inner.substr(start)
                                          : inner.substr(start, comma - start));
      if (item.empty()) throw config_error(where + ": empty array element");
      v.array.push_back(parse_number(item, where));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    return v;
  }
  v.num = parse_number(text, where);
  return v;
}

double expect_number(const TomlValue& v, const std::string& where) {
  if (v.kind != TomlValue::Kind::number)
    throw config_error(where + ": expected a number");
  return v.num;
}

std::uint64_t expect_integer(const TomlValue& v, const std::string& where) {
  const double d = expect_number(v, where);
  if (!(d >= 0.0) || d != std::floor(d) || d > 1.8446744073709552e19)
    throw config_error(where + ": expected a nonnegative integer");
  return static_cast<std::uint64_t>(d);
}

std::string expect_string(const TomlValue& v, const std::string& where) {
  if (v.kind != TomlValue::Kind::string)
    throw config_error(where + ": expected a quoted string");
  return v.str;
}

std::vector<double> expect_array(const TomlValue& v, const std::string& where) {
  if (v.kind != TomlValue::Kind::array)
    throw config_error(where + ": expected an array");
  return v.array;
}

// Strip a # comment that is not inside a quoted string.
std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

}  // namespace

const char* experiment_name(Experiment e) {
  switch (e) {
    case Experiment::simulate: return "simulate";
    case Experiment::excursions: return "excursions";
    case Experiment::tails: return "tails";
    case Experiment::instanton: return "instanton";
    case Experiment::validate: return "validate";
    case Experiment::report: return "report";
  }
  return "simulate";
}

Experiment experiment_from_name(const std::string& name) {
  for (const Experiment e :
       {Experiment::simulate, Experiment::excursions, Experiment::tails,
        Experiment::instanton, Experiment::validate, Experiment::report}) {
    if (name == experiment_name(e)) return e;
  }
  throw config_error("unknown experiment '" + name + "'");
}

void RunConfig::validate() const {
  try {
    model.validate();
  } catch (const error& err) {
    throw config_error(std::string("model: ") + err.what());
  }
  if (n_samples == 0) throw config_error("budgets.n_samples must be positive");
  if (horizons.empty())
    throw config_error("budgets.horizons must not be empty");
  for (const double T : horizons)
    if (!(T > 0.0) || !std::isfinite(T))
      throw config_error("budgets.horizons must all be positive");
  if (instanton_horizons.empty())
    throw config_error("budgets.instanton_horizons must not be empty");
  for (const double H : instanton_horizons)
    if (!(H > 0.0) || !std::isfinite(H))
      throw config_error("budgets.instanton_horizons must all be positive");
  if (!std::isfinite(dt))
    throw config_error("budgets.dt must be finite");
  if (!(eps0 > 0.0) || !std::isfinite(eps0))
    throw config_error("budgets.eps0 must be positive");
  if (!std::isfinite(threshold_x))
    throw config_error("budgets.threshold_x must be finite");
  if (!(tolerance_scale > 0.0) || !std::isfinite(tolerance_scale))
    throw config_error("validate.tolerance_scale must be positive");
  for (const int c : criteria)
    if (c < 1 || c > 11)
      throw config_error("validate.criteria entries must be in 1..11");
  if (output_dir.empty()) throw config_error("output_dir must not be empty");
}

std::uint64_t RunConfig::sub_seed(std::string_view purpose) const {
  return rng::derive_seed(master_seed, fnv1a(purpose));
}

RunConfig parse_run_config(const std::string& toml_text) {
  RunConfig cfg;
  std::string section;
  std::istringstream in(toml_text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']')
        throw config_error(where + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "model" && section != "budgets" && section != "validate")
        throw config_error(where + ": unknown section [" + section + "]");
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw config_error(where + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const TomlValue value = parse_value(trim(line.substr(eq + 1)), where);
    const std::string qual = section.empty() ? key : section + "." + key;

    if (section.empty()) {
      if (key == "experiment")
        cfg.experiment = experiment_from_name(expect_string(value, where));
      else if (key == "master_seed")
        cfg.master_seed = expect_integer(value, where);
      else if (key == "output_dir")
        cfg.output_dir = expect_string(value, where);
      else
        throw config_error(where + ": unknown key '" + qual + "'");
    } else if (section == "model") {
      if (key == "gamma")
        cfg.model.gamma = expect_number(value, where);
      else if (key == "p")
        cfg.model.p = expect_number(value, where);
      else
        throw config_error(where + ": unknown key '" + qual + "'");
    } else if (section == "budgets") {
      if (key == "n_samples")
        cfg.n_samples = expect_integer(value, where);
      else if (key == "horizons")
        cfg.horizons = expect_array(value, where);
      else if (key == "instanton_horizons")
        cfg.instanton_horizons = expect_array(value, where);
      else if (key == "dt")
        cfg.dt = expect_number(value, where);
      else if (key == "eps0")
        cfg.eps0 = expect_number(value, where);
      else if (key == "threshold_x")
        cfg.threshold_x = expect_number(value, where);
      else
        throw config_error(where + ": unknown key '" + qual + "'");
    } else {  // validate
      if (key == "tolerance_scale") {
        cfg.tolerance_scale = expect_number(value, where);
      } else if (key == "criteria") {
        cfg.criteria.clear();
        for (const double d : expect_array(value, where)) {
          if (d != std::floor(d))
            throw config_error(where + ": criteria must be integers");
          cfg.criteria.push_back(static_cast<int>(d));
        }
      } else {
        throw config_error(where + ": unknown key '" + qual + "'");
      }
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

std::string format_numeric(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0.0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string serialize_run_config(const RunConfig& c) {
  std::ostringstream out;
  auto arr = [](const std::vector<double>& a) {
    std::string s = "[";
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (i) s += ", ";
      s += format_numeric(a[i]);
    }
    return s + "]";
  };
  out << "experiment = \"" << experiment_name(c.experiment) << "\"\n";
  out << "master_seed = " << c.master_seed << "\n";
  out << "output_dir = \"" << c.output_dir << "\"\n\n";
  out << "[model]\n";
  out << "gamma = " << format_numeric(c.model.gamma) << "\n";
  out << "p = " << format_numeric(c.model.p) << "\n\n";
  out << "[budgets]\n";
  out << "n_samples = " << c.n_samples << "\n";
  out << "horizons = " << arr(c.horizons) << "\n";
  out << "instanton_horizons = " << arr(c.instanton_horizons) << "\n";
  out << "dt = " << format_numeric(c.dt) << "\n";
  out << "eps0 = " << format_numeric(c.eps0) << "\n";
  out << "threshold_x = " << format_numeric(c.threshold_x) << "\n\n";
  out << "[validate]\n";
  out << "tolerance_scale = " << format_numeric(c.tolerance_scale) << "\n";
  out << "criteria = [";
  for (std::size_t i = 0; i < c.criteria.size(); ++i) {
    if (i) out << ", ";
    out << c.criteria[i];
  }
  out << "]\n";
  return out.str();
}

std::uint64_t config_hash(const RunConfig& config) {
  return fnv1a(serialize_run_config(config));
}

CsvTable::CsvTable(std::vector<std::string> header)
    : header_(std::move(header)) {
  require(!header_.empty(), "CSV header must not be empty");
}

void CsvTable::add_row(std::vector<std::string> cells) {
  require(cells.size() == header_.size(),
          "CSV row width must match the header");
  rows_.push_back(std::move(cells));
}

std::string CsvTable::to_string() const {
  std::string out;
  auto append = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  append(header_);
  for (const auto& row : rows_) append(row);
  return out;
}

void CsvTable::write(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw error("cannot write '" + path + "'");
  const std::string bytes = to_string();
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw error("short write to '" + path + "'");
}

std::size_t CsvData::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw config_error("CSV is missing a '" + name + "' column");
}

CsvData read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot open '" + path + "'");
  CsvData data;
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = s.find(',', start);
      cells.push_back(s.substr(start, comma == std::string::npos
                                          ? std::string::npos
                                          : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    return cells;
  };
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first) {
      data.header = split(line);
      first = false;
    } else {
      data.rows.push_back(split(line));
    }
  }
  if (first) throw config_error("'" + path + "' has no header row");
  return data;
}

}  // namespace heavytail
