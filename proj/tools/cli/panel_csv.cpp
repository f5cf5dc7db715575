#include "panel_csv.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "bcpanel/error.hpp"

namespace bcpanel::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::size_t index_of(std::vector<std::string>& names, std::map<std::string, std::size_t>& lookup,
                     const std::string& key) {
  auto it = lookup.find(key);
  if (it != lookup.end()) return it->second;
  lookup.emplace(key, names.size());
  names.push_back(key);
  return names.size() - 1;
}

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(trim(cur));
  return fields;
}

bool is_iso_date(const std::string& s) {
  int y = 0;
  unsigned m = 0, d = 0;
  char tail = 0;
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  if (std::sscanf(s.c_str(), "%4d-%2u-%2u%c", &y, &m, &d, &tail) != 3) return false;
  return std::chrono::year_month_day{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}}.ok();
}

PanelData parse_panel_csv(const std::string& text, DeterministicTerms terms) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;

  std::vector<std::string> individuals, variables;
  std::map<std::string, std::size_t> ind_lookup, var_lookup;
  std::set<std::string> date_set;
  std::map<std::tuple<std::size_t, std::string, std::size_t>, double> cells;
  std::vector<std::set<std::string>> dates_by_individual;

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto f = split_csv_line(line);
    if (!header_seen) {
      if (f.size() != 4 || f[0] != "individual" || f[1] != "date" || f[2] != "variable" || f[3] != "value")
        throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) +
                                               ": header must be individual,date,variable,value");
      header_seen = true;
      continue;
    }
    if (f.size() != 4)
      throw Error(ErrorKind::ParseError,
                  "line " + std::to_string(line_no) + ": expected 4 fields, got " + std::to_string(f.size()));
    if (f[0].empty() || f[2].empty())
      throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": empty individual or variable");
    if (!is_iso_date(f[1]))
      throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": invalid ISO-8601 date '" + f[1] + "'");
    double value = 0.0;
    const auto res = std::from_chars(f[3].data(), f[3].data() + f[3].size(), value);
    if (res.ec != std::errc() || res.ptr != f[3].data() + f[3].size() || !std::isfinite(value))
      throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": invalid value '" + f[3] + "'");
    const std::size_t i = index_of(individuals, ind_lookup, f[0]);
    const std::size_t v = index_of(variables, var_lookup, f[2]);
    if (dates_by_individual.size() <= i) dates_by_individual.resize(i + 1);
    dates_by_individual[i].insert(f[1]);
    date_set.insert(f[1]);
    if (!cells.emplace(std::make_tuple(i, f[1], v), value).second)
      throw Error(ErrorKind::DuplicateKey, "line " + std::to_string(line_no) + ": duplicate row for (" + f[0] + ", " +
                                               f[1] + ", " + f[2] + ")");
  }
  if (!header_seen) throw Error(ErrorKind::ParseError, "line 1: missing header");
  if (individuals.empty()) throw Error(ErrorKind::InsufficientData, "no data rows");

  for (std::size_t i = 0; i < individuals.size(); ++i) {
    if (dates_by_individual[i].size() != date_set.size())
      throw Error(ErrorKind::RaggedPanel, "individual '" + individuals[i] + "' has " +
                                              std::to_string(dates_by_individual[i].size()) + " dates, panel has " +
                                              std::to_string(date_set.size()));
  }

  PanelData data;
  data.individual_names = individuals;
  data.variable_names = variables;
  data.dates.assign(date_set.begin(), date_set.end());
  const auto t0 = static_cast<Eigen::Index>(data.dates.size());
  const auto n = static_cast<Eigen::Index>(variables.size());
  for (std::size_t i = 0; i < individuals.size(); ++i) {
    Matrix lv(t0, n);
    for (Eigen::Index t = 0; t < t0; ++t) {
      for (Eigen::Index v = 0; v < n; ++v) {
        auto it = cells.find(std::make_tuple(i, data.dates[t], static_cast<std::size_t>(v)));
        if (it == cells.end())
          throw Error(ErrorKind::MissingCell, "no value for (" + individuals[i] + ", " + data.dates[t] + ", " +
                                                  variables[v] + ")");
        lv(t, v) = it->second;
      }
    }
    data.levels.push_back(std::move(lv));
  }
  data.deterministic = make_deterministic(t0, terms);
  return data;
}

PanelData ingest_csv(const std::string& path, DeterministicTerms terms) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_panel_csv(buf.str(), terms);
}

std::string format_panel_csv(const PanelData& data) {
  std::string out = "individual,date,variable,value\n";
  for (int i = 0; i < data.individuals(); ++i)
    for (Eigen::Index t = 0; t < data.raw_length(); ++t)
      for (int v = 0; v < data.variables(); ++v) {
        out += data.individual_names[i];
        out += ',';
        out += data.dates[t];
        out += ',';
        out += data.variable_names[v];
        out += ',';
        out += format_double(data.levels[i](t, v));
        out += '\n';
      }
  return out;
}

void write_panel_csv(const std::string& path, const PanelData& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write '" + path + "'");
  out << format_panel_csv(data);
  if (!out) throw Error(ErrorKind::IoError, "write failed for '" + path + "'");
}

ScalingRecord min_max_scale(PanelData& data) {
  ScalingRecord rec;
  for (auto& lv : data.levels) {
    std::vector<double> lo, hi;
    for (Eigen::Index v = 0; v < lv.cols(); ++v) {
      const double a = lv.col(v).minCoeff();
      const double b = lv.col(v).maxCoeff();
      lo.push_back(a);
      hi.push_back(b);
      if (b > a) {
        lv.col(v) = (1.0 + 99.0 * (lv.col(v).array() - a) / (b - a)).matrix();
      } else {
        lv.col(v).setConstant(1.0);
      }
    }
    rec.min.push_back(std::move(lo));
    rec.max.push_back(std::move(hi));
  }
  return rec;
}

}  // namespace bcpanel::cli
