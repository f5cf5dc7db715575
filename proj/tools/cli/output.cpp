#include "output.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <system_error>

#include <unistd.h>

#include "bcpanel/error.hpp"

namespace bcpanel::cli {

namespace fs = std::filesystem;

OutputDir::OutputDir(fs::path target) : target_(std::move(target)) {
  if (target_.filename().empty()) target_ = target_.parent_path();
  staging_ = target_;
  staging_ += ".partial-" + std::to_string(::getpid());
  std::error_code ec;
  fs::remove_all(staging_, ec);
  if (!target_.parent_path().empty()) fs::create_directories(target_.parent_path(), ec);
  if (!fs::create_directories(staging_, ec) || ec)
    throw Error(ErrorKind::IoError, "cannot create '" + staging_.string() + "': " + ec.message());
}

OutputDir::~OutputDir() {
  if (!committed_) {
    std::error_code ec;
    fs::remove_all(staging_, ec);
  }
}

void OutputDir::write(const std::string& name, const std::string& content) const {
  std::ofstream out(file(name), std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write '" + file(name).string() + "'");
  out << content;
  if (!out) throw Error(ErrorKind::IoError, "write failed for '" + file(name).string() + "'");
}

void OutputDir::write_json(const std::string& name, const nlohmann::json& j) const { write(name, j.dump(2) + "\n"); }

void OutputDir::commit() {
  std::error_code ec;
  if (fs::exists(target_, ec)) {
    if (!fs::is_directory(target_, ec))
      throw Error(ErrorKind::IoError, "'" + target_.string() + "' exists and is not a directory");
    if (!fs::is_empty(target_, ec) && !fs::exists(target_ / "manifest.json", ec))
      throw Error(ErrorKind::IoError, "'" + target_.string() + "' is not empty and holds no previous run");
    fs::remove_all(target_, ec);
    if (ec) throw Error(ErrorKind::IoError, "cannot replace '" + target_.string() + "': " + ec.message());
  }
  fs::rename(staging_, target_, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot move output into '" + target_.string() + "': " + ec.message());
  committed_ = true;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string summary_csv_header() { return "parameter,mean,sd,q2.5,q97.5,ess,mcse\n"; }

std::string summary_csv(const std::vector<ParameterSummary>& rows, const std::string& prefix) {
  std::string out;
  for (const auto& r : rows) {
    out += '"' + prefix + r.name + '"';
    for (double v : {r.mean, r.sd, r.q025, r.q975, r.ess, r.mcse}) out += ',' + format_number(v);
    out += '\n';
  }
  return out;
}

nlohmann::json matrix_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace bcpanel::cli
