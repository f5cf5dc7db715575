#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "bcpanel/analytics.hpp"

namespace bcpanel::cli {

/// Collects a command's artifacts in a staging directory next to the target
/// and renames it into place on commit. Nothing is left behind on failure.
class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path target);
  ~OutputDir();
  OutputDir(const OutputDir&) = delete;
  OutputDir& operator=(const OutputDir&) = delete;

  std::filesystem::path file(const std::string& name) const { return staging_ / name; }
  void write(const std::string& name, const std::string& content) const;
  void write_json(const std::string& name, const nlohmann::json& j) const;

  /// Replaces an existing target only if it is empty or holds a previous run.
  void commit();

 private:
  std::filesystem::path target_;
  std::filesystem::path staging_;
  bool committed_ = false;
};

std::string format_number(double v);

/// parameter,mean,sd,q2.5,q97.5,ess,mcse
std::string summary_csv(const std::vector<ParameterSummary>& rows, const std::string& prefix = "");
std::string summary_csv_header();

nlohmann::json matrix_json(const Matrix& m);

}  // namespace bcpanel::cli
