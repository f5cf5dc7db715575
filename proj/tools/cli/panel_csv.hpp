#pragma once

#include <string>
#include <vector>

#include "bcpanel/model.hpp"

namespace bcpanel::cli {

/// Long-format panel CSV with header individual,date,variable,value.
/// Individuals and variables keep their order of first appearance; dates
/// are ISO-8601 and sorted ascending.
PanelData ingest_csv(const std::string& path, DeterministicTerms terms = DeterministicTerms::Constant);
PanelData parse_panel_csv(const std::string& text, DeterministicTerms terms = DeterministicTerms::Constant);

/// Inverse of ingest_csv; values are written with round-trip precision.
void write_panel_csv(const std::string& path, const PanelData& data);
std::string format_panel_csv(const PanelData& data);

/// Rescale every individual x variable series to [1, 100].
struct ScalingRecord {
  std::vector<std::vector<double>> min, max;  // [individual][variable]
};
ScalingRecord min_max_scale(PanelData& data);

std::vector<std::string> split_csv_line(const std::string& line);
bool is_iso_date(const std::string& s);

}  // namespace bcpanel::cli
