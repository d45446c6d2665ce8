#pragma once

#include <filesystem>
#include <ostream>
#include <string>

#include "parrep/experiment.hpp"

namespace parrep {

inline constexpr const char* version = "0.1.0";
inline constexpr int csv_schema = 1;

/// Shortest decimal that reads back to the same double ("nan", "inf" for non-finite).
std::string format_number(double v);

/// Schemas are described in docs/csv.md.
void write_summary_csv(std::ostream& out, const RunReport& report);
void write_cycles_csv(std::ostream& out, const RunReport& report);
void write_sweep_csv(std::ostream& out, const SweepResult& sweep);

/// summary.csv and cycles.csv under `dir` (created if needed).
void write_report(const std::filesystem::path& dir, const RunReport& report);

}  // namespace parrep
