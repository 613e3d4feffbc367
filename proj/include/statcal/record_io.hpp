#pragma once

#include "statcal/integrator.hpp"

#include <filesystem>
#include <string>

namespace statcal {

enum class RecordFormat { csv, jsonl };

/// `t,theta_0,...,theta_{l-1},grad_norm,J_hat`, 17 significant digits.
std::string format_csv(const RunRecord& record);

/// One JSON object per record point, then a final diagnostics object.
std::string format_jsonl(const RunRecord& record);

std::string format_record(const RunRecord& record, RecordFormat format);

/// Writes to a sibling temporary file and renames it over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& content);

/// Locale-independent decimal with 17 significant digits.
std::string format_double(double v);

/// Shortest decimal that parses back to the same double.
std::string format_shortest(double v);

}  // namespace statcal
