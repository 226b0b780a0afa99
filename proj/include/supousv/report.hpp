#pragma once

// Locale-independent numeric output with a fixed number of significant
// digits, so identical inputs yield byte-identical reports.

#include "json.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace supousv {

inline constexpr int kOutputDigits = 9;

/// Shortest general-format text with kOutputDigits significant digits.
/// Non-finite values print as "nan", "inf", "-inf".
std::string format_number(double v);

/// v rounded to kOutputDigits significant digits (non-finite become null in JSON).
nlohmann::json json_number(double v);

/// Rewrites every floating value in `j` through json_number.
nlohmann::json round_numbers(const nlohmann::json& j);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);

/// Two-column (or more) CSV with a header line.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& columns);

}  // namespace supousv
