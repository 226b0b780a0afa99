#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace supousv {

enum class SeriesKind { discharge, concentration, log_residual };

/// (time, value) samples; times in days, strictly increasing.
struct TimeSeries {
    std::vector<double> times;
    std::vector<double> values;
    SeriesKind kind = SeriesKind::discharge;

    std::size_t size() const noexcept { return times.size(); }
    /// Throws DataError on NaN, unsorted/duplicate times, or non-positive
    /// concentrations.
    void validate() const;
    /// Constant spacing up to a relative tolerance.
    bool regular(double rel_tol = 1e-6) const;
    double median_spacing() const;
};

struct LoadedSeries {
    TimeSeries series;
    std::vector<std::string> warnings;
};

/// Reads a CSV with a header row. `value_column` names the value column;
/// the time column is the first one. Timestamps are ISO-8601 dates or
/// date-times (UTC, converted to days since 1970-01-01) or plain numbers of
/// days. Rows are sorted ascending with a warning when out of order.
LoadedSeries load_timeseries(const std::filesystem::path& path, SeriesKind kind,
                             std::string_view value_column = "value");
LoadedSeries parse_timeseries(std::string_view text, SeriesKind kind, std::string_view value_column = "value",
                              std::string_view source = "<input>");

/// Days since 1970-01-01T00:00:00Z; throws DataError on malformed input.
double parse_timestamp(std::string_view s);

}  // namespace supousv
