#include "supousv/timeseries.hpp"

#include "supousv/error.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace supousv {

void TimeSeries::validate() const {
    if (times.size() != values.size()) throw DataError("time series: length mismatch");
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (!std::isfinite(times[k]) || !std::isfinite(values[k]))
            throw DataError("time series: non-finite entry at index " + std::to_string(k));
        if (k > 0 && !(times[k] > times[k - 1]))
            throw DataError("time series: times not strictly increasing at index " + std::to_string(k));
        if (kind == SeriesKind::concentration && !(values[k] > 0.0))
            throw DataError("time series: non-positive concentration at index " + std::to_string(k));
    }
}

bool TimeSeries::regular(double rel_tol) const {
    if (times.size() < 3) return true;
    const double d0 = times[1] - times[0];
    for (std::size_t k = 2; k < times.size(); ++k)
        if (std::abs((times[k] - times[k - 1]) - d0) > rel_tol * d0) return false;
    return true;
}

double TimeSeries::median_spacing() const {
    if (times.size() < 2) throw DataError("time series: need at least two samples");
    std::vector<double> d(times.size() - 1);
    for (std::size_t k = 1; k < times.size(); ++k) d[k - 1] = times[k] - times[k - 1];
    auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
    std::nth_element(d.begin(), mid, d.end());
    return *mid;
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
        s.remove_suffix(1);
    return s;
}

bool parse_number(std::string_view s, double& v) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    if (s.empty()) return false;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    return ec == std::errc{} && p == s.data() + s.size();
}

bool parse_int(std::string_view s, int& v) {
    if (s.empty()) return false;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    return ec == std::errc{} && p == s.data() + s.size();
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

}  // namespace

double parse_timestamp(std::string_view s) {
    s = trim(s);
    double v = 0.0;
    if (parse_number(s, v)) return v;
    // YYYY-MM-DD[(T| )HH:MM[:SS[.fff]]][Z]
    auto bad = [&] { return DataError("unrecognized timestamp '" + std::string(s) + "'"); };
    if (s.size() < 10 || s[4] != '-' || s[7] != '-') throw bad();
    int y = 0, mo = 0, d = 0;
    if (!parse_int(s.substr(0, 4), y) || !parse_int(s.substr(5, 2), mo) || !parse_int(s.substr(8, 2), d)) throw bad();
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(mo)},
                                          std::chrono::day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) throw bad();
    double days = static_cast<double>(std::chrono::sys_days(ymd).time_since_epoch().count());
    std::string_view rest = s.substr(10);
    if (rest.empty()) return days;
    if (rest.front() != 'T' && rest.front() != ' ') throw bad();
    rest.remove_prefix(1);
    if (!rest.empty() && rest.back() == 'Z') rest.remove_suffix(1);
    int hh = 0, mm = 0;
    double ss = 0.0;
    if (rest.size() < 5 || rest[2] != ':' || !parse_int(rest.substr(0, 2), hh) || !parse_int(rest.substr(3, 2), mm))
        throw bad();
    if (rest.size() > 5) {
        if (rest[5] != ':' || !parse_number(rest.substr(6), ss)) throw bad();
    }
    if (hh > 23 || mm > 59 || ss < 0.0 || ss >= 61.0) throw bad();
    return days + (hh * 3600.0 + mm * 60.0 + ss) / 86400.0;
}

LoadedSeries parse_timeseries(std::string_view text, SeriesKind kind, std::string_view value_column,
                              std::string_view source) {
    LoadedSeries out;
    out.series.kind = kind;
    std::istringstream in{std::string(text)};
    std::string line;
    const std::string where(source);
    int lineno = 0;
    std::size_t col = 0;
    bool have_header = false;
    std::vector<int> rows;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty() || trim(line).front() == '#') continue;
        const auto fields = split(line);
        if (!have_header) {
            auto it = std::find(fields.begin(), fields.end(), value_column);
            if (it == fields.end())
                throw DataError(where + ":" + std::to_string(lineno) + ": header lacks column '" +
                                std::string(value_column) + "'");
            col = static_cast<std::size_t>(it - fields.begin());
            if (col == 0) throw DataError(where + ":" + std::to_string(lineno) + ": first column must be the timestamp");
            have_header = true;
            continue;
        }
        const std::string at = where + ":" + std::to_string(lineno) + ": ";
        if (fields.size() <= col) throw DataError(at + "missing value column");
        double t = 0.0, v = 0.0;
        try {
            t = parse_timestamp(fields[0]);
        } catch (const DataError& e) {
            throw DataError(at + e.what());
        }
        if (!parse_number(fields[col], v) || !std::isfinite(v))
            throw DataError(at + "value '" + std::string(fields[col]) + "' is not a number");
        if (kind == SeriesKind::concentration && !(v > 0.0))
            throw DataError(at + "non-positive concentration " + std::string(fields[col]));
        out.series.times.push_back(t);
        out.series.values.push_back(v);
        rows.push_back(lineno);
    }
    if (!have_header) throw DataError(where + ": empty file (no header)");

    std::vector<std::size_t> order(rows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto& ts = out.series.times;
    if (!std::is_sorted(ts.begin(), ts.end())) {
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ts[a] < ts[b]; });
        out.warnings.push_back(where + ": rows out of time order; sorted ascending");
    }
    TimeSeries sorted;
    sorted.kind = kind;
    for (std::size_t k = 0; k < order.size(); ++k) {
        const std::size_t i = order[k];
        if (k > 0 && ts[i] == sorted.times.back())
            throw DataError(where + ":" + std::to_string(rows[i]) + ": duplicate timestamp (also on line " +
                            std::to_string(rows[order[k - 1]]) + ")");
        sorted.times.push_back(ts[i]);
        sorted.values.push_back(out.series.values[i]);
    }
    out.series = std::move(sorted);
    return out;
}

LoadedSeries load_timeseries(const std::filesystem::path& path, SeriesKind kind, std::string_view value_column) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_timeseries(ss.str(), kind, value_column, path.string());
}

}  // namespace supousv
