#include "supousv/cd_events.hpp"

#include "supousv/error.hpp"

#include <algorithm>
#include <cmath>

namespace supousv {

std::string_view to_string(LoopDirection d) {
    switch (d) {
        case LoopDirection::clockwise: return "clockwise";
        case LoopDirection::counterclockwise: return "counterclockwise";
        case LoopDirection::mixed: return "mixed";
    }
    return "mixed";
}

namespace {

double type7_quantile(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    const double h = (static_cast<double>(v.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

void classify(CdEvent& e) {
    const std::size_t n = e.y.size();
    std::vector<double> lx(n), ly(n);
    for (std::size_t k = 0; k < n; ++k) {
        lx[k] = std::log(e.y[k]);
        ly[k] = std::log(e.c[k]);
    }
    double area = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t m = (k + 1) % n;
        area += lx[k] * ly[m] - lx[m] * ly[k];
    }
    area *= 0.5;
    double fan = 0.0;
    for (std::size_t k = 1; k + 1 < n; ++k) {
        const double ax = lx[k] - lx[0], ay = ly[k] - ly[0];
        const double bx = lx[k + 1] - lx[0], by = ly[k + 1] - ly[0];
        fan += 0.5 * std::abs(ax * by - ay * bx);
    }
    e.signed_area = area;
    if (fan == 0.0 || std::abs(area) < 0.25 * fan)
        e.direction = LoopDirection::mixed;
    else
        e.direction = area > 0.0 ? LoopDirection::counterclockwise : LoopDirection::clockwise;
}

}  // namespace

std::vector<CdEvent> extract_cd_events(std::span<const double> y_daily, std::span<const double> c_daily,
                                       double threshold_quantile) {
    if (y_daily.size() != c_daily.size()) throw DataError("cd events: series lengths differ");
    if (!(threshold_quantile >= 0.0 && threshold_quantile <= 1.0))
        throw DomainError("cd events: threshold quantile must lie in [0, 1]");
    std::vector<CdEvent> events;
    const std::size_t n = y_daily.size();
    if (n == 0) return events;
    for (std::size_t k = 0; k < n; ++k)
        if (!(y_daily[k] > 0.0) || !(c_daily[k] > 0.0)) throw DataError("cd events: series must be positive");

    const double thr = type7_quantile({y_daily.begin(), y_daily.end()}, threshold_quantile);
    std::size_t k = 0;
    while (k < n) {
        if (!(y_daily[k] > thr)) {
            ++k;
            continue;
        }
        std::size_t end = k;
        while (end + 1 < n && y_daily[end + 1] > thr) ++end;
        CdEvent e;
        e.first_day = k == 0 ? 0 : k - 1;
        e.last_day = std::min(end + 1, n - 1);
        for (std::size_t d = e.first_day; d <= e.last_day; ++d) {
            e.y.push_back(y_daily[d]);
            e.c.push_back(c_daily[d]);
        }
        classify(e);
        events.push_back(std::move(e));
        k = end + 1;
    }
    return events;
}

}  // namespace supousv
