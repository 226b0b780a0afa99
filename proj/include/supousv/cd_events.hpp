#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace supousv {

enum class LoopDirection { clockwise, counterclockwise, mixed };
std::string_view to_string(LoopDirection d);

/// One flood event of a concentration-discharge curve.
struct CdEvent {
    std::size_t first_day = 0;  // inclusive, after padding
    std::size_t last_day = 0;   // inclusive, after padding
    std::vector<double> y;
    std::vector<double> c;
    double signed_area = 0.0;   // shoelace area of the closed (log Y, log C) polygon
    LoopDirection direction = LoopDirection::mixed;
};

/// Events are maximal runs of days with Y strictly above the type-7 sample
/// quantile `threshold_quantile` of y_daily, padded by one day each side.
/// Positive signed area is counterclockwise. A loop whose |area| is below a
/// quarter of its absolute triangle-fan area is labelled mixed.
std::vector<CdEvent> extract_cd_events(std::span<const double> y_daily, std::span<const double> c_daily,
                                       double threshold_quantile);

}  // namespace supousv
