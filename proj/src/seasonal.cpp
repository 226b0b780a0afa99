#include "supousv/seasonal.hpp"

#include "supousv/error.hpp"

#include <cmath>
#include <numbers>

namespace supousv {

SeasonalModel::SeasonalModel(double c_bar, std::vector<Harmonic> harmonics, double period)
    : c_bar_(c_bar), harmonics_(std::move(harmonics)), period_(period) {
    if (!(c_bar > 0.0) || !std::isfinite(c_bar)) throw DomainError("seasonal model: c_bar must be positive");
    if (!(period > 0.0) || !std::isfinite(period)) throw DomainError("seasonal model: period must be positive");
}

double SeasonalModel::seasonal(double t) const {
    double s = 0.0;
    const double w = 2.0 * std::numbers::pi * t / period_;
    for (std::size_t i = 0; i < harmonics_.size(); ++i)
        s += harmonics_[i].amplitude * std::sin(static_cast<double>(i + 1) * w + harmonics_[i].phase);
    return s;
}

double SeasonalModel::concentration(double t, double x) const {
    return c_bar_ * std::exp(seasonal(t) + x);
}

}  // namespace supousv
