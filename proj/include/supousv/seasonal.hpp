#pragma once

#include <vector>

namespace supousv {

struct Harmonic {
    double amplitude = 0.0;  // A_i
    double phase = 0.0;      // B_i
};

/// Multiplicative seasonal component  c_bar * exp(S(t)),
/// S(t) = sum_i A_i sin(2 pi i t / period + B_i).
class SeasonalModel {
public:
    SeasonalModel() = default;
    SeasonalModel(double c_bar, std::vector<Harmonic> harmonics, double period = 365.25);

    double c_bar() const noexcept { return c_bar_; }
    double period() const noexcept { return period_; }
    const std::vector<Harmonic>& harmonics() const noexcept { return harmonics_; }

    double seasonal(double t) const;
    /// c_bar * exp(S(t) + x)
    double concentration(double t, double x) const;

private:
    double c_bar_ = 1.0;
    std::vector<Harmonic> harmonics_;
    double period_ = 365.25;
};

}  // namespace supousv
