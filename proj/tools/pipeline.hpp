#pragma once

// Orchestration shared by the command-line tool and the acceptance runs:
// discharge fit, WQI fit, model statistics, and their JSON renderings.

#include "json.hpp"

#include "supousv/analytics.hpp"
#include "supousv/identify.hpp"
#include "supousv/riccati.hpp"
#include "supousv/simulate.hpp"

#include <optional>
#include <string>
#include <vector>

namespace supousv::pipeline {

/// Failure stages; the CLI maps each to its own exit code.
enum class Stage { usage, input, fit_discharge, fit_wqi, stats, simulate, riccati, output };
int exit_code(Stage s);
std::string_view to_string(Stage s);

class StageError : public std::runtime_error {
public:
    StageError(Stage s, const std::string& what) : std::runtime_error(what), stage_(s) {}
    Stage stage() const noexcept { return stage_; }

private:
    Stage stage_;
};

struct DischargeOptions {
    double eps = 0.1;
    double max_lag = 30.0;        // days
    double bin_width = 0.0;       // 0: median sampling interval
    double gap_days = kDefaultGapDays;
};

struct DischargeFit {
    EmpiricalStats stats;
    std::vector<AcfPoint> acf;
    CurveFit pi;
    LevyFit levy;
    CumulantSet model;
};

DischargeFit fit_discharge(const TimeSeries& y, const DischargeOptions& opt = {});

enum class WqiMode { coupled, uncoupled };

struct WqiOptions {
    WqiMode mode = WqiMode::coupled;
    int harmonics = 2;
    double period = 365.25;
    double max_lag = 730.0;
    double bin_width = 0.0;       // 0: median sampling interval
    double gap_days = kDefaultGapDays;
    CoupledOptions coupled;
    /// Forcing the uncoupled fit warns when |corr(X, Y)| exceeds this.
    double corr_warning = 0.05;
};

struct WqiFit {
    SeasonalFit seasonal;
    EmpiricalStats stats_x;
    std::vector<AcfPoint> acf;
    std::size_t paired = 0;       // X samples matched to a discharge value
    double cov_xy = 0.0;
    double corr_xy = 0.0;
    FitReport report;
};

/// Discharge value at `t` by linear interpolation; nullopt outside the
/// sampled range or across a gap longer than gap_days.
std::optional<double> discharge_at(const TimeSeries& y, double t, double gap_days = kDefaultGapDays);

WqiFit fit_wqi(const TimeSeries& c, const TimeSeries& y, const EmpiricalStats& stats_y, const TemperedStableLevy& levy,
               const GammaMeasure& pi, const WqiOptions& opt = {});

nlohmann::json to_json(const EmpiricalStats& s);
nlohmann::json to_json(const DischargeFit& f);
nlohmann::json to_json(const WqiFit& f);
nlohmann::json to_json(const MgfResult& m);
nlohmann::json model_json(const ModelConfig& cfg);

struct StatsOptions {
    std::size_t grid_size = kDefaultGridSize;
    std::vector<double> lags{0.0, 0.1, 1.0, 10.0, 100.0, 730.0};
};

/// Closed-form statistics of a model: discharge cumulants and ACF, X
/// variance, covariance, ACF and tail regime, q_max.
nlohmann::json model_stats(const ModelConfig& cfg, const StatsOptions& opt = {});

}  // namespace supousv::pipeline
