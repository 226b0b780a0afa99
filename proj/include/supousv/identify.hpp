#pragma once

// Calibration of the model from observed series: empirical moments and
// autocorrelations, the seasonal component of concentrations, the discharge
// measures (pi by autocorrelation least squares, nu by moment matching) and
// the volatility part (rho, sigma, mu) with or without discharge coupling.

#include "supousv/analytics.hpp"
#include "supousv/measures.hpp"
#include "supousv/params.hpp"
#include "supousv/seasonal.hpp"
#include "supousv/timeseries.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace supousv {

struct EmpiricalStats {
    double mean = 0.0;
    double variance = 0.0;             // unbiased
    double skewness_normalized = 0.0;  // m3 / m2^{3/2}, NaN when variance is 0
    double kurtosis_normalized = 0.0;  // m4 / m2^2, NaN when variance is 0
    std::size_t n = 0;
    bool shape_defined = true;         // false for constant series
};

EmpiricalStats empirical_stats(std::span<const double> values);
EmpiricalStats empirical_stats(const TimeSeries& s);

/// Sample covariance (unbiased) of paired values.
double empirical_covariance(std::span<const double> a, std::span<const double> b);

struct AcfPoint {
    double lag = 0.0;
    double value = 0.0;  // NaN for an empty bin
    std::size_t pairs = 0;
    bool missing() const;
};

inline constexpr double kDefaultGapDays = 90.0;

/// Lag bins centred at k * bin_width, k = 0 .. floor(max_lag / bin_width).
/// Regular series: standard lag-k estimator. Irregular series: products of
/// pairs whose separation falls in ((k - 1/2) w, (k + 1/2) w], normalized by
/// pair count and the biased variance; pairs spanning a gap (consecutive
/// samples more than gap_days apart) are skipped. Bin 0 is exactly 1.
std::vector<AcfPoint> empirical_acf(const TimeSeries& s, double max_lag, double bin_width,
                                    double gap_days = kDefaultGapDays);

struct SeasonalFit {
    SeasonalModel model;
    TimeSeries residual;  // log C - log(c_bar e^{S})
    double rss = 0.0;
};

SeasonalFit fit_seasonal(const TimeSeries& c, int n_harmonics = 2, double period = 365.25);

struct CurveFit {
    GammaMeasure measure{2.0, 1.0};
    double residual = 0.0;  // sum of squared errors
    bool converged = false;
    bool degenerate = false;  // parameter driven to a boundary
    std::size_t points = 0;
};

/// (alpha_r, beta_r) minimizing sum (acf - (1 + beta h)^{-(alpha - 1)})^2 over
/// lags in (0, max_lag]; alpha_r > 1.
CurveFit fit_pi(std::span<const AcfPoint> acf, double max_lag = 30.0);

struct LevyFit {
    TemperedStableLevy levy{1.0, 1.0, 0.5, 0.1};
    double residual = 0.0;
    bool converged = false;  // residual below 1e-10
};

/// (a1, a2, a3) minimizing the sum of squared relative errors of mean,
/// variance and normalized skewness; a3 in (-5, 1).
LevyFit fit_levy(const EmpiricalStats& stats, const GammaMeasure& pi, double eps = 0.1);

struct UncoupledFit {
    CurveFit rho;   // (alpha_R, beta_R) for (1 + beta_R h)^{-alpha_R}
    double sigma = 0.0;
};

/// Fits (1 + beta_R h)^{-alpha_R} on lags in (0, max_lag];
/// sigma = sqrt(2 Var_e(X) / Ave_e(Y)).
UncoupledFit fit_x_uncoupled(std::span<const AcfPoint> acf, double var_x, double ave_y, double max_lag = 730.0);

struct CoupledOptions {
    double alpha_step = 0.005;
    double alpha_span = 0.25;      // candidates within alpha_{R,a} (1 +- span)
    std::size_t grid_size = 512;   // quadrature nodes per measure
    double max_lag = 730.0;
    unsigned threads = 0;          // 0: hardware concurrency
};

struct CoupledCandidate {
    double alpha_R = 0.0;
    double w = 0.0;
    double acf_residual = 0.0;
    double sigma = 0.0;
    double mu = 0.0;
    double cov_theory = 0.0;
    double cov_rel_error = 0.0;
    bool ok = false;
};

struct StageObjective {
    std::string stage;
    double value = 0.0;
    bool converged = false;
};

struct FitReport {
    ModelConfig model;
    std::optional<double> w;
    std::optional<double> alpha_R_aux;
    std::optional<double> beta_R_aux;
    bool coupled = false;
    std::optional<double> variance_x_empirical;
    std::optional<double> variance_x_theory;  // half sigma^2 Ave_e(Y) {I1(0) + w (I2(0) + I3(0))}
    std::optional<double> variance_x_model;   // closed-form variance of the fitted model
    std::optional<double> cov_xy_empirical;
    std::optional<double> cov_xy_theory;
    std::vector<StageObjective> stages;
    std::vector<CoupledCandidate> candidates;
    std::vector<std::string> warnings;
};

/// w = 2 mu^2 Var_e(Y) / (sigma^2 Ave_e(Y) J)
double coupling_weight(double mu, double sigma, double var_y, double ave_y, double J);

/// Two-step fit: auxiliary (alpha_{R,a}, beta_{R,a}) with mu = 0, then for
/// each alpha_R on the grid, w >= 0 by least squares of the normalized
/// autocorrelation, sigma so that the model variance matches Var_e(X), mu
/// with the sign of cov_xy; keeps the alpha_R whose covariance is closest to
/// cov_xy (smallest alpha_R on ties). A zero cov_xy falls back to the
/// uncoupled fit. Fills the rho/sigma/mu part of report.model; levy and pi
/// are taken from `discharge`.
FitReport fit_x_coupled(std::span<const AcfPoint> acf, const EmpiricalStats& stats_x, const EmpiricalStats& stats_y,
                        double cov_xy, const TemperedStableLevy& levy, const GammaMeasure& pi,
                        const CoupledOptions& opt = {});

}  // namespace supousv
