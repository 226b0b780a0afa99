#pragma once

// Monte-Carlo simulation of the finite-dimensional lift:
//   y_i: exact exponential recession between jumps, jumps routed to node i
//        with probability c_i;
//   x_j: explicit Euler-Maruyama for
//        dx_j = -R_j (x_j - d_j mu (Y - Ybar)) dt + sigma sqrt(R_j d_j Y) dB_j.

#include "supousv/analytics.hpp"
#include "supousv/measures.hpp"
#include "supousv/params.hpp"
#include "supousv/seasonal.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace supousv {

inline constexpr double kDaysPerYear = 365.25;
inline constexpr std::uint64_t kDefaultSeed = 20240601;

struct SimConfig {
    double dt = 0.02;                        // days
    double burn_in = 50.0 * kDaysPerYear;    // days, discarded
    double horizon = 200.0 * kDaysPerYear;   // days, recorded
    std::size_t i_r = 256;
    std::size_t i_R = 256;
    std::uint64_t seed = kDefaultSeed;
    std::size_t record_every = 1;            // keep every k-th step in SamplePath
    bool keep_components = false;
    MeanSource mean = MeanSource::grid;      // Ybar in the x drift
    double truncation_tol = 1e-6;            // small-jump share of M2 replaced by drift

    /// Throws ConfigError on dt <= 0, horizon < dt, zero lift sizes.
    void validate() const;
    std::size_t burn_in_steps() const;
    std::size_t horizon_steps() const;
};

struct SamplePath {
    double dt = 0.0;  // spacing of `times`
    std::vector<double> times;
    std::vector<double> y;
    std::vector<double> x;  // empty for discharge-only runs
    std::vector<std::vector<double>> components_y;
    std::vector<std::vector<double>> components_x;
    std::vector<std::string> warnings;
};

/// Jumps of one time step: regularized sizes z^{1/(1+eps)} and their
/// arrival offsets in [0, dt).
struct JumpBatch {
    std::vector<double> sizes;
    std::vector<double> offsets;
};

/// Sampler for the tempered stable subordinator.
///  a3 < 0: exact compound Poisson, sizes Gamma(-a3, rate a2).
///  a3 in [0, 1): jumps above z_c by thinning a stable/exponential envelope;
///  jumps below z_c replaced by their mean. z_c is set so that the removed
///  jumps carry `tol` of the second regularized moment.
class JumpSampler {
public:
    explicit JumpSampler(const TemperedStableLevy& nu, double tol = 1e-6);

    void sample(double dt, std::mt19937_64& rng, JumpBatch& out) const;

    double truncation() const noexcept { return z_c_; }
    /// Mean regularized size per unit time carried by the drift.
    double drift_rate() const noexcept { return drift_; }
    /// Proposal intensity; equals the jump intensity when a3 < 0.
    double jump_rate() const noexcept { return rate_; }

private:
    TemperedStableLevy nu_;
    double p_;
    double z_c_ = 0.0;
    double drift_ = 0.0;
    double rate_ = 0.0;
    double b_ = 0.0;        // boundary between the two envelope regions
    double mass_a_ = 0.0;   // envelope mass on (z_c, b)
    double mass_b_ = 0.0;   // envelope mass on [b, inf)
};

/// Regularized jump sizes over an interval of length dt (drift excluded).
std::vector<double> sample_jumps(const TemperedStableLevy& nu, double dt, std::mt19937_64& rng, double tol = 1e-6);

/// Independent generator for sub-stream `stream` of `seed`.
std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream);

/// Streaming lift simulator. Stream 0 drives the jumps, stream 1 the
/// Brownian increments, drawn in node order.
class LiftSimulator {
public:
    LiftSimulator(const SupOUSVParams& p, const ModelGrids& grids, const SimConfig& cfg, bool with_x = true);

    /// Advances one step of length dt.
    void step();

    double time() const noexcept { return t_; }
    double y() const noexcept { return Y_; }
    double x() const noexcept { return X_; }
    double ybar() const noexcept { return ybar_; }
    const std::vector<double>& y_components() const noexcept { return y_; }
    const std::vector<double>& x_components() const noexcept { return x_; }
    const JumpSampler& sampler() const noexcept { return sampler_; }

    /// max_j R_j dt; the explicit scheme needs this below 1.
    double stiffness() const noexcept { return stiffness_; }

private:
    SupOUSVParams p_;
    SimConfig cfg_;
    bool with_x_;
    std::vector<double> r_, R_, d_;
    std::vector<double> cum_c_;     // cumulative routing weights
    std::vector<double> decay_r_;   // e^{-r_i dt}
    std::vector<double> drift_y_;   // per-node drift over one step
    std::vector<double> decay_R_;   // 1 - R_j dt
    std::vector<double> noise_;     // sigma sqrt(R_j d_j dt)
    std::vector<double> y_, x_;
    JumpSampler sampler_;
    std::mt19937_64 jump_rng_, noise_rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    JumpBatch batch_;
    double ybar_ = 0.0;
    double t_ = 0.0, Y_ = 0.0, X_ = 0.0;
    double stiffness_ = 0.0;
};

using PathObserver = std::function<void(double t, double y, double x)>;

/// Runs burn-in then calls `observe` after every recorded step.
/// Returns warnings (explicit-scheme stability).
std::vector<std::string> run_lift(const SupOUSVParams& p, const SimConfig& cfg, bool with_x,
                                  const PathObserver& observe);

SamplePath simulate_supou(const SupOUSVParams& p, const SimConfig& cfg);
SamplePath simulate_supousv(const SupOUSVParams& p, const SimConfig& cfg);

/// Single-factor baseline dX = -R X dt + sigma sqrt(R Y) dB driven by the lifted Y.
SamplePath simulate_classical_sv(const SupOUSVParams& p, double R, const SimConfig& cfg);

/// C(t) = c_bar exp(S(t + t0) + X(t)).
std::vector<double> reconstruct_wqi(const SeasonalModel& s, const SamplePath& path, double t0 = 0.0);

/// Arithmetic means of consecutive samples sharing floor(t) (whole days).
std::vector<double> daily_average(std::span<const double> times, std::span<const double> values);

}  // namespace supousv
