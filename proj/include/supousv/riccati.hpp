#pragma once

// Moment generating function M(q) = E[exp(q X)] of the stationary lift via
// its generalized Riccati system
//
//   phi'   = sum_i c_i kappa(psi_i) - mu Ybar sum_j d_j R_j omega_j
//   omega_j = q exp(-R_j t)
//   psi_i' = -r_i psi_i + mu S1(t) + sigma^2/2 S2(t),
//   S1 = sum_j d_j R_j omega_j,  S2 = sum_j d_j R_j omega_j^2,
//
// with kappa(psi) = int (exp(psi z^{1/(1+eps)}) - 1) nu(dz).

#include "supousv/analytics.hpp"
#include "supousv/measures.hpp"
#include "supousv/params.hpp"

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

namespace supousv {

/// Largest q with max{mu,0} q + sigma^2 q^2 / 4 <= a2 e. +inf when sigma = 0 and mu <= 0.
double q_max(double a2, double sigma, double mu);
double q_max(const TemperedStableLevy& nu, double sigma, double mu);

/// psi bound max{mu,0} q + sigma^2 q^2 / 4 scaled by 1/e.
double psi_bound(double q, double sigma, double mu);

/// kappa(psi) = int (exp(psi z^{1/(1+eps)}) - 1) nu(dz).
/// Closed form for eps = 0 (+inf for psi >= a2); adaptive quadrature otherwise.
class LevyExponent {
public:
    explicit LevyExponent(const TemperedStableLevy& nu) : nu_(nu) {}
    double operator()(double psi) const;
    const TemperedStableLevy& measure() const noexcept { return nu_; }

private:
    TemperedStableLevy nu_;
};

struct RiccatiOptions {
    double initial_step = 1e-3;  // days
    double growth = 0.005;       // step never exceeds max(initial_step, growth * t)
    double max_step = 1e300;
    double t_max = 1e16;         // stationarity horizon for mgf
    double phi_rate_tol = 1e-10;
    double psi_tol = 1e-8;       // relative to |q|
    /// Level of the exponential-moment guard psi <= a2. Defaults to levy.a2.
    std::optional<double> guard_a2;
    /// Ybar in the phi drift; the grid mean makes the lift's X centred.
    MeanSource mean = MeanSource::grid;
    /// Closed-form linearized remainder of phi beyond the stopping time.
    bool tail_correction = true;
};

struct RiccatiState {
    double t = 0.0;
    double phi = 0.0;
    std::vector<double> psi;    // on pi nodes
    std::vector<double> omega;  // on rho nodes
};

struct RiccatiResult {
    std::vector<RiccatiState> trajectory;  // at the requested output times
    double psi_sup = 0.0;                  // over all nodes and steps
    double psi_bound = 0.0;
    bool psi_bound_ok = true;              // psi_sup <= psi_bound (1 + 1e-6)
    bool guard_tripped = false;            // psi_sup > guard level
    double guard_level = 0.0;
    std::size_t steps = 0;
};

/// Integrates on [0, t_end], recording the state at each of `output_times`
/// (sorted, within [0, t_end]).
RiccatiResult integrate_riccati(const SupOUSVParams& p, double q, const ModelGrids& grids, double t_end,
                                const std::vector<double>& output_times, const RiccatiOptions& opt = {});

enum class MgfVerdict { finite, divergent };
std::string_view to_string(MgfVerdict v);

struct MgfResult {
    double q = 0.0;
    double q_max = 0.0;
    double log_mgf = 0.0;
    double mgf = 1.0;
    MgfVerdict verdict = MgfVerdict::finite;
    bool converged = false;
    bool guard_tripped = false;
    double guard_level = 0.0;
    double psi_sup = 0.0;
    double psi_bound = 0.0;
    bool psi_bound_ok = true;
    double t_final = 0.0;
    double tail = 0.0;  // tail correction added to phi
    std::size_t steps = 0;
};

/// Integrates until |phi'| < phi_rate_tol and sup psi < psi_tol |q|.
/// Guard trips yield verdict divergent; log_mgf still reports the value of
/// phi when kappa stays finite (eps > 0). Throws ConvergenceError when
/// t_max is reached first.
MgfResult mgf(const SupOUSVParams& p, double q, const ModelGrids& grids, const RiccatiOptions& opt = {});

}  // namespace supousv
