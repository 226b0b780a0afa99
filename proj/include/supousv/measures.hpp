#pragma once

// Measures of the supOU stochastic volatility model: gamma mixing measures
// for the recession (pi) and reversion (rho) rates, the tempered stable Levy
// measure of jump sizes, and quantile-based quadrature grids.

#include <cstddef>
#include <vector>

namespace supousv {

/// Gamma probability measure on (0, inf) with shape `alpha` and scale `beta`.
///
/// Density r^{alpha-1} e^{-r/beta} / (Gamma(alpha) beta^alpha). The scale
/// carries the units of the rate (1/day).
class GammaMeasure {
public:
    GammaMeasure(double alpha, double beta);

    double alpha() const noexcept { return alpha_; }
    double beta() const noexcept { return beta_; }

    double mean() const noexcept { return alpha_ * beta_; }
    double cdf(double x) const;
    double quantile(double p) const;
    /// Laplace transform  int e^{-h r} m(dr) = (1 + beta h)^{-alpha}.
    double laplace(double h) const;

    friend bool operator==(const GammaMeasure&, const GammaMeasure&) = default;

private:
    double alpha_;
    double beta_;
};

/// Tempered stable Levy measure  a1 e^{-a2 z} z^{-(1+a3)} dz  on (0, inf),
/// with the jump-size regularization z -> z^{1/(1+epsilon)}.
class TemperedStableLevy {
public:
    TemperedStableLevy(double a1, double a2, double a3, double epsilon = 0.1);

    double a1() const noexcept { return a1_; }
    double a2() const noexcept { return a2_; }
    double a3() const noexcept { return a3_; }
    double epsilon() const noexcept { return epsilon_; }

    /// Exponent applied to raw jump sizes, 1/(1+epsilon).
    double size_exponent() const noexcept { return 1.0 / (1.0 + epsilon_); }
    /// Density a1 e^{-a2 z} z^{-(1+a3)} of the unregularized measure.
    double density(double z) const;
    bool finite_activity() const noexcept { return a3_ < 0.0; }
    /// Total mass  int nu(dz); +inf in the infinite activity case.
    double total_mass() const;

    friend bool operator==(const TemperedStableLevy&, const TemperedStableLevy&) = default;

private:
    double a1_;
    double a2_;
    double a3_;
    double epsilon_;
};

/// Discrete measure sum_i w_i delta_{x_i} approximating a probability measure.
struct QuadratureGrid {
    std::vector<double> nodes;
    std::vector<double> weights;

    QuadratureGrid() = default;
    QuadratureGrid(std::vector<double> nodes, std::vector<double> weights);

    std::size_t size() const noexcept { return nodes.size(); }

    /// sum_i w_i f(x_i)
    template <class F>
    double integrate(F&& f) const {
        double acc = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i) acc += weights[i] * f(nodes[i]);
        return acc;
    }

    /// Throws DomainError unless nodes are positive and strictly increasing
    /// and the weights are positive with unit sum (1e-12).
    void validate() const;
};

/// int r^{-1} m(dr) = 1 / (beta (alpha - 1)); requires alpha > 1.
double inv_first_moment(const GammaMeasure& m);

/// Regularized jump moment  M_k = int z^{k/(1+eps)} nu(dz)
///   = a1 Gamma(k/(1+eps) - a3) a2^{a3 - k/(1+eps)}.
double levy_moment(const TemperedStableLevy& nu, int k);

/// Same closed form for a real order p > 0: int z^{p/(1+eps)} nu(dz).
double levy_power_moment(const TemperedStableLevy& nu, double p);

/// Midpoint quantile rule: nodes at probabilities (j - 0.5)/count with
/// equal weights 1/count.
QuadratureGrid quantile_grid(const GammaMeasure& m, std::size_t count);

/// Lower regularized incomplete gamma P(s, x); thin wrapper used by
/// truncation bookkeeping in the jump sampler.
double regularized_lower_gamma(double s, double x);

}  // namespace supousv
