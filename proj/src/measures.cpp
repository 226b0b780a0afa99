#include "supousv/measures.hpp"

#include "supousv/error.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <limits>
#include <string>

namespace supousv {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw DomainError(what);
}

}  // namespace

GammaMeasure::GammaMeasure(double alpha, double beta) : alpha_(alpha), beta_(beta) {
    require(std::isfinite(alpha) && alpha > 0.0, "gamma measure: alpha must be positive");
    require(std::isfinite(beta) && beta > 0.0, "gamma measure: beta must be positive");
}

double GammaMeasure::cdf(double x) const {
    if (x <= 0.0) return 0.0;
    return boost::math::gamma_p(alpha_, x / beta_);
}

double GammaMeasure::quantile(double p) const {
    require(p > 0.0 && p < 1.0, "gamma quantile: probability must lie in (0, 1)");
    return beta_ * boost::math::gamma_p_inv(alpha_, p);
}

double GammaMeasure::laplace(double h) const {
    return std::pow(1.0 + beta_ * h, -alpha_);
}

TemperedStableLevy::TemperedStableLevy(double a1, double a2, double a3, double epsilon)
    : a1_(a1), a2_(a2), a3_(a3), epsilon_(epsilon) {
    require(std::isfinite(a1) && a1 > 0.0, "levy measure: a1 must be positive");
    require(std::isfinite(a2) && a2 > 0.0, "levy measure: a2 must be positive");
    require(std::isfinite(a3) && a3 < 1.0, "levy measure: a3 must be below 1");
    require(std::isfinite(epsilon) && epsilon >= 0.0, "levy measure: epsilon must be nonnegative");
}

double TemperedStableLevy::density(double z) const {
    if (z <= 0.0) return 0.0;
    return a1_ * std::exp(-a2_ * z) * std::pow(z, -1.0 - a3_);
}

double TemperedStableLevy::total_mass() const {
    if (a3_ >= 0.0) return std::numeric_limits<double>::infinity();
    return a1_ * std::tgamma(-a3_) * std::pow(a2_, a3_);
}

QuadratureGrid::QuadratureGrid(std::vector<double> n, std::vector<double> w)
    : nodes(std::move(n)), weights(std::move(w)) {
    validate();
}

void QuadratureGrid::validate() const {
    require(!nodes.empty(), "quadrature grid: empty");
    require(nodes.size() == weights.size(), "quadrature grid: node/weight size mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        require(nodes[i] > 0.0 && std::isfinite(nodes[i]), "quadrature grid: nodes must be positive");
        require(i == 0 || nodes[i] > nodes[i - 1], "quadrature grid: nodes must be strictly increasing");
        require(weights[i] > 0.0, "quadrature grid: weights must be positive");
        sum += weights[i];
    }
    require(std::abs(sum - 1.0) <= 1e-12, "quadrature grid: weights must sum to one");
}

double inv_first_moment(const GammaMeasure& m) {
    require(m.alpha() > 1.0, "inv_first_moment: alpha must exceed 1 for a finite integral of 1/r");
    return 1.0 / (m.beta() * (m.alpha() - 1.0));
}

double levy_power_moment(const TemperedStableLevy& nu, double p) {
    const double s = p / (1.0 + nu.epsilon());
    const double g = s - nu.a3();
    require(p > 0.0 && g > 0.0, "levy moment: gamma argument must be positive");
    // log form keeps a2^{a3-s} finite for small a2 and large orders
    return nu.a1() * std::exp(std::lgamma(g) - g * std::log(nu.a2()));
}

double levy_moment(const TemperedStableLevy& nu, int k) {
    require(k >= 1, "levy moment: order must be a positive integer");
    return levy_power_moment(nu, static_cast<double>(k));
}

QuadratureGrid quantile_grid(const GammaMeasure& m, std::size_t count) {
    require(count >= 1, "quantile grid: count must be positive");
    QuadratureGrid g;
    g.nodes.resize(count);
    g.weights.assign(count, 1.0 / static_cast<double>(count));
    const double n = static_cast<double>(count);
    for (std::size_t j = 0; j < count; ++j) g.nodes[j] = m.quantile((static_cast<double>(j) + 0.5) / n);
    // equal weights 1/n accumulate rounding of order n*eps; pin the last one
    double head = 0.0;
    for (std::size_t j = 0; j + 1 < count; ++j) head += g.weights[j];
    g.weights.back() = 1.0 - head;
    return g;
}

double regularized_lower_gamma(double s, double x) {
    if (x <= 0.0) return 0.0;
    return boost::math::gamma_p(s, x);
}

}  // namespace supousv
