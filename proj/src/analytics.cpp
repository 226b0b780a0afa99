#include "supousv/analytics.hpp"

#include "supousv/error.hpp"

#include <algorithm>
#include <cmath>

namespace supousv {

CumulantSet discharge_cumulants(const TemperedStableLevy& levy, const GammaMeasure& pi) {
    const double J = inv_first_moment(pi);
    CumulantSet c;
    c.mean = levy_moment(levy, 1) * J;
    c.variance = levy_moment(levy, 2) / 2.0 * J;
    c.skewness_unnormalized = levy_moment(levy, 3) / 3.0 * J;
    c.kurtosis_unnormalized = levy_moment(levy, 4) / 4.0 * J;
    c.skewness_normalized = c.skewness_unnormalized / std::pow(c.variance, 1.5);
    c.kurtosis_normalized = c.kurtosis_unnormalized / (c.variance * c.variance);
    return c;
}

CumulantSet discharge_cumulants(const SupOUSVParams& p) { return discharge_cumulants(p.levy, p.pi); }

double discharge_acf(const GammaMeasure& pi, double h) {
    if (h < 0.0) throw DomainError("discharge_acf: lag must be nonnegative");
    return std::pow(1.0 + pi.beta() * h, -(pi.alpha() - 1.0));
}

double discharge_acf(const QuadratureGrid& pi, double h) {
    if (h < 0.0) throw DomainError("discharge_acf: lag must be nonnegative");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < pi.size(); ++i) {
        const double w = pi.weights[i] / pi.nodes[i];
        num += w * std::exp(-pi.nodes[i] * h);
        den += w;
    }
    return num / den;
}

ModelGrids ModelGrids::quantile(const SupOUSVParams& p, std::size_t n_pi, std::size_t n_rho) {
    return {quantile_grid(p.pi, n_pi), quantile_grid(p.rho, n_rho)};
}

double exp_divided_difference(double P, double r, double h) {
    const double lo = std::min(P, r);
    const double delta = std::abs(P - r);
    // expm1 keeps full relative accuracy for any delta > 0, so only the exact tie needs the limit
    if (delta == 0.0) return h * std::exp(-lo * h);
    return std::exp(-lo * h) * (-std::expm1(-delta * h)) / delta;
}

CouplingIntegrals::CouplingIntegrals(const QuadratureGrid& pi, const QuadratureGrid& rho)
    : r_(pi.nodes), c_(pi.weights), R_(rho.nodes), d_(rho.weights) {
    const std::size_t nr = r_.size(), nR = R_.size();

    // g(P) = sum_i c_i / (r_i (P + r_i)) on rho nodes, K(r) = sum_j d_j R_j / (R_j + r) on pi nodes.
    std::vector<double> g(nR, 0.0), K(nr, 0.0);
    for (std::size_t j = 0; j < nR; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < nr; ++i) s += c_[i] / (r_[i] * (R_[j] + r_[i]));
        g[j] = s;
    }
    for (std::size_t i = 0; i < nr; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < nR; ++j) s += d_[j] * R_[j] / (R_[j] + r_[i]);
        K[i] = s;
        inv_r_ += c_[i] / r_[i];
        cov_kernel_ += c_[i] * s / r_[i];
    }

    a_.assign(nR, 0.0);
    for (std::size_t k = 0; k < nR; ++k) {
        const double P = R_[k];
        double s = 0.0;
        for (std::size_t j = 0; j < nR; ++j) s += d_[j] * R_[j] * P / (P + R_[j]) * (g[k] + g[j]);
        a_[k] = d_[k] * s;
        t0_ += a_[k];
    }

    b_.resize(nr);
    for (std::size_t i = 0; i < nr; ++i) b_[i] = c_[i] * K[i] / r_[i];
}

double CouplingIntegrals::i1(double h) const {
    double s = 0.0;
    for (std::size_t j = 0; j < R_.size(); ++j) s += d_[j] * std::exp(-R_[j] * h);
    return s;
}

double CouplingIntegrals::i2(double h) const {
    double s = 0.0;
    for (std::size_t k = 0; k < R_.size(); ++k) s += a_[k] * std::exp(-R_[k] * h);
    return s;
}

double CouplingIntegrals::i3(double h) const {
    if (h == 0.0) return 0.0;
    const std::size_t nr = r_.size(), nR = R_.size();
    std::vector<double> er(nr), eP(nR);
    for (std::size_t i = 0; i < nr; ++i) er[i] = std::exp(-r_[i] * h);
    for (std::size_t k = 0; k < nR; ++k) eP[k] = std::exp(-R_[k] * h);

    double total = 0.0;
    for (std::size_t k = 0; k < nR; ++k) {
        const double P = R_[k];
        double s = 0.0;
        for (std::size_t i = 0; i < nr; ++i) {
            const double r = r_[i];
            const double delta = P - r;
            double D;
            // the plain difference quotient loses at most eps/(|delta| h) relative accuracy
            if (std::abs(delta) * h > 0.01)
                D = (er[i] - eP[k]) / delta;
            else
                D = exp_divided_difference(P, r, h);
            s += b_[i] * D;
        }
        total += d_[k] * P * s;
    }
    return total;
}

double discharge_mean(const SupOUSVParams& p, const CouplingIntegrals& k, MeanSource src) {
    const double m1 = levy_moment(p.levy, 1);
    return src == MeanSource::grid ? m1 * k.grid_inv_first_moment() : m1 * inv_first_moment(p.pi);
}

VarianceTerms x_variance_terms(const SupOUSVParams& p, const CouplingIntegrals& k, MeanSource src) {
    VarianceTerms v;
    v.diffusion = p.sigma * p.sigma * discharge_mean(p, k, src) / 2.0;
    v.drift = p.mu * p.mu * levy_moment(p.levy, 2) / 2.0 * k.t0();
    return v;
}

VarianceTerms x_variance_terms(const SupOUSVParams& p, const QuadratureGrid& pi, const QuadratureGrid& rho,
                               MeanSource src) {
    return x_variance_terms(p, CouplingIntegrals(pi, rho), src);
}

double x_variance(const SupOUSVParams& p, const QuadratureGrid& pi, const QuadratureGrid& rho, MeanSource src) {
    return x_variance_terms(p, pi, rho, src).total();
}

double xy_covariance(const SupOUSVParams& p, const CouplingIntegrals& k) {
    if (p.mu == 0.0) return 0.0;
    return p.mu * levy_moment(p.levy, 2) / 2.0 * k.covariance_kernel();
}

double xy_covariance(const SupOUSVParams& p, const QuadratureGrid& pi, const QuadratureGrid& rho) {
    if (p.mu == 0.0) return 0.0;
    return xy_covariance(p, CouplingIntegrals(pi, rho));
}

double x_acf(const SupOUSVParams& p, const CouplingIntegrals& k, double h, Normalization norm) {
    if (h < 0.0) throw DomainError("x_acf: lag must be nonnegative");
    const VarianceTerms v = x_variance_terms(p, k, norm.mean);
    const double i1 = norm.i1_from_grid ? k.i1(h) : p.rho.laplace(h);
    if (v.total() == 0.0) return i1;
    double num = v.diffusion * i1;
    if (v.drift != 0.0) num += v.drift / k.t0() * (k.i2(h) + k.i3(h));
    return num / v.total();
}

std::vector<double> x_acf(const SupOUSVParams& p, const CouplingIntegrals& k, std::span<const double> lags,
                          Normalization norm) {
    std::vector<double> out;
    out.reserve(lags.size());
    for (double h : lags) out.push_back(x_acf(p, k, h, norm));
    return out;
}

double x_acf(const SupOUSVParams& p, const QuadratureGrid& pi, const QuadratureGrid& rho, double h,
             Normalization norm) {
    return x_acf(p, CouplingIntegrals(pi, rho), h, norm);
}

std::string_view to_string(TailRegime r) {
    switch (r) {
        case TailRegime::decays_alpha_r_gt_2: return "decays_alpha_r_gt_2";
        case TailRegime::decays_alpha_r_le_2: return "decays_alpha_r_le_2";
        case TailRegime::condition_violated: return "condition_violated";
    }
    return "unknown";
}

TailExponents acf_tail_exponents(const GammaMeasure& pi, const GammaMeasure& rho) {
    const double ar = pi.alpha(), aR = rho.alpha();
    TailExponents t;
    if (ar > 2.0) {
        t.regime = TailRegime::decays_alpha_r_gt_2;
        t.exponents = {aR, ar - 2.0};
    } else if ((ar - 1.0) * (aR + 2.0) > 1.0) {
        t.regime = TailRegime::decays_alpha_r_le_2;
        t.exponents = {aR, ((ar - 1.0) * (aR + 2.0) - 1.0) / (aR + 2.0)};
    }
    return t;
}

TailExponents acf_tail_exponents(const SupOUSVParams& p) { return acf_tail_exponents(p.pi, p.rho); }

}  // namespace supousv
