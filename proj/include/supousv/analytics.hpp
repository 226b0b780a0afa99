#pragma once

// Stationary statistics of the supOUSV model: discharge cumulants and
// autocorrelation, variance and autocorrelation of X, the X-Y covariance and
// the power-law tail exponents of the autocorrelations.
//
// Integrals against pi and rho are evaluated as tensor sums over quadrature
// grids. All sums are arranged so that one evaluation costs O(N_pi N_rho).

#include "supousv/measures.hpp"
#include "supousv/params.hpp"

#include <span>
#include <string_view>
#include <vector>

namespace supousv {

struct CumulantSet {
    double mean = 0.0;
    double variance = 0.0;
    double skewness_unnormalized = 0.0;  // third cumulant / 3 convention: M3 J / 3
    double kurtosis_unnormalized = 0.0;  // M4 J / 4
    double skewness_normalized = 0.0;    // skewness_unnormalized / variance^{3/2}
    double kurtosis_normalized = 0.0;    // kurtosis_unnormalized / variance^2
};

CumulantSet discharge_cumulants(const TemperedStableLevy& levy, const GammaMeasure& pi);
CumulantSet discharge_cumulants(const SupOUSVParams& p);

/// (1 + beta_r h)^{-(alpha_r - 1)}
double discharge_acf(const GammaMeasure& pi, double h);
/// sum_i c_i e^{-r_i h} / r_i  /  sum_i c_i / r_i  for an arbitrary recession grid.
double discharge_acf(const QuadratureGrid& pi, double h);

/// Where the stationary discharge mean Ybar comes from.
///  closed_form: M1 * int r^{-1} pi(dr).
///  grid:        M1 * sum_i c_i / r_i, the exact mean of the finite lift.
enum class MeanSource { closed_form, grid };

struct Normalization {
    MeanSource mean = MeanSource::closed_form;
    /// Use sum_j d_j e^{-R_j h} instead of (1 + beta_R h)^{-alpha_R} for I1.
    bool i1_from_grid = false;
};

/// Quadrature grids for pi and rho. Default size matches the lift size used
/// for fitting.
struct ModelGrids {
    QuadratureGrid pi;
    QuadratureGrid rho;

    static ModelGrids quantile(const SupOUSVParams& p, std::size_t n_pi, std::size_t n_rho);
};

inline constexpr std::size_t kDefaultGridSize = 2048;

/// The three coupling integrals of the X autocorrelation on fixed grids,
/// with h-independent factors precomputed.
///  I1(h) = int e^{-Rh} rho(dR)
///  I2(h) = int RP / (r (P+R)) (1/(P+r) + 1/(R+r)) e^{-Ph}  pi rho rho
///  I3(h) = int RP / (r (R+r) (P-r)) (e^{-rh} - e^{-Ph})    pi rho rho
class CouplingIntegrals {
public:
    CouplingIntegrals(const QuadratureGrid& pi, const QuadratureGrid& rho);

    double i1(double h) const;
    double i2(double h) const;
    double i3(double h) const;
    /// I2(0) + I3(0), the triple integral in the variance of X.
    double t0() const noexcept { return t0_; }
    /// int int R / (r (R + r)) pi(dr) rho(dR)
    double covariance_kernel() const noexcept { return cov_kernel_; }
    /// sum_i c_i / r_i
    double grid_inv_first_moment() const noexcept { return inv_r_; }

private:
    std::vector<double> r_, c_, R_, d_;
    std::vector<double> a_;  // I2 coefficient per P_k: sum_j d_j R_j P_k/(P_k+R_j) (g(P_k)+g(R_j))
    std::vector<double> b_;  // I3 coefficient per r_i: c_i K(r_i) / r_i
    double t0_ = 0.0;
    double cov_kernel_ = 0.0;
    double inv_r_ = 0.0;
};

/// Divided difference (e^{-rh} - e^{-Ph}) / (P - r), continuous at P = r
/// where it equals h e^{-rh}.
double exp_divided_difference(double P, double r, double h);

struct VarianceTerms {
    double diffusion = 0.0;  // sigma^2 Ybar / 2
    double drift = 0.0;      // mu^2 Vbar J^{-1} T
    double total() const noexcept { return diffusion + drift; }
};

double discharge_mean(const SupOUSVParams& p, const CouplingIntegrals& k, MeanSource src);

VarianceTerms x_variance_terms(const SupOUSVParams& p, const CouplingIntegrals& k,
                               MeanSource src = MeanSource::closed_form);
VarianceTerms x_variance_terms(const SupOUSVParams& p, const QuadratureGrid& pi, const QuadratureGrid& rho,
                               MeanSource src = MeanSource::closed_form);
double x_variance(const SupOUSVParams& p, const QuadratureGrid& pi, const QuadratureGrid& rho,
                  MeanSource src = MeanSource::closed_form);

/// mu Vbar J^{-1} int int R / (r (R + r)) pi rho. Vbar J^{-1} = M2 / 2 exactly.
double xy_covariance(const SupOUSVParams& p, const CouplingIntegrals& k);
double xy_covariance(const SupOUSVParams& p, const QuadratureGrid& pi, const QuadratureGrid& rho);

double x_acf(const SupOUSVParams& p, const CouplingIntegrals& k, double h, Normalization norm = {});
std::vector<double> x_acf(const SupOUSVParams& p, const CouplingIntegrals& k, std::span<const double> lags,
                          Normalization norm = {});
double x_acf(const SupOUSVParams& p, const QuadratureGrid& pi, const QuadratureGrid& rho, double h,
             Normalization norm = {});

enum class TailRegime { decays_alpha_r_gt_2, decays_alpha_r_le_2, condition_violated };
std::string_view to_string(TailRegime r);

struct TailExponents {
    TailRegime regime = TailRegime::condition_violated;
    /// Power-law exponents bounding the decay of AC_X; empty when the
    /// vanishing condition fails.
    std::vector<double> exponents;
};

TailExponents acf_tail_exponents(const GammaMeasure& pi, const GammaMeasure& rho);
TailExponents acf_tail_exponents(const SupOUSVParams& p);

}  // namespace supousv
