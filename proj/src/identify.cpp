#include "supousv/identify.hpp"

#include "supousv/error.hpp"
#include "supousv/nelder_mead.hpp"

#include <Eigen/Dense>
#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <thread>

namespace supousv {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

// ---------------------------------------------------------------------------
// moments

EmpiricalStats empirical_stats(std::span<const double> v) {
    if (v.size() < 2) throw DataError("empirical_stats: need at least two samples");
    EmpiricalStats s;
    s.n = v.size();
    const double n = static_cast<double>(v.size());
    if (std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); })) {
        // The rounded sum need not reproduce the common value.
        s.mean = v.front();
        s.skewness_normalized = kNaN;
        s.kurtosis_normalized = kNaN;
        s.shape_defined = false;
        return s;
    }
    double sum = 0.0;
    for (double x : v) sum += x;
    s.mean = sum / n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double x : v) {
        const double d = x - s.mean;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    s.variance = m2 / (n - 1.0);
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if (m2 > 0.0) {
        s.skewness_normalized = m3 / std::pow(m2, 1.5);
        s.kurtosis_normalized = m4 / (m2 * m2);
    } else {
        s.skewness_normalized = kNaN;
        s.kurtosis_normalized = kNaN;
        s.shape_defined = false;
    }
    return s;
}

EmpiricalStats empirical_stats(const TimeSeries& s) { return empirical_stats(std::span<const double>(s.values)); }

double empirical_covariance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DataError("covariance: length mismatch");
    if (a.size() < 2) throw DataError("covariance: need at least two samples");
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        ma += a[k];
        mb += b[k];
    }
    ma /= n;
    mb /= n;
    double c = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) c += (a[k] - ma) * (b[k] - mb);
    return c / (n - 1.0);
}

bool AcfPoint::missing() const { return std::isnan(value); }

// ---------------------------------------------------------------------------
// autocorrelation

std::vector<AcfPoint> empirical_acf(const TimeSeries& s, double max_lag, double bin_width, double gap_days) {
    if (!(bin_width > 0.0)) throw DomainError("empirical_acf: bin width must be positive");
    if (!(max_lag >= 0.0)) throw DomainError("empirical_acf: max lag must be nonnegative");
    s.validate();
    const std::size_t n = s.size();
    if (n < 2) throw DataError("empirical_acf: need at least two samples");
    double mean = 0.0;
    for (double v : s.values) mean += v;
    mean /= static_cast<double>(n);
    std::vector<double> dev(n);
    double ss = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        dev[k] = s.values[k] - mean;
        ss += dev[k] * dev[k];
    }
    if (!(ss > 0.0)) throw DataError("empirical_acf: constant series");
    const double m2 = ss / static_cast<double>(n);

    const auto bins = static_cast<std::size_t>(std::floor(max_lag / bin_width + 1e-9));
    std::vector<AcfPoint> out(bins + 1);
    for (std::size_t k = 0; k <= bins; ++k) out[k].lag = static_cast<double>(k) * bin_width;
    out[0].value = 1.0;
    out[0].pairs = n;

    if (s.regular()) {
        const double dt = s.times[1] - s.times[0];
        for (std::size_t k = 1; k <= bins; ++k) {
            const auto L = static_cast<std::size_t>(std::llround(out[k].lag / dt));
            if (L == 0 || L >= n) {
                out[k].value = kNaN;
                continue;
            }
            double acc = 0.0;
            for (std::size_t t = 0; t + L < n; ++t) acc += dev[t] * dev[t + L];
            out[k].lag = static_cast<double>(L) * dt;
            out[k].value = acc / ss;
            out[k].pairs = n - L;
        }
        return out;
    }

    std::vector<std::size_t> segment(n, 0);
    for (std::size_t k = 1; k < n; ++k)
        segment[k] = segment[k - 1] + (s.times[k] - s.times[k - 1] > gap_days ? 1 : 0);
    std::vector<double> sum(bins + 1, 0.0);
    std::vector<std::size_t> count(bins + 1, 0);
    const double reach = (static_cast<double>(bins) + 0.5) * bin_width;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n && segment[j] == segment[i]; ++j) {
            const double lag = s.times[j] - s.times[i];
            if (lag > reach) break;
            const double kk = std::ceil(lag / bin_width - 0.5);
            if (kk < 1.0) continue;
            const auto k = static_cast<std::size_t>(kk);
            if (k > bins) continue;
            sum[k] += dev[i] * dev[j];
            ++count[k];
        }
    }
    for (std::size_t k = 1; k <= bins; ++k) {
        out[k].pairs = count[k];
        out[k].value = count[k] ? sum[k] / (static_cast<double>(count[k]) * m2) : kNaN;
    }
    return out;
}

// ---------------------------------------------------------------------------
// seasonal component

SeasonalFit fit_seasonal(const TimeSeries& c, int n_harmonics, double period) {
    if (c.kind != SeriesKind::concentration) throw DataError("fit_seasonal: expects a concentration series");
    c.validate();
    if (n_harmonics < 0) throw DomainError("fit_seasonal: negative harmonic count");
    const auto n = static_cast<Eigen::Index>(c.size());
    const Eigen::Index p = 1 + 2 * n_harmonics;
    if (n < p) throw DataError("fit_seasonal: fewer samples than coefficients");
    Eigen::MatrixXd A(n, p);
    Eigen::VectorXd b(n);
    const double w = 2.0 * std::numbers::pi / period;
    for (Eigen::Index k = 0; k < n; ++k) {
        const double t = c.times[static_cast<std::size_t>(k)];
        A(k, 0) = 1.0;
        for (int i = 1; i <= n_harmonics; ++i) {
            A(k, 2 * i - 1) = std::sin(i * w * t);
            A(k, 2 * i) = std::cos(i * w * t);
        }
        b(k) = std::log(c.values[static_cast<std::size_t>(k)]);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    qr.setThreshold(1e-10);
    if (qr.rank() < p) throw DataError("fit_seasonal: rank-deficient design (degenerate sampling times)");
    const Eigen::VectorXd x = qr.solve(b);
    const Eigen::VectorXd r = b - A * x;

    std::vector<Harmonic> hs;
    for (int i = 1; i <= n_harmonics; ++i) {
        const double a = x(2 * i - 1), bc = x(2 * i);
        // a sin(theta) + b cos(theta) = A sin(theta + B)
        hs.push_back({std::hypot(a, bc), std::atan2(bc, a)});
    }
    SeasonalFit fit{SeasonalModel(std::exp(x(0)), std::move(hs), period), {}, r.squaredNorm()};
    fit.residual.kind = SeriesKind::log_residual;
    fit.residual.times = c.times;
    fit.residual.values.assign(r.data(), r.data() + r.size());
    // the intercept column makes the residual mean vanish up to rounding; remove that too
    double mean = 0.0;
    for (double v : fit.residual.values) mean += v;
    mean /= static_cast<double>(n);
    for (double& v : fit.residual.values) v -= mean;
    return fit;
}

// ---------------------------------------------------------------------------
// power-law autocorrelation fits

namespace {

struct LagData {
    std::vector<double> h, v;
    std::size_t total = 0;
};

LagData usable(std::span<const AcfPoint> acf, double max_lag) {
    LagData d;
    for (const auto& p : acf) {
        if (p.missing() || p.lag > max_lag) continue;
        ++d.total;
        if (p.lag > 0.0) {
            d.h.push_back(p.lag);
            d.v.push_back(p.value);
        }
    }
    return d;
}

std::vector<std::vector<double>> grid_starts(std::initializer_list<double> a, std::initializer_list<double> b) {
    std::vector<std::vector<double>> s;
    for (double x : a)
        for (double y : b) s.push_back({std::log(x), std::log(y)});
    return s;
}

}  // namespace

CurveFit fit_pi(std::span<const AcfPoint> acf, double max_lag) {
    const LagData d = usable(acf, max_lag);
    if (d.total < 3 || d.h.size() < 2) throw DataError("fit_pi: need at least three autocorrelation points");
    auto sse = [&](const std::vector<double>& th) {
        const double am1 = std::exp(th[0]), beta = std::exp(th[1]);
        double s = 0.0;
        for (std::size_t k = 0; k < d.h.size(); ++k) {
            const double e = d.v[k] - std::pow(1.0 + beta * d.h[k], -am1);
            s += e * e;
        }
        return s;
    };
    NelderMeadOptions opt;
    opt.size_tol = 1e-12;
    const auto r = nelder_mead_multistart(sse, grid_starts({0.2, 1.0, 5.0, 25.0}, {0.1, 2.0}), opt);
    CurveFit f;
    const double alpha = 1.0 + std::exp(r.x[0]);
    const double beta = std::exp(r.x[1]);
    f.measure = GammaMeasure(alpha, beta);
    f.residual = r.value;
    f.converged = r.converged;
    f.degenerate = alpha > 1e4 || beta * max_lag < 1e-8;
    f.points = d.h.size();
    return f;
}

UncoupledFit fit_x_uncoupled(std::span<const AcfPoint> acf, double var_x, double ave_y, double max_lag) {
    const LagData d = usable(acf, max_lag);
    if (d.total < 3 || d.h.size() < 2) throw DataError("fit_x_uncoupled: need at least three autocorrelation points");
    if (!(var_x >= 0.0) || !(ave_y > 0.0)) throw DomainError("fit_x_uncoupled: need Var(X) >= 0 and Ave(Y) > 0");
    auto sse = [&](const std::vector<double>& th) {
        const double alpha = std::exp(th[0]), beta = std::exp(th[1]);
        double s = 0.0;
        for (std::size_t k = 0; k < d.h.size(); ++k) {
            const double e = d.v[k] - std::pow(1.0 + beta * d.h[k], -alpha);
            s += e * e;
        }
        return s;
    };
    NelderMeadOptions opt;
    opt.size_tol = 1e-12;
    const auto r = nelder_mead_multistart(sse, grid_starts({0.2, 1.0, 3.0, 10.0}, {0.01, 0.5}), opt);
    UncoupledFit f;
    const double alpha = std::exp(r.x[0]), beta = std::exp(r.x[1]);
    f.rho.measure = GammaMeasure(alpha, beta);
    f.rho.residual = r.value;
    f.rho.converged = r.converged;
    f.rho.degenerate = alpha * beta * max_lag < 1e-6 || alpha < 1e-8;
    f.rho.points = d.h.size();
    f.sigma = std::sqrt(2.0 * var_x / ave_y);
    return f;
}

// ---------------------------------------------------------------------------
// Levy measure by moment matching

LevyFit fit_levy(const EmpiricalStats& stats, const GammaMeasure& pi, double eps) {
    if (!(stats.mean > 0.0) || !(stats.variance > 0.0) || !stats.shape_defined || stats.skewness_normalized == 0.0)
        throw DataError("fit_levy: need positive mean, variance and nonzero skewness");
    if (!(eps >= 0.0)) throw DomainError("fit_levy: epsilon must be nonnegative");
    const double J = inv_first_moment(pi);
    const double p = 1.0 / (1.0 + eps);
    auto a3_of = [](double s) { return -5.0 + 6.0 / (1.0 + std::exp(-s)); };
    auto s_of = [](double a3) { return -std::log(6.0 / (a3 + 5.0) - 1.0); };

    auto relerr = [&](double a1, double a2, double a3) {
        if (!(a3 < p) || !(a1 > 0.0) || !(a2 > 0.0) || !std::isfinite(a1) || !std::isfinite(a2))
            return std::numeric_limits<double>::infinity();
        const CumulantSet c = discharge_cumulants(TemperedStableLevy(a1, a2, a3, eps), pi);
        const double e1 = (stats.mean - c.mean) / stats.mean;
        const double e2 = (stats.variance - c.variance) / stats.variance;
        const double e3 = (stats.skewness_normalized - c.skewness_normalized) / stats.skewness_normalized;
        const double v = e1 * e1 + e2 * e2 + e3 * e3;
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };
    // a1 that reproduces the mean exactly for given (a2, a3)
    auto a1_of = [&](double a2, double a3) {
        return stats.mean / (J * std::exp(std::lgamma(p - a3) + (a3 - p) * std::log(a2)));
    };

    auto profile = [&](const std::vector<double>& th) {
        const double a2 = std::exp(th[0]), a3 = a3_of(th[1]);
        if (!(a3 < p)) return std::numeric_limits<double>::infinity();
        return relerr(a1_of(a2, a3), a2, a3);
    };
    std::vector<std::vector<double>> starts;
    for (double a3 : {-1.0, 0.25, 0.6, 0.85})
        for (double a2 : {1e-4, 1e-2}) {
            if (a3 >= p) continue;
            starts.push_back({std::log(a2), s_of(a3)});
        }
    if (starts.empty()) starts.push_back({std::log(1e-3), s_of(std::min(0.0, p - 0.1))});
    NelderMeadOptions opt;
    opt.size_tol = 1e-13;
    const auto r2 = nelder_mead_multistart(profile, starts, opt);

    const double a2_0 = std::exp(r2.x[0]), a3_0 = a3_of(r2.x[1]);
    auto full = [&](const std::vector<double>& th) { return relerr(std::exp(th[0]), std::exp(th[1]), a3_of(th[2])); };
    opt.initial_step = 0.01;
    const auto r3 = nelder_mead(full, {std::log(a1_of(a2_0, a3_0)), r2.x[0], r2.x[1]}, opt);

    LevyFit f;
    if (r3.value <= r2.value) {
        f.levy = TemperedStableLevy(std::exp(r3.x[0]), std::exp(r3.x[1]), a3_of(r3.x[2]), eps);
        f.residual = r3.value;
    } else {
        f.levy = TemperedStableLevy(a1_of(a2_0, a3_0), a2_0, a3_0, eps);
        f.residual = r2.value;
    }
    f.converged = f.residual < 1e-10;
    return f;
}

// ---------------------------------------------------------------------------
// coupled volatility fit

double coupling_weight(double mu, double sigma, double var_y, double ave_y, double J) {
    if (!(sigma > 0.0) || !(ave_y > 0.0) || !(J > 0.0)) throw DomainError("coupling_weight: invalid inputs");
    return 2.0 * mu * mu * var_y / (sigma * sigma * ave_y * J);
}

namespace {

struct CandidateInput {
    double alpha_R, beta_R;
};

CoupledCandidate evaluate_candidate(const CandidateInput& in, const LagData& d, const QuadratureGrid& pi_grid,
                                    std::size_t grid_size, const EmpiricalStats& sx, const EmpiricalStats& sy,
                                    double cov_xy, const TemperedStableLevy& levy, const GammaMeasure& pi) {
    CoupledCandidate c;
    c.alpha_R = in.alpha_R;
    const GammaMeasure rho(in.alpha_R, in.beta_R);
    const QuadratureGrid rho_grid = quantile_grid(rho, grid_size);
    const CouplingIntegrals k(pi_grid, rho_grid);
    const double T = k.t0();
    std::vector<double> i1(d.h.size()), j23(d.h.size());
    for (std::size_t m = 0; m < d.h.size(); ++m) {
        i1[m] = rho.laplace(d.h[m]);
        j23[m] = k.i2(d.h[m]) + k.i3(d.h[m]);
    }
    auto sse_w = [&](double w) {
        double s = 0.0;
        for (std::size_t m = 0; m < d.h.size(); ++m) {
            const double e = d.v[m] - (i1[m] + w * j23[m]) / (1.0 + w * T);
            s += e * e;
        }
        return s;
    };
    const auto br = boost::math::tools::brent_find_minima([&](double u) { return sse_w(std::exp(u)); }, -15.0, 10.0,
                                                          std::numeric_limits<double>::digits / 2);
    double w = std::exp(br.first), best = br.second;
    if (const double s0 = sse_w(0.0); s0 <= best) {
        w = 0.0;
        best = s0;
    }
    c.w = w;
    c.acf_residual = best;
    c.sigma = std::sqrt(2.0 * sx.variance / (sy.mean * (1.0 + w * T)));
    const double J = inv_first_moment(pi);
    c.mu = (cov_xy > 0.0 ? 1.0 : -1.0) * c.sigma * std::sqrt(w * sy.mean * J / (2.0 * sy.variance));
    const SupOUSVParams params{levy, pi, rho, c.sigma, c.mu};
    c.cov_theory = xy_covariance(params, k);
    c.cov_rel_error = std::abs(c.cov_theory - cov_xy) / std::abs(cov_xy);
    c.ok = std::isfinite(c.cov_rel_error) && std::isfinite(c.sigma);
    return c;
}

}  // namespace

FitReport fit_x_coupled(std::span<const AcfPoint> acf, const EmpiricalStats& stats_x, const EmpiricalStats& stats_y,
                        double cov_xy, const TemperedStableLevy& levy, const GammaMeasure& pi,
                        const CoupledOptions& opt) {
    if (!(opt.alpha_step > 0.0) || !(opt.alpha_span > 0.0 && opt.alpha_span < 1.0))
        throw DomainError("fit_x_coupled: invalid alpha grid");
    FitReport rep;
    rep.model.levy = levy;
    rep.model.pi = pi;
    rep.variance_x_empirical = stats_x.variance;
    rep.cov_xy_empirical = cov_xy;

    const UncoupledFit aux = fit_x_uncoupled(acf, stats_x.variance, stats_y.mean, opt.max_lag);
    rep.alpha_R_aux = aux.rho.measure.alpha();
    rep.beta_R_aux = aux.rho.measure.beta();
    rep.stages.push_back({"rho_auxiliary", aux.rho.residual, aux.rho.converged});
    if (aux.rho.degenerate) rep.warnings.push_back("auxiliary rho fit hit a parameter boundary");

    const QuadratureGrid pi_grid = quantile_grid(pi, opt.grid_size);
    if (cov_xy == 0.0 || !std::isfinite(cov_xy)) {
        rep.coupled = false;
        rep.model.rho = aux.rho.measure;
        rep.model.sigma = aux.sigma;
        rep.model.mu = 0.0;
        rep.warnings.push_back("zero X-Y covariance: uncoupled fit used (mu = 0)");
        rep.variance_x_theory = 0.5 * aux.sigma * aux.sigma * stats_y.mean;
        const SupOUSVParams p = rep.model.full();
        rep.variance_x_model = x_variance(p, pi_grid, quantile_grid(p.rho, opt.grid_size));
        rep.cov_xy_theory = 0.0;
        return rep;
    }

    const LagData d = usable(acf, opt.max_lag);
    const double a = aux.rho.measure.alpha(), beta = aux.rho.measure.beta();
    std::vector<CandidateInput> grid;
    const double lo = std::ceil(a * (1.0 - opt.alpha_span) / opt.alpha_step - 1e-9);
    const double hi = std::floor(a * (1.0 + opt.alpha_span) / opt.alpha_step + 1e-9);
    for (double k = std::max(lo, 1.0); k <= hi; k += 1.0) grid.push_back({k * opt.alpha_step, beta});
    if (grid.empty()) grid.push_back({a, beta});

    std::vector<CoupledCandidate> out(grid.size());
    unsigned threads = opt.threads ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(grid.size()));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < grid.size(); i = next++) {
            try {
                out[i] = evaluate_candidate(grid[i], d, pi_grid, opt.grid_size, stats_x, stats_y, cov_xy, levy, pi);
            } catch (const std::exception&) {
                out[i].alpha_R = grid[i].alpha_R;
                out[i].ok = false;
            }
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    const CoupledCandidate* best = nullptr;
    for (const auto& c : out)  // ascending alpha_R, strict < keeps the smallest on ties
        if (c.ok && (!best || c.cov_rel_error < best->cov_rel_error)) best = &c;
    rep.candidates = out;
    if (!best) throw ConvergenceError("fit_x_coupled: every alpha_R candidate failed");

    rep.coupled = true;
    rep.model.rho = GammaMeasure(best->alpha_R, beta);
    rep.model.sigma = best->sigma;
    rep.model.mu = best->mu;
    rep.w = best->w;
    rep.stages.push_back({"coupled_acf", best->acf_residual, true});
    rep.stages.push_back({"covariance_relative_error", best->cov_rel_error, true});
    const SupOUSVParams p = rep.model.full();
    const QuadratureGrid rho_grid = quantile_grid(p.rho, opt.grid_size);
    const CouplingIntegrals k(pi_grid, rho_grid);
    rep.variance_x_theory = 0.5 * p.sigma * p.sigma * stats_y.mean * (1.0 + best->w * k.t0());
    rep.variance_x_model = x_variance_terms(p, k).total();
    rep.cov_xy_theory = best->cov_theory;
    return rep;
}

}  // namespace supousv
