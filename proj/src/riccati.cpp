#include "supousv/riccati.hpp"

#include "supousv/error.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace supousv {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

double q_max(double a2, double sigma, double mu) {
    if (!(a2 > 0.0)) throw DomainError("q_max: a2 must be positive");
    if (sigma < 0.0) throw DomainError("q_max: sigma must be nonnegative");
    const double ae = a2 * std::numbers::e;
    const double m = std::max(mu, 0.0);
    if (sigma == 0.0) return m > 0.0 ? ae / m : kInf;
    // rationalized root of sigma^2 q^2 / 4 + m q - a2 e = 0
    return 2.0 * ae / (m + std::sqrt(m * m + sigma * sigma * ae));
}

double q_max(const TemperedStableLevy& nu, double sigma, double mu) { return q_max(nu.a2(), sigma, mu); }

double psi_bound(double q, double sigma, double mu) {
    // max(mu q, 0) equals max(mu, 0) q for q >= 0 and stays a valid bound for q < 0
    return (std::max(mu * q, 0.0) + sigma * sigma * q * q / 4.0) / std::numbers::e;
}

// ---------------------------------------------------------------------------
// kappa

namespace {

// (e^v - 1 - v) / v^2 times e^{-u}, without overflow for large v - u.
double h_times_decay(double v, double u) {
    if (std::abs(v) < 1e-3) {
        const double s = 0.5 + v * (1.0 / 6 + v * (1.0 / 24 + v * (1.0 / 120 + v / 720)));
        return s * std::exp(-u);
    }
    if (v < 1.0) return (std::expm1(v) - v) / (v * v) * std::exp(-u);
    return (std::exp(v - u) - (1.0 + v) * std::exp(-u)) / (v * v);
}

// Q(psi) = (kappa(psi) - M1 psi) / psi^2 for eps > 0, in the variable u = a2 z:
//   Q = a1 a2^{a3 - 2p} int_0^inf h(psi a2^{-p} u^p) u^{2p - 1 - a3} e^{-u} du.
double quadratic_part(const TemperedStableLevy& nu, double psi) {
    const double p = nu.size_exponent();
    const double a3 = nu.a3();
    const double scaled = psi * std::pow(nu.a2(), -p);
    const double expo = 2.0 * p - 1.0 - a3;
    auto f = [&](double u) {
        if (u <= 0.0) return 0.0;
        return h_times_decay(scaled * std::pow(u, p), u) * std::pow(u, expo);
    };
    boost::math::quadrature::tanh_sinh<double> ts;
    boost::math::quadrature::exp_sinh<double> es;
    const double tol = 1e-13;
    double head = 0.0, tail = 0.0;
    try {
        head = ts.integrate(f, 0.0, 1.0, tol);
        tail = es.integrate(f, 1.0, kInf, tol);
    } catch (const std::exception&) {
        // the integrand overflows: exp(psi z^p) beats the tempering beyond double range
        return kInf;
    }
    if (!std::isfinite(head + tail)) return kInf;
    return nu.a1() * std::exp((a3 - 2.0 * p) * std::log(nu.a2())) * (head + tail);
}

double closed_form_kappa(const TemperedStableLevy& nu, double psi) {
    const double x = psi / nu.a2();
    if (x >= 1.0) return kInf;
    const double L = std::log1p(-x);
    const double a3 = nu.a3();
    const double ratio = a3 == 0.0 ? L : std::expm1(a3 * L) / a3;
    return -nu.a1() * std::pow(nu.a2(), a3) * std::tgamma(1.0 - a3) * ratio;
}

}  // namespace

double LevyExponent::operator()(double psi) const {
    if (psi == 0.0) return 0.0;
    if (nu_.epsilon() == 0.0) return closed_form_kappa(nu_, psi);
    return levy_moment(nu_, 1) * psi + psi * psi * quadratic_part(nu_, psi);
}

namespace {

// Chebyshev interpolant of Q on [lo, hi]; kappa = M1 psi + psi^2 Q keeps
// full relative accuracy for tiny psi.
class KappaTable {
public:
    explicit KappaTable(const TemperedStableLevy& nu) : nu_(nu), closed_(nu.epsilon() == 0.0) {
        if (!closed_) m1_ = levy_moment(nu, 1);
    }

    void build(double lo, double hi) {
        if (closed_) return;
        if (!(hi > lo)) hi = lo + 1e-12;
        for (int attempt = 0; attempt < 40; ++attempt) {
            if (try_build(lo, hi)) return;
            hi = lo + 0.5 * (hi - lo);
        }
        coef_.clear();
    }

    double operator()(double psi) const {
        if (psi == 0.0) return 0.0;
        if (closed_) return closed_form_kappa(nu_, psi);
        if (!coef_.empty() && psi >= lo_ && psi <= hi_) return m1_ * psi + psi * psi * clenshaw(psi);
        return m1_ * psi + psi * psi * quadratic_part(nu_, psi);
    }

private:
    bool try_build(double lo, double hi) {
        for (std::size_t n : {32u, 64u, 128u, 256u}) {
            std::vector<double> vals(n);
            for (std::size_t k = 0; k < n; ++k) {
                const double x = std::cos(std::numbers::pi * (k + 0.5) / n);
                vals[k] = quadratic_part(nu_, 0.5 * (hi + lo) + 0.5 * (hi - lo) * x);
                if (!std::isfinite(vals[k])) return false;
            }
            std::vector<double> c(n, 0.0);
            for (std::size_t j = 0; j < n; ++j) {
                double s = 0.0;
                for (std::size_t k = 0; k < n; ++k) s += vals[k] * std::cos(std::numbers::pi * j * (k + 0.5) / n);
                c[j] = 2.0 * s / n;
            }
            double scale = 0.0;
            for (double v : c) scale = std::max(scale, std::abs(v));
            const double trailing = std::abs(c[n - 1]) + std::abs(c[n - 2]);
            if (trailing <= 1e-11 * scale) {
                coef_ = std::move(c);
                lo_ = lo;
                hi_ = hi;
                return true;
            }
        }
        return false;
    }

    double clenshaw(double psi) const {
        const double x = (2.0 * psi - lo_ - hi_) / (hi_ - lo_);
        double b1 = 0.0, b2 = 0.0;
        for (std::size_t j = coef_.size() - 1; j >= 1; --j) {
            const double b0 = 2.0 * x * b1 - b2 + coef_[j];
            b2 = b1;
            b1 = b0;
        }
        return x * b1 - b2 + 0.5 * coef_[0];
    }

    TemperedStableLevy nu_;
    bool closed_;
    double m1_ = 0.0;
    std::vector<double> coef_;
    double lo_ = 0.0, hi_ = 0.0;
};

// int_0^1 e^{-z s} s^n ds for n = 0, 1, 2
void exp_moments(double z, double& e0, double& e1, double& e2) {
    if (z < 0.5) {
        e0 = e1 = e2 = 0.0;
        double term = 1.0;  // (-z)^k / k!
        for (int k = 0; k < 20; ++k) {
            e0 += term / (k + 1);
            e1 += term / (k + 2);
            e2 += term / (k + 3);
            term *= -z / (k + 1);
        }
        return;
    }
    const double em = std::exp(-z);
    e0 = (1.0 - em) / z;
    e1 = (1.0 - em * (1.0 + z)) / (z * z);
    e2 = (2.0 - em * (2.0 + 2.0 * z + z * z)) / (z * z * z);
}

// State and right-hand side of the lift's Riccati system.
class RiccatiEngine {
public:
    RiccatiEngine(const SupOUSVParams& p, double q, const ModelGrids& g, const RiccatiOptions& opt)
        : p_(p), q_(q), r_(g.pi.nodes), c_(g.pi.weights), R_(g.rho.nodes), d_(g.rho.weights), kappa_(p.levy) {
        p.validate();
        const double m1 = levy_moment(p.levy, 1);
        for (std::size_t i = 0; i < r_.size(); ++i) inv_r_ += c_[i] / r_[i];
        ybar_ = opt.mean == MeanSource::grid ? m1 * inv_r_ : m1 * inv_first_moment(p.pi);
        m1_ = m1;
        psi_.assign(r_.size(), 0.0);
        r_min_ = *std::min_element(r_.begin(), r_.end());

        const double mpos = std::max(p.mu * q, 0.0);
        const double mneg = std::max(-p.mu * q, 0.0);
        kappa_.build(-mneg, mpos + p.sigma * p.sigma * q * q / 4.0);
    }

    struct Forcing {
        double s1;  // sum_j d_j R_j e^{-R_j t}
        double s2;  // sum_j d_j R_j e^{-2 R_j t}
    };

    Forcing forcing(double t) const {
        Forcing f{0.0, 0.0};
        for (std::size_t j = 0; j < R_.size(); ++j) {
            const double e = std::exp(-R_[j] * t);
            f.s1 += d_[j] * R_[j] * e;
            f.s2 += d_[j] * R_[j] * e * e;
        }
        return f;
    }

    double psi_rhs(const Forcing& f) const {
        return p_.mu * q_ * f.s1 + 0.5 * p_.sigma * p_.sigma * q_ * q_ * f.s2;
    }

    double phi_rhs(const std::vector<double>& psi, const Forcing& f) const {
        double s = 0.0;
        for (std::size_t i = 0; i < psi.size(); ++i) s += c_[i] * kappa_(psi[i]);
        return s - p_.mu * ybar_ * q_ * f.s1;
    }

    // Exponential integrator for psi' = -r psi + F(t) over a step of length h,
    // exact for the linear part, F interpolated quadratically at t, t+h/2, t+h.
    void etd(std::vector<double>& psi, double h, double F0, double Fm, double F1) const {
        for (std::size_t i = 0; i < psi.size(); ++i) {
            const double z = r_[i] * h;
            double e0, e1, e2;
            exp_moments(z, e0, e1, e2);
            const double m0 = e0, m1 = e0 - e1, m2 = e0 - 2.0 * e1 + e2;
            const double w0 = 2.0 * m2 - 3.0 * m1 + m0;
            const double w1 = -4.0 * m2 + 4.0 * m1;
            const double w2 = 2.0 * m2 - m1;
            psi[i] = std::exp(-z) * psi[i] + h * (w0 * F0 + w1 * Fm + w2 * F1);
        }
    }

    void track(const std::vector<double>& psi) {
        for (double v : psi) {
            psi_sup_ = std::max(psi_sup_, v);
            psi_abs_ = std::max(psi_abs_, std::abs(v));
        }
    }

    // Advances (t, phi, psi) by h; Simpson for phi using the half-step state.
    void step(double h) {
        const Forcing fq1 = forcing(t_ + 0.25 * h);
        const Forcing fm = forcing(t_ + 0.5 * h);
        const Forcing fq3 = forcing(t_ + 0.75 * h);
        const Forcing f1 = forcing(t_ + h);
        const double F0 = psi_rhs(f0_), Fq1 = psi_rhs(fq1), Fm = psi_rhs(fm), Fq3 = psi_rhs(fq3), F1 = psi_rhs(f1);

        std::vector<double>& psi = psi_;
        psi_abs_ = 0.0;
        etd(psi, 0.5 * h, F0, Fq1, Fm);
        track(psi);
        const double gm = phi_rhs(psi, fm);
        etd(psi, 0.5 * h, Fm, Fq3, F1);
        psi_abs_ = 0.0;
        track(psi);
        const double g1 = phi_rhs(psi, f1);

        phi_ += h / 6.0 * (g0_ + 4.0 * gm + g1);
        t_ += h;
        f0_ = f1;
        g0_ = g1;
        ++steps_;
    }

    void start() {
        t_ = 0.0;
        phi_ = 0.0;
        std::fill(psi_.begin(), psi_.end(), 0.0);
        f0_ = forcing(0.0);
        g0_ = phi_rhs(psi_, f0_);
    }

    // Linearized remainder int_t^inf phi' ds with kappa(psi) ~ M1 psi.
    double tail() const {
        double s = 0.0;
        for (std::size_t i = 0; i < r_.size(); ++i) s += c_[i] * psi_[i] / r_[i];
        double e1 = 0.0, e2 = 0.0;
        for (std::size_t j = 0; j < R_.size(); ++j) {
            const double e = std::exp(-R_[j] * t_);
            e1 += d_[j] * e;
            e2 += d_[j] * e * e;
        }
        const double mean_lift = m1_ * inv_r_;
        return m1_ * s + (mean_lift - ybar_) * p_.mu * q_ * e1 +
               mean_lift * p_.sigma * p_.sigma * q_ * q_ / 4.0 * e2;
    }

    RiccatiState state() const {
        RiccatiState s;
        s.t = t_;
        s.phi = phi_;
        s.psi = psi_;
        s.omega.resize(R_.size());
        for (std::size_t j = 0; j < R_.size(); ++j) s.omega[j] = q_ * std::exp(-R_[j] * t_);
        return s;
    }

    void snap(double t) { t_ = t; }
    double t() const { return t_; }
    double phi() const { return phi_; }
    double phi_rate() const { return g0_; }
    double psi_sup() const { return psi_sup_; }
    double psi_abs_current() const { return psi_abs_; }
    double r_min() const { return r_min_; }
    std::size_t steps() const { return steps_; }

private:
    const SupOUSVParams& p_;
    double q_;
    std::vector<double> r_, c_, R_, d_;
    KappaTable kappa_;
    double ybar_ = 0.0, m1_ = 0.0, inv_r_ = 0.0, r_min_ = 0.0;
    std::vector<double> psi_;
    double t_ = 0.0, phi_ = 0.0, g0_ = 0.0;
    Forcing f0_{0.0, 0.0};
    double psi_sup_ = 0.0, psi_abs_ = 0.0;
    std::size_t steps_ = 0;
};

double next_step(double t, const RiccatiOptions& opt) {
    return std::min(std::max(opt.initial_step, opt.growth * t), opt.max_step);
}

void check_options(const RiccatiOptions& opt) {
    if (!(opt.initial_step > 0.0)) throw DomainError("riccati: initial step must be positive");
    if (!(opt.growth >= 0.0)) throw DomainError("riccati: growth must be nonnegative");
    if (!(opt.max_step > 0.0)) throw DomainError("riccati: max step must be positive");
}

}  // namespace

RiccatiResult integrate_riccati(const SupOUSVParams& p, double q, const ModelGrids& grids, double t_end,
                                const std::vector<double>& output_times, const RiccatiOptions& opt) {
    check_options(opt);
    if (!(t_end >= 0.0)) throw DomainError("riccati: t_end must be nonnegative");
    if (!std::is_sorted(output_times.begin(), output_times.end()))
        throw DomainError("riccati: output times must be sorted");
    if (!output_times.empty() && (output_times.front() < 0.0 || output_times.back() > t_end))
        throw DomainError("riccati: output time outside [0, t_end]");
    RiccatiEngine eng(p, q, grids, opt);
    eng.start();

    RiccatiResult res;
    res.guard_level = opt.guard_a2.value_or(p.levy.a2());
    res.psi_bound = psi_bound(q, p.sigma, p.mu);
    std::size_t next = 0;
    auto emit = [&] {
        while (next < output_times.size() && output_times[next] <= eng.t()) {
            res.trajectory.push_back(eng.state());
            ++next;
        }
    };
    emit();
    while (eng.t() < t_end) {
        double h = next_step(eng.t(), opt);
        double target = t_end;
        if (next < output_times.size()) target = std::min(target, output_times[next]);
        h = std::min(h, target - eng.t());
        eng.step(h);
        if (std::abs(target - eng.t()) < 1e-12 * std::max(1.0, target)) eng.snap(target);
        emit();
        if (!std::isfinite(eng.phi())) break;
    }
    res.psi_sup = eng.psi_sup();
    res.psi_bound_ok = res.psi_sup <= res.psi_bound * (1.0 + 1e-6);
    res.guard_tripped = res.psi_sup > res.guard_level;
    res.steps = eng.steps();
    return res;
}

std::string_view to_string(MgfVerdict v) { return v == MgfVerdict::finite ? "finite" : "divergent"; }

MgfResult mgf(const SupOUSVParams& p, double q, const ModelGrids& grids, const RiccatiOptions& opt) {
    check_options(opt);
    MgfResult res;
    res.q = q;
    res.q_max = q_max(p.levy, p.sigma, p.mu);
    res.guard_level = opt.guard_a2.value_or(p.levy.a2());
    res.psi_bound = psi_bound(q, p.sigma, p.mu);
    if (q == 0.0) {
        res.converged = true;
        return res;
    }

    RiccatiEngine eng(p, q, grids, opt);
    eng.start();
    // psi relaxes on the slowest recession time scale before stationarity can be judged
    const double t_relax = 10.0 / eng.r_min();
    bool diverged = false;
    while (true) {
        eng.step(next_step(eng.t(), opt));
        if (!std::isfinite(eng.phi())) {
            diverged = true;
            break;
        }
        if (eng.t() >= t_relax && std::abs(eng.phi_rate()) < opt.phi_rate_tol &&
            eng.psi_abs_current() < opt.psi_tol * std::abs(q)) {
            res.converged = true;
            break;
        }
        if (eng.t() >= opt.t_max) break;
    }
    res.psi_sup = eng.psi_sup();
    res.psi_bound_ok = res.psi_sup <= res.psi_bound * (1.0 + 1e-6);
    res.guard_tripped = res.psi_sup > res.guard_level;
    res.t_final = eng.t();
    res.steps = eng.steps();

    if (diverged) {
        res.log_mgf = kInf;
        res.mgf = kInf;
        res.verdict = MgfVerdict::divergent;
        res.guard_tripped = true;
        res.converged = false;
        return res;
    }
    if (!res.converged)
        throw ConvergenceError("mgf: stationarity not reached by t = " + std::to_string(eng.t()) + " days");
    res.tail = opt.tail_correction ? eng.tail() : 0.0;
    res.log_mgf = eng.phi() + res.tail;
    res.mgf = std::exp(res.log_mgf);
    res.verdict = res.guard_tripped ? MgfVerdict::divergent : MgfVerdict::finite;
    return res;
}

}  // namespace supousv
