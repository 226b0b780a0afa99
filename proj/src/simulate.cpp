#include "supousv/simulate.hpp"

#include "supousv/error.hpp"
#include "supousv/report.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>

namespace supousv {

void SimConfig::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("simulation: dt must be positive");
    if (!(burn_in >= 0.0)) throw ConfigError("simulation: burn-in must be nonnegative");
    if (!(horizon >= dt)) throw ConfigError("simulation: horizon must be at least dt");
    if (i_r == 0 || i_R == 0) throw ConfigError("simulation: lift sizes must be positive");
    if (record_every == 0) throw ConfigError("simulation: record_every must be positive");
    if (!(truncation_tol > 0.0 && truncation_tol < 1.0)) throw ConfigError("simulation: truncation tol in (0, 1)");
}

std::size_t SimConfig::burn_in_steps() const { return static_cast<std::size_t>(std::llround(burn_in / dt)); }
std::size_t SimConfig::horizon_steps() const { return static_cast<std::size_t>(std::llround(horizon / dt)); }

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32), 0x5u};
    return std::mt19937_64(seq);
}

// ---------------------------------------------------------------------------

JumpSampler::JumpSampler(const TemperedStableLevy& nu, double tol) : nu_(nu), p_(nu.size_exponent()) {
    if (!(tol > 0.0 && tol < 1.0)) throw ConfigError("jump sampler: tolerance must lie in (0, 1)");
    const double a1 = nu.a1(), a2 = nu.a2(), a3 = nu.a3();
    if (a3 < 0.0) {
        rate_ = nu.total_mass();
        return;
    }
    // P(2p - a3, a2 z_c) = tol: the removed jumps carry tol of M2.
    z_c_ = boost::math::gamma_p_inv(2.0 * p_ - a3, tol) / a2;
    drift_ = levy_moment(nu, 1) * regularized_lower_gamma(p_ - a3, a2 * z_c_);
    b_ = std::max(1.0 / a2, z_c_);
    if (b_ > z_c_) mass_a_ = a3 == 0.0 ? a1 * std::log(b_ / z_c_) : a1 * (std::pow(z_c_, -a3) - std::pow(b_, -a3)) / a3;
    mass_b_ = a1 * std::pow(b_, -1.0 - a3) * std::exp(-a2 * b_) / a2;
    // accepted intensity = nu((z_c, inf)) = a1 a2^{a3} Gamma(-a3, a2 z_c)
    rate_ = mass_a_ + mass_b_;
}

void JumpSampler::sample(double dt, std::mt19937_64& rng, JumpBatch& out) const {
    out.sizes.clear();
    out.offsets.clear();
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double a2 = nu_.a2(), a3 = nu_.a3();
    auto emit = [&](double z) {
        out.sizes.push_back(std::pow(z, p_));
        out.offsets.push_back(dt * unif(rng));
    };

    if (a3 < 0.0) {
        std::poisson_distribution<long> count(rate_ * dt);
        std::gamma_distribution<double> size(-a3, 1.0 / a2);
        const long n = count(rng);
        for (long k = 0; k < n; ++k) emit(size(rng));
        return;
    }

    if (mass_a_ > 0.0) {
        std::poisson_distribution<long> count(mass_a_ * dt);
        const long n = count(rng);
        for (long k = 0; k < n; ++k) {
            // inverse CDF of z^{-1-a3} on (z_c, b), accept with e^{-a2 z}
            const double u = unif(rng);
            double z;
            if (a3 == 0.0)
                z = z_c_ * std::exp(u * std::log(b_ / z_c_));
            else
                z = std::pow(std::pow(z_c_, -a3) - u * (std::pow(z_c_, -a3) - std::pow(b_, -a3)), -1.0 / a3);
            if (unif(rng) < std::exp(-a2 * z)) emit(z);
        }
    }
    {
        std::poisson_distribution<long> count(mass_b_ * dt);
        std::exponential_distribution<double> excess(a2);
        const long n = count(rng);
        for (long k = 0; k < n; ++k) {
            const double z = b_ + excess(rng);
            if (unif(rng) < std::pow(z / b_, -1.0 - a3)) emit(z);
        }
    }
}

std::vector<double> sample_jumps(const TemperedStableLevy& nu, double dt, std::mt19937_64& rng, double tol) {
    if (!(dt > 0.0)) throw ConfigError("sample_jumps: dt must be positive");
    JumpSampler s(nu, tol);
    JumpBatch b;
    s.sample(dt, rng, b);
    return std::move(b.sizes);
}

// ---------------------------------------------------------------------------

LiftSimulator::LiftSimulator(const SupOUSVParams& p, const ModelGrids& grids, const SimConfig& cfg, bool with_x)
    : p_(p),
      cfg_(cfg),
      with_x_(with_x),
      r_(grids.pi.nodes),
      R_(grids.rho.nodes),
      d_(grids.rho.weights),
      sampler_(p.levy, cfg.truncation_tol),
      jump_rng_(make_stream(cfg.seed, 0)),
      noise_rng_(make_stream(cfg.seed, 1)) {
    cfg.validate();
    p.validate();
    const auto& c = grids.pi.weights;
    const std::size_t nr = r_.size(), nR = R_.size();

    cum_c_.resize(nr);
    double acc = 0.0;
    for (std::size_t i = 0; i < nr; ++i) cum_c_[i] = (acc += c[i]);
    cum_c_.back() = std::max(cum_c_.back(), 1.0);

    const double dt = cfg.dt;
    const double m = sampler_.drift_rate();
    decay_r_.resize(nr);
    drift_y_.resize(nr);
    double inv_r = 0.0;
    for (std::size_t i = 0; i < nr; ++i) {
        decay_r_[i] = std::exp(-r_[i] * dt);
        drift_y_[i] = c[i] * m * (-std::expm1(-r_[i] * dt)) / r_[i];
        inv_r += c[i] / r_[i];
    }
    const double m1 = levy_moment(p.levy, 1);
    ybar_ = cfg.mean == MeanSource::grid ? m1 * inv_r : m1 * inv_first_moment(p.pi);

    decay_R_.resize(nR);
    noise_.resize(nR);
    for (std::size_t j = 0; j < nR; ++j) {
        decay_R_[j] = 1.0 - R_[j] * dt;
        noise_[j] = p.sigma * std::sqrt(R_[j] * d_[j] * dt);
        stiffness_ = std::max(stiffness_, R_[j] * dt);
    }
    y_.assign(nr, 0.0);
    x_.assign(with_x ? nR : 0, 0.0);
}

void LiftSimulator::step() {
    const double dt = cfg_.dt;
    const double y_start = Y_;

    sampler_.sample(dt, jump_rng_, batch_);
    for (std::size_t i = 0; i < y_.size(); ++i) y_[i] = y_[i] * decay_r_[i] + drift_y_[i];
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (std::size_t k = 0; k < batch_.sizes.size(); ++k) {
        const double u = unif(jump_rng_);
        auto it = std::upper_bound(cum_c_.begin(), cum_c_.end(), u);
        const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(it - cum_c_.begin()), y_.size() - 1);
        y_[i] += batch_.sizes[k] * std::exp(-r_[i] * (dt - batch_.offsets[k]));
    }
    double Y = 0.0;
    for (double v : y_) Y += v;
    Y_ = Y;

    if (with_x_) {
        const double forcing = p_.mu * (y_start - ybar_) * dt;
        const double vol = std::sqrt(std::max(y_start, 0.0));
        double X = 0.0;
        for (std::size_t j = 0; j < x_.size(); ++j) {
            x_[j] = x_[j] * decay_R_[j] + R_[j] * d_[j] * forcing + noise_[j] * vol * normal_(noise_rng_);
            X += x_[j];
        }
        X_ = X;
    }
    t_ += dt;
}

namespace {

std::vector<std::string> stability_warnings(double stiffness) {
    std::vector<std::string> w;
    if (stiffness > 1.0)
        w.push_back("explicit scheme unstable: max R_j dt = " + format_number(stiffness) + " exceeds 1");
    return w;
}

}  // namespace

std::vector<std::string> run_lift(const SupOUSVParams& p, const SimConfig& cfg, bool with_x,
                                  const PathObserver& observe) {
    cfg.validate();
    const ModelGrids grids = ModelGrids::quantile(p, cfg.i_r, cfg.i_R);
    LiftSimulator sim(p, grids, cfg, with_x);
    const std::size_t burn = cfg.burn_in_steps(), n = cfg.horizon_steps();
    for (std::size_t k = 0; k < burn; ++k) sim.step();
    for (std::size_t k = 1; k <= n; ++k) {
        sim.step();
        observe(static_cast<double>(k) * cfg.dt, sim.y(), sim.x());
    }
    return stability_warnings(sim.stiffness());
}

namespace {

SamplePath simulate_impl(const SupOUSVParams& p, const SimConfig& cfg, bool with_x) {
    cfg.validate();
    const ModelGrids grids = ModelGrids::quantile(p, cfg.i_r, cfg.i_R);
    LiftSimulator sim(p, grids, cfg, with_x);
    SamplePath path;
    path.dt = cfg.dt * static_cast<double>(cfg.record_every);
    path.warnings = stability_warnings(with_x ? sim.stiffness() : 0.0);
    const std::size_t burn = cfg.burn_in_steps(), n = cfg.horizon_steps();
    for (std::size_t k = 0; k < burn; ++k) sim.step();
    const std::size_t keep = n / cfg.record_every;
    path.times.reserve(keep);
    path.y.reserve(keep);
    if (with_x) path.x.reserve(keep);
    for (std::size_t k = 1; k <= n; ++k) {
        sim.step();
        if (k % cfg.record_every != 0) continue;
        path.times.push_back(static_cast<double>(k) * cfg.dt);
        path.y.push_back(sim.y());
        if (with_x) path.x.push_back(sim.x());
        if (cfg.keep_components) {
            path.components_y.push_back(sim.y_components());
            if (with_x) path.components_x.push_back(sim.x_components());
        }
    }
    return path;
}

}  // namespace

SamplePath simulate_supou(const SupOUSVParams& p, const SimConfig& cfg) { return simulate_impl(p, cfg, false); }

SamplePath simulate_supousv(const SupOUSVParams& p, const SimConfig& cfg) { return simulate_impl(p, cfg, true); }

SamplePath simulate_classical_sv(const SupOUSVParams& p, double R, const SimConfig& cfg) {
    if (!(R > 0.0)) throw ConfigError("classical SV: R must be positive");
    cfg.validate();
    const ModelGrids grids = ModelGrids::quantile(p, cfg.i_r, 1);
    LiftSimulator sim(p, grids, cfg, false);
    std::mt19937_64 noise = make_stream(cfg.seed, 1);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double dt = cfg.dt;
    const double scale = p.sigma * std::sqrt(R * dt);
    double X = 0.0;
    auto advance = [&] {
        const double y0 = sim.y();
        sim.step();
        X = X * (1.0 - R * dt) + scale * std::sqrt(std::max(y0, 0.0)) * normal(noise);
    };
    SamplePath path;
    path.dt = dt * static_cast<double>(cfg.record_every);
    path.warnings = stability_warnings(R * dt);
    const std::size_t burn = cfg.burn_in_steps(), n = cfg.horizon_steps();
    for (std::size_t k = 0; k < burn; ++k) advance();
    for (std::size_t k = 1; k <= n; ++k) {
        advance();
        if (k % cfg.record_every != 0) continue;
        path.times.push_back(static_cast<double>(k) * dt);
        path.y.push_back(sim.y());
        path.x.push_back(X);
    }
    return path;
}

std::vector<double> reconstruct_wqi(const SeasonalModel& s, const SamplePath& path, double t0) {
    std::vector<double> c(path.times.size());
    for (std::size_t k = 0; k < c.size(); ++k) {
        const double x = path.x.empty() ? 0.0 : path.x[k];
        c[k] = s.concentration(path.times[k] + t0, x);
    }
    return c;
}

std::vector<double> daily_average(std::span<const double> times, std::span<const double> values) {
    if (times.size() != values.size()) throw DataError("daily_average: length mismatch");
    std::vector<double> out;
    if (times.empty()) return out;
    double day = std::floor(times.front() + 1e-9);
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < times.size(); ++k) {
        const double d = std::floor(times[k] + 1e-9);
        if (d != day) {
            out.push_back(sum / static_cast<double>(n));
            day = d;
            sum = 0.0;
            n = 0;
        }
        sum += values[k];
        ++n;
    }
    out.push_back(sum / static_cast<double>(n));
    return out;
}

}  // namespace supousv
