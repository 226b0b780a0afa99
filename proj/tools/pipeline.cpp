#include "pipeline.hpp"

#include "supousv/error.hpp"
#include "supousv/report.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace supousv::pipeline {

using nlohmann::json;

int exit_code(Stage s) {
    switch (s) {
        case Stage::usage: return 2;
        case Stage::input: return 3;
        case Stage::fit_discharge: return 4;
        case Stage::fit_wqi: return 5;
        case Stage::stats: return 6;
        case Stage::simulate: return 7;
        case Stage::riccati: return 8;
        case Stage::output: return 9;
    }
    return 1;
}

std::string_view to_string(Stage s) {
    switch (s) {
        case Stage::usage: return "usage";
        case Stage::input: return "input";
        case Stage::fit_discharge: return "fit-discharge";
        case Stage::fit_wqi: return "fit-wqi";
        case Stage::stats: return "stats";
        case Stage::simulate: return "simulate";
        case Stage::riccati: return "riccati";
        case Stage::output: return "output";
    }
    return "unknown";
}

namespace {

template <class F>
auto in_stage(Stage s, F&& f) {
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(s, e.what());
    }
}

json gamma_json(const GammaMeasure& m) { return {{"alpha", m.alpha()}, {"beta", m.beta()}}; }

json cumulants_json(const CumulantSet& c) {
    return {{"mean", c.mean},
            {"variance", c.variance},
            {"skewness_unnormalized", c.skewness_unnormalized},
            {"kurtosis_unnormalized", c.kurtosis_unnormalized},
            {"skewness_normalized", c.skewness_normalized},
            {"kurtosis_normalized", c.kurtosis_normalized}};
}

template <class T>
json opt_json(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

}  // namespace

DischargeFit fit_discharge(const TimeSeries& y, const DischargeOptions& opt) {
    return in_stage(Stage::fit_discharge, [&] {
        y.validate();
        DischargeFit f;
        f.stats = empirical_stats(y);
        const double bin = opt.bin_width > 0.0 ? opt.bin_width : y.median_spacing();
        f.acf = empirical_acf(y, opt.max_lag, bin, opt.gap_days);
        f.pi = fit_pi(f.acf, opt.max_lag);
        f.levy = fit_levy(f.stats, f.pi.measure, opt.eps);
        f.model = discharge_cumulants(f.levy.levy, f.pi.measure);
        return f;
    });
}

std::optional<double> discharge_at(const TimeSeries& y, double t, double gap_days) {
    const auto& ts = y.times;
    if (ts.empty() || t < ts.front() || t > ts.back()) return std::nullopt;
    const auto it = std::lower_bound(ts.begin(), ts.end(), t);
    const auto k = static_cast<std::size_t>(it - ts.begin());
    if (ts[k] == t) return y.values[k];
    const double t0 = ts[k - 1], t1 = ts[k];
    if (t1 - t0 > gap_days) return std::nullopt;
    const double w = (t - t0) / (t1 - t0);
    return (1.0 - w) * y.values[k - 1] + w * y.values[k];
}

WqiFit fit_wqi(const TimeSeries& c, const TimeSeries& y, const EmpiricalStats& stats_y, const TemperedStableLevy& levy,
               const GammaMeasure& pi, const WqiOptions& opt) {
    return in_stage(Stage::fit_wqi, [&] {
        c.validate();
        WqiFit f;
        f.seasonal = fit_seasonal(c, opt.harmonics, opt.period);
        const TimeSeries& x = f.seasonal.residual;
        f.stats_x = empirical_stats(x);
        const double bin = opt.bin_width > 0.0 ? opt.bin_width : x.median_spacing();
        f.acf = empirical_acf(x, opt.max_lag, bin, opt.gap_days);

        std::vector<double> xs, ys;
        for (std::size_t i = 0; i < x.size(); ++i)
            if (auto v = discharge_at(y, x.times[i], opt.gap_days)) {
                xs.push_back(x.values[i]);
                ys.push_back(*v);
            }
        f.paired = xs.size();
        if (f.paired < 2) throw DataError("fewer than two WQI samples fall inside the discharge record");
        f.cov_xy = empirical_covariance(xs, ys);
        const EmpiricalStats sxp = empirical_stats(xs), syp = empirical_stats(ys);
        f.corr_xy = f.cov_xy / std::sqrt(sxp.variance * syp.variance);

        if (opt.mode == WqiMode::coupled) {
            CoupledOptions co = opt.coupled;
            co.max_lag = opt.max_lag;
            f.report = fit_x_coupled(f.acf, f.stats_x, stats_y, f.cov_xy, levy, pi, co);
        } else {
            const UncoupledFit u = fit_x_uncoupled(f.acf, f.stats_x.variance, stats_y.mean, opt.max_lag);
            FitReport& r = f.report;
            r.model.levy = levy;
            r.model.pi = pi;
            r.model.rho = u.rho.measure;
            r.model.sigma = u.sigma;
            r.model.mu = 0.0;
            r.coupled = false;
            r.variance_x_empirical = f.stats_x.variance;
            r.variance_x_theory = 0.5 * u.sigma * u.sigma * stats_y.mean;
            const SupOUSVParams p = r.model.full();
            r.variance_x_model = x_variance(p, quantile_grid(pi, opt.coupled.grid_size),
                                            quantile_grid(p.rho, opt.coupled.grid_size));
            r.cov_xy_empirical = f.cov_xy;
            r.cov_xy_theory = 0.0;
            r.stages.push_back({"rho_uncoupled", u.rho.residual, u.rho.converged});
            if (u.rho.degenerate) r.warnings.push_back("rho fit hit a parameter boundary");
            if (std::abs(f.corr_xy) > opt.corr_warning) {
                std::ostringstream w;
                w << "covariance mismatch: empirical cov(X,Y) = " << format_number(f.cov_xy)
                  << " (correlation " << format_number(f.corr_xy) << ") but the uncoupled model implies 0";
                r.warnings.push_back(w.str());
            }
        }
        f.report.model.seasonal = f.seasonal.model;
        return f;
    });
}

json to_json(const EmpiricalStats& s) {
    return {{"mean", s.mean},
            {"variance", s.variance},
            {"skewness_normalized", s.shape_defined ? json(s.skewness_normalized) : json(nullptr)},
            {"kurtosis_normalized", s.shape_defined ? json(s.kurtosis_normalized) : json(nullptr)},
            {"n", s.n}};
}

json to_json(const DischargeFit& f) {
    return {{"empirical", to_json(f.stats)},
            {"pi",
             {{"alpha", f.pi.measure.alpha()},
              {"beta", f.pi.measure.beta()},
              {"residual", f.pi.residual},
              {"converged", f.pi.converged},
              {"degenerate", f.pi.degenerate},
              {"points", f.pi.points}}},
            {"levy",
             {{"a1", f.levy.levy.a1()},
              {"a2", f.levy.levy.a2()},
              {"a3", f.levy.levy.a3()},
              {"epsilon", f.levy.levy.epsilon()},
              {"residual", f.levy.residual},
              {"converged", f.levy.converged}}},
            {"model_cumulants", cumulants_json(f.model)}};
}

json to_json(const WqiFit& f) {
    const FitReport& r = f.report;
    json seasonal{{"c_bar", f.seasonal.model.c_bar()}, {"period", f.seasonal.model.period()}, {"rss", f.seasonal.rss}};
    seasonal["harmonics"] = json::array();
    for (const Harmonic& h : f.seasonal.model.harmonics())
        seasonal["harmonics"].push_back({{"amplitude", h.amplitude}, {"phase", h.phase}});
    json stages = json::array();
    for (const StageObjective& s : r.stages)
        stages.push_back({{"stage", s.stage}, {"value", s.value}, {"converged", s.converged}});
    json cands = json::array();
    for (const CoupledCandidate& c : r.candidates)
        cands.push_back({{"alpha_R", c.alpha_R},
                         {"w", c.w},
                         {"acf_residual", c.acf_residual},
                         {"sigma", c.sigma},
                         {"mu", c.mu},
                         {"cov_theory", c.cov_theory},
                         {"cov_rel_error", c.cov_rel_error},
                         {"ok", c.ok}});
    return {{"seasonal", seasonal},
            {"empirical_x", to_json(f.stats_x)},
            {"paired_samples", f.paired},
            {"cov_xy_empirical", f.cov_xy},
            {"corr_xy_empirical", f.corr_xy},
            {"coupled", r.coupled},
            {"w", opt_json(r.w)},
            {"alpha_R_aux", opt_json(r.alpha_R_aux)},
            {"beta_R_aux", opt_json(r.beta_R_aux)},
            {"variance_x_empirical", opt_json(r.variance_x_empirical)},
            {"variance_x_theory", opt_json(r.variance_x_theory)},
            {"variance_x_model", opt_json(r.variance_x_model)},
            {"cov_xy_theory", opt_json(r.cov_xy_theory)},
            {"stages", stages},
            {"candidates", cands},
            {"warnings", r.warnings}};
}

json to_json(const MgfResult& m) {
    return {{"q", m.q},
            {"q_max", m.q_max},
            {"log_mgf", m.log_mgf},
            {"mgf", m.mgf},
            {"verdict", std::string(to_string(m.verdict))},
            {"converged", m.converged},
            {"guard_tripped", m.guard_tripped},
            {"guard_level", m.guard_level},
            {"psi_sup", m.psi_sup},
            {"psi_bound", m.psi_bound},
            {"psi_bound_ok", m.psi_bound_ok},
            {"t_final", m.t_final},
            {"tail", m.tail},
            {"steps", m.steps}};
}

json model_json(const ModelConfig& cfg) {
    json j = json::object();
    if (cfg.levy)
        j["levy"] = {{"a1", cfg.levy->a1()},
                     {"a2", cfg.levy->a2()},
                     {"a3", cfg.levy->a3()},
                     {"epsilon", cfg.levy->epsilon()}};
    if (cfg.pi) j["pi"] = gamma_json(*cfg.pi);
    if (cfg.rho) j["rho"] = gamma_json(*cfg.rho);
    if (cfg.sigma) j["sigma"] = *cfg.sigma;
    if (cfg.mu) j["mu"] = *cfg.mu;
    if (cfg.seasonal) {
        json h = json::array();
        for (const Harmonic& x : cfg.seasonal->harmonics()) h.push_back({{"amplitude", x.amplitude}, {"phase", x.phase}});
        j["seasonal"] = {{"c_bar", cfg.seasonal->c_bar()}, {"period", cfg.seasonal->period()}, {"harmonics", h}};
    }
    return j;
}

json model_stats(const ModelConfig& cfg, const StatsOptions& opt) {
    return in_stage(Stage::stats, [&] {
        if (!cfg.has_discharge()) throw ConfigError("stats: the model needs levy.* and pi.* keys");
        const CumulantSet c = discharge_cumulants(*cfg.levy, *cfg.pi);
        json y = cumulants_json(c);
        y["inv_first_moment"] = inv_first_moment(*cfg.pi);
        json yacf = json::array();
        for (double h : opt.lags) yacf.push_back({{"lag", h}, {"value", discharge_acf(*cfg.pi, h)}});
        y["acf"] = yacf;
        json out{{"model", model_json(cfg)}, {"grid_size", opt.grid_size}, {"discharge", y}};
        if (!cfg.has_full_model()) return out;

        const SupOUSVParams p = cfg.full();
        p.validate();
        const ModelGrids g = ModelGrids::quantile(p, opt.grid_size, opt.grid_size);
        const CouplingIntegrals k(g.pi, g.rho);
        const VarianceTerms v = x_variance_terms(p, k);
        json xacf = json::array();
        for (double h : opt.lags) xacf.push_back({{"lag", h}, {"value", x_acf(p, k, h)}});
        const TailExponents tail = acf_tail_exponents(p);
        out["x"] = {{"variance", v.total()},
                    {"variance_diffusion", v.diffusion},
                    {"variance_drift", v.drift},
                    {"cov_xy", xy_covariance(p, k)},
                    {"acf", xacf},
                    {"tail", {{"regime", std::string(to_string(tail.regime))}, {"exponents", tail.exponents}}},
                    {"acf_vanishes", p.acf_vanishes()},
                    {"q_max", q_max(p.levy, p.sigma, p.mu)}};
        return out;
    });
}

}  // namespace supousv::pipeline
