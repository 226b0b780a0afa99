// Command-line front end. Every subcommand writes its artifacts into the
// output directory (--out, else $SUPOUSV_OUT_DIR, else the working
// directory) and exits with a stage-specific code on failure.

#include "CLI11.hpp"
#include "json.hpp"
#include "pipeline.hpp"

#include "supousv/cd_events.hpp"
#include "supousv/error.hpp"
#include "supousv/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace supousv;
using namespace supousv::pipeline;

namespace {

struct Common {
    std::string out_dir;
    bool quiet = false;
};

Common g_common;

fs::path out_path(const std::string& name) {
    fs::path dir = g_common.out_dir;
    if (dir.empty()) {
        const char* env = std::getenv("SUPOUSV_OUT_DIR");
        dir = env && *env ? env : ".";
    }
    try {
        fs::create_directories(dir);
    } catch (const std::exception& e) {
        throw StageError(Stage::output, e.what());
    }
    return dir / name;
}

void note(const std::string& msg) {
    if (!g_common.quiet) std::cerr << msg << '\n';
}

void emit_json(const std::string& name, const json& j) {
    try {
        write_json(out_path(name), j);
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(Stage::output, e.what());
    }
    note("wrote " + out_path(name).string());
}

/// CSV with a leading text column.
void emit_labelled_csv(const std::string& name, const std::vector<std::string>& header,
                       const std::vector<std::pair<std::string, std::vector<double>>>& rows) {
    std::ofstream out(out_path(name));
    if (!out) throw StageError(Stage::output, "cannot open " + out_path(name).string() + " for writing");
    for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
    out << '\n';
    for (const auto& [label, vals] : rows) {
        out << label;
        for (double v : vals) out << ',' << format_number(v);
        out << '\n';
    }
    note("wrote " + out_path(name).string());
}

void emit_csv(const std::string& name, const std::vector<std::string>& header,
              const std::vector<std::vector<double>>& cols) {
    try {
        write_csv(out_path(name), header, cols);
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(Stage::output, e.what());
    }
    note("wrote " + out_path(name).string());
}

void emit_text(const std::string& name, const std::string& text) {
    std::ofstream out(out_path(name));
    if (!out) throw StageError(Stage::output, "cannot open " + out_path(name).string() + " for writing");
    out << text;
    note("wrote " + out_path(name).string());
}

void in_stats(const std::function<void()>& f) {
    try {
        f();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(Stage::stats, e.what());
    }
}

EmpiricalStats in_stage_stats_y(const TimeSeries& y) {
    try {
        return empirical_stats(y);
    } catch (const std::exception& e) {
        throw StageError(Stage::input, e.what());
    }
}

SeriesKind parse_kind(const std::string& k) {
    if (k == "discharge") return SeriesKind::discharge;
    if (k == "concentration") return SeriesKind::concentration;
    if (k == "residual") return SeriesKind::log_residual;
    throw StageError(Stage::usage, "unknown series kind '" + k + "'");
}

LoadedSeries load(const std::string& path, SeriesKind kind, const std::string& column) {
    try {
        LoadedSeries s = load_timeseries(path, kind, column);
        s.series.validate();
        for (const std::string& w : s.warnings) note("warning: " + w);
        return s;
    } catch (const std::exception& e) {
        throw StageError(Stage::input, e.what());
    }
}

ModelConfig config_from(const std::string& path) {
    try {
        return load_config(path);
    } catch (const std::exception& e) {
        throw StageError(Stage::usage, e.what());
    }
}

std::vector<std::pair<std::string, std::vector<double>>> acf_rows(const std::string& label,
                                                                  std::span<const AcfPoint> acf) {
    std::vector<std::pair<std::string, std::vector<double>>> rows;
    for (const AcfPoint& a : acf) rows.push_back({label, {a.lag, a.value, static_cast<double>(a.pairs)}});
    return rows;
}

json cd_json(const std::vector<CdEvent>& events, double quantile) {
    std::size_t cw = 0, ccw = 0, mixed = 0;
    json ev = json::array();
    for (const CdEvent& e : events) {
        switch (e.direction) {
            case LoopDirection::clockwise: ++cw; break;
            case LoopDirection::counterclockwise: ++ccw; break;
            case LoopDirection::mixed: ++mixed; break;
        }
        ev.push_back({{"first_day", e.first_day},
                      {"last_day", e.last_day},
                      {"signed_area", e.signed_area},
                      {"direction", std::string(to_string(e.direction))},
                      {"y", e.y},
                      {"c", e.c}});
    }
    return {{"threshold_quantile", quantile},
            {"counts", {{"clockwise", cw}, {"counterclockwise", ccw}, {"mixed", mixed}}},
            {"events", ev}};
}

// ---------------------------------------------------------------- ingest

struct IngestArgs {
    std::string input, kind = "discharge", column = "value";
};

int cmd_ingest(const IngestArgs& a) {
    const LoadedSeries s = load(a.input, parse_kind(a.kind), a.column);
    const TimeSeries& ts = s.series;
    json j{{"input", a.input},
           {"kind", a.kind},
           {"n", ts.size()},
           {"first_time", ts.size() ? json(ts.times.front()) : json(nullptr)},
           {"last_time", ts.size() ? json(ts.times.back()) : json(nullptr)},
           {"regular", ts.regular()},
           {"median_spacing", ts.size() > 1 ? json(ts.median_spacing()) : json(nullptr)},
           {"warnings", s.warnings}};
    if (ts.size() >= 2) j["empirical"] = to_json(empirical_stats(ts));
    emit_json("ingest.json", j);
    emit_csv("series.csv", {"time", "value"}, {ts.times, ts.values});
    return 0;
}

// ---------------------------------------------------------------- stats

struct StatsArgs {
    std::string config;
    std::size_t grid = kDefaultGridSize;
    std::vector<double> lags{0.0, 0.1, 1.0, 10.0, 100.0, 730.0};
};

void write_model_acf(const ModelConfig& cfg, std::span<const AcfPoint> acf_y, std::span<const AcfPoint> acf_x,
                     std::size_t grid) {
    std::vector<std::pair<std::string, std::vector<double>>> rows;
    for (const AcfPoint& a : acf_y) rows.push_back({"discharge", {a.lag, discharge_acf(*cfg.pi, a.lag)}});
    if (cfg.has_full_model() && !acf_x.empty()) {
        const SupOUSVParams p = cfg.full();
        const ModelGrids g = ModelGrids::quantile(p, grid, grid);
        const CouplingIntegrals k(g.pi, g.rho);
        for (const AcfPoint& a : acf_x) rows.push_back({"wqi", {a.lag, x_acf(p, k, a.lag)}});
    }
    emit_labelled_csv("acf_model.csv", {"series", "lag", "acf"}, rows);
}

int cmd_stats(const StatsArgs& a) {
    const ModelConfig cfg = config_from(a.config);
    StatsOptions so;
    so.grid_size = a.grid;
    so.lags = a.lags;
    emit_json("stats.json", model_stats(cfg, so));
    std::vector<AcfPoint> ly, lx;
    for (double h : a.lags) {
        ly.push_back({h, 0.0, 0});
        lx.push_back({h, 0.0, 0});
    }
    in_stats([&] { write_model_acf(cfg, ly, lx, a.grid); });
    return 0;
}

// ---------------------------------------------------------------- acf

struct AcfArgs {
    std::string input, kind = "residual", column = "value";
    double max_lag = 730.0, bin = 0.0, gap = kDefaultGapDays;
};

int cmd_acf(const AcfArgs& a) {
    const LoadedSeries s = load(a.input, parse_kind(a.kind), a.column);
    std::vector<AcfPoint> acf;
    try {
        const double bin = a.bin > 0.0 ? a.bin : s.series.median_spacing();
        acf = empirical_acf(s.series, a.max_lag, bin, a.gap);
    } catch (const std::exception& e) {
        throw StageError(Stage::input, e.what());
    }
    emit_labelled_csv("acf_emp.csv", {"series", "lag", "acf", "pairs"}, acf_rows(a.kind, acf));
    return 0;
}

// ---------------------------------------------------------------- fits

struct FitArgs {
    std::string discharge, discharge_column = "value";
    std::string wqi, wqi_column = "value";
    std::string config;
    double eps = 0.1;
    double max_lag_y = 30.0, max_lag_x = 730.0;
    double bin_y = 0.0, bin_x = 0.0, gap = kDefaultGapDays;
    bool coupled = false, uncoupled = false;
    double alpha_step = 0.005;
    std::size_t grid = 512;
    bool discharge_only = false;
    std::size_t stats_grid = kDefaultGridSize;
    // run only
    double sim_years = 0.0;
    double sim_burn_years = 50.0;
    double dt = 0.02;
    std::size_t nodes = 256;
    std::uint64_t seed = kDefaultSeed;
    double cd_quantile = 0.9;
    std::vector<double> riccati_q;
};

DischargeOptions discharge_options(const FitArgs& a) {
    DischargeOptions o;
    o.eps = a.eps;
    o.max_lag = a.max_lag_y;
    o.bin_width = a.bin_y;
    o.gap_days = a.gap;
    return o;
}

WqiOptions wqi_options(const FitArgs& a) {
    WqiOptions o;
    o.mode = a.uncoupled ? WqiMode::uncoupled : WqiMode::coupled;
    o.max_lag = a.max_lag_x;
    o.bin_width = a.bin_x;
    o.gap_days = a.gap;
    o.coupled.alpha_step = a.alpha_step;
    o.coupled.grid_size = a.grid;
    return o;
}

json inputs_json(const FitArgs& a) {
    return {{"discharge", a.discharge},
            {"wqi", a.wqi.empty() ? json(nullptr) : json(a.wqi)},
            {"eps", a.eps},
            {"max_lag_discharge", a.max_lag_y},
            {"max_lag_wqi", a.max_lag_x},
            {"gap_days", a.gap},
            {"mode", a.uncoupled ? "uncoupled" : "coupled"},
            {"alpha_step", a.alpha_step},
            {"grid_size", a.grid}};
}

int cmd_fit_discharge(const FitArgs& a) {
    const LoadedSeries y = load(a.discharge, SeriesKind::discharge, a.discharge_column);
    const DischargeFit f = fit_discharge(y.series, discharge_options(a));
    ModelConfig cfg;
    cfg.levy = f.levy.levy;
    cfg.pi = f.pi.measure;
    json report{{"command", "fit-discharge"},
                {"inputs", inputs_json(a)},
                {"discharge", to_json(f)},
                {"wqi", nullptr},
                {"model", model_json(cfg)},
                {"warnings", y.warnings}};
    if (!f.levy.converged) report["warnings"].push_back("levy moment matching did not reach residual 1e-10");
    emit_json("fit_report.json", report);
    emit_text("model.cfg", format_config(cfg));
    emit_labelled_csv("acf_emp.csv", {"series", "lag", "acf", "pairs"}, acf_rows("discharge", f.acf));
    return 0;
}

int cmd_fit_wqi(const FitArgs& a) {
    const ModelConfig base = config_from(a.config);
    if (!base.has_discharge())
        throw StageError(Stage::usage, "fit-wqi: --config must hold a discharge model (levy.*, pi.*)");
    const LoadedSeries y = load(a.discharge, SeriesKind::discharge, a.discharge_column);
    const LoadedSeries c = load(a.wqi, SeriesKind::concentration, a.wqi_column);
    const EmpiricalStats sy = in_stage_stats_y(y.series);
    const WqiFit f = fit_wqi(c.series, y.series, sy, *base.levy, *base.pi, wqi_options(a));
    for (const std::string& w : f.report.warnings) note("warning: " + w);
    json warnings = y.warnings;
    for (const std::string& w : c.warnings) warnings.push_back(w);
    for (const std::string& w : f.report.warnings) warnings.push_back(w);
    json report{{"command", "fit-wqi"},
                {"inputs", inputs_json(a)},
                {"discharge", nullptr},
                {"wqi", to_json(f)},
                {"model", model_json(f.report.model)},
                {"warnings", warnings}};
    emit_json("fit_report.json", report);
    emit_text("model.cfg", format_config(f.report.model));
    emit_labelled_csv("acf_emp.csv", {"series", "lag", "acf", "pairs"}, acf_rows("wqi", f.acf));
    return 0;
}

// ---------------------------------------------------------------- simulate

struct SimArgs {
    std::string config;
    double years = 10.0, burn_years = 50.0, dt = 0.02;
    std::size_t nodes = 256;
    std::uint64_t seed = kDefaultSeed;
    double cd_quantile = 0.9;
    bool discharge_only = false;
    double sample_every = 0.0;  // days; instantaneous discharge samples (0: none)
    double wqi_every = 0.0;     // days; instantaneous concentration samples (0: none)
};

struct DailyPath {
    std::vector<double> day, y, x, c;
    std::vector<double> ty, ys, tc, cs;  // instantaneous samples
};

/// Steps per sample; the spacing must be a whole number of steps.
std::size_t steps_per(double every, double dt, const char* what) {
    if (every <= 0.0) return 0;
    const double k = std::round(every / dt);
    if (k < 1.0 || std::abs(k * dt - every) > 1e-9 * every)
        throw ConfigError(std::string(what) + " must be a positive multiple of --dt");
    return static_cast<std::size_t>(k);
}

DailyPath simulate_daily(const ModelConfig& cfg, const SimArgs& a) {
    try {
        SimConfig sc;
        sc.dt = a.dt;
        sc.horizon = a.years * kDaysPerYear;
        sc.burn_in = a.burn_years * kDaysPerYear;
        sc.i_r = a.nodes;
        sc.i_R = a.nodes;
        sc.seed = a.seed;
        sc.validate();
        const bool with_x = !a.discharge_only && cfg.has_full_model();
        if (!cfg.has_discharge()) throw ConfigError("simulate: the model needs levy.* and pi.* keys");
        // rho and sigma are unused when X is not simulated.
        const SupOUSVParams p =
            with_x ? cfg.full() : SupOUSVParams{*cfg.levy, *cfg.pi, GammaMeasure(1.0, 1.0), 0.0, 0.0};
        const std::size_t ky = steps_per(a.sample_every, a.dt, "--sample-every");
        const std::size_t kc = steps_per(a.wqi_every, a.dt, "--wqi-every");
        if (kc && !(with_x && cfg.seasonal)) throw ConfigError("--wqi-every needs rho, sigma and seasonal.* keys");
        DailyPath d;
        double cur = -1.0, sy = 0.0, sx = 0.0;
        std::size_t cnt = 0, step = 0;
        auto flush = [&] {
            if (cnt == 0) return;
            d.day.push_back(cur);
            d.y.push_back(sy / static_cast<double>(cnt));
            if (with_x) d.x.push_back(sx / static_cast<double>(cnt));
        };
        const auto warnings = run_lift(p, sc, with_x, [&](double t, double y, double x) {
            const double rel = t;  // measured from the end of burn-in
            if (ky && step % ky == 0) {
                d.ty.push_back(rel);
                d.ys.push_back(y);
            }
            if (kc && step % kc == 0) {
                d.tc.push_back(rel);
                d.cs.push_back(cfg.seasonal->concentration(rel, x));
            }
            ++step;
            const double day = std::floor(rel * (1.0 + 1e-12));
            if (day != cur) {
                flush();
                cur = day;
                sy = sx = 0.0;
                cnt = 0;
            }
            sy += y;
            sx += x;
            ++cnt;
        });
        flush();
        for (const std::string& w : warnings) note("warning: " + w);
        if (with_x && cfg.seasonal)
            for (std::size_t i = 0; i < d.day.size(); ++i) d.c.push_back(cfg.seasonal->concentration(d.day[i], d.x[i]));
        return d;
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(Stage::simulate, e.what());
    }
}

void emit_path(const DailyPath& d, double cd_quantile) {
    std::vector<std::string> h{"day", "y"};
    std::vector<std::vector<double>> cols{d.day, d.y};
    if (!d.x.empty()) {
        h.push_back("x");
        cols.push_back(d.x);
    }
    if (!d.c.empty()) {
        h.push_back("c");
        cols.push_back(d.c);
    }
    emit_csv("path.csv", h, cols);
    if (!d.ty.empty()) emit_csv("discharge.csv", {"time", "value"}, {d.ty, d.ys});
    if (!d.tc.empty()) emit_csv("wqi.csv", {"time", "value"}, {d.tc, d.cs});
    if (!d.c.empty()) {
        std::vector<CdEvent> ev;
        try {
            ev = extract_cd_events(d.y, d.c, cd_quantile);
        } catch (const std::exception& e) {
            throw StageError(Stage::simulate, e.what());
        }
        emit_json("cd_events.json", cd_json(ev, cd_quantile));
    }
}

int cmd_simulate(const SimArgs& a) {
    const ModelConfig cfg = config_from(a.config);
    emit_path(simulate_daily(cfg, a), a.cd_quantile);
    return 0;
}

// ---------------------------------------------------------------- riccati

struct RiccatiArgs {
    std::string config;
    std::vector<double> q{0.05, 0.1};
    std::size_t nodes = 256;
    double guard_a2 = 0.0;
};

json riccati_json(const ModelConfig& cfg, const std::vector<double>& qs, std::size_t nodes, double guard_a2) {
    try {
        const SupOUSVParams p = cfg.full();
        const ModelGrids g = ModelGrids::quantile(p, nodes, nodes);
        RiccatiOptions opt;
        if (guard_a2 > 0.0) opt.guard_a2 = guard_a2;
        json out{{"model", model_json(cfg)}, {"grid_size", nodes}, {"results", json::array()}};
        for (double q : qs) out["results"].push_back(to_json(mgf(p, q, g, opt)));
        return out;
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(Stage::riccati, e.what());
    }
}

int cmd_riccati(const RiccatiArgs& a) {
    emit_json("riccati.json", riccati_json(config_from(a.config), a.q, a.nodes, a.guard_a2));
    return 0;
}

// ---------------------------------------------------------------- cdcurve

struct CdArgs {
    std::string discharge, discharge_column = "value", wqi, wqi_column = "value";
    double quantile = 0.9;
};

std::map<long long, double> day_means(const TimeSeries& s) {
    std::map<long long, std::pair<double, std::size_t>> acc;
    for (std::size_t i = 0; i < s.size(); ++i) {
        auto& [sum, n] = acc[static_cast<long long>(std::floor(s.times[i]))];
        sum += s.values[i];
        ++n;
    }
    std::map<long long, double> out;
    for (const auto& [d, v] : acc) out[d] = v.first / static_cast<double>(v.second);
    return out;
}

int cmd_cdcurve(const CdArgs& a) {
    const LoadedSeries y = load(a.discharge, SeriesKind::discharge, a.discharge_column);
    const LoadedSeries c = load(a.wqi, SeriesKind::concentration, a.wqi_column);
    const auto dy = day_means(y.series), dc = day_means(c.series);
    // Days covered by both records, in order; events never bridge a missing day.
    std::vector<double> yy, cc;
    std::vector<CdEvent> all;
    long long prev = 0;
    auto flush = [&] {
        if (yy.size() >= 3) {
            auto ev = extract_cd_events(yy, cc, a.quantile);
            all.insert(all.end(), ev.begin(), ev.end());
        }
        yy.clear();
        cc.clear();
    };
    for (const auto& [d, v] : dy) {
        const auto it = dc.find(d);
        if (it == dc.end()) continue;
        if (!yy.empty() && d != prev + 1) flush();
        yy.push_back(v);
        cc.push_back(it->second);
        prev = d;
    }
    flush();
    emit_json("cd_events.json", cd_json(all, a.quantile));
    return 0;
}

// ---------------------------------------------------------------- sweep

struct SweepArgs : FitArgs {
    std::string sweep;
};

int cmd_sweep(const SweepArgs& a) {
    const auto eq = a.sweep.find('=');
    if (eq == std::string::npos) throw StageError(Stage::usage, "--sweep expects name=v1,v2,...");
    const std::string name = a.sweep.substr(0, eq);
    std::vector<double> values;
    std::stringstream ss(a.sweep.substr(eq + 1));
    for (std::string tok; std::getline(ss, tok, ',');) {
        try {
            std::size_t used = 0;
            values.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw StageError(Stage::usage, "--sweep: bad value '" + tok + "'");
        }
    }
    if (values.empty()) throw StageError(Stage::usage, "--sweep: no values");
    const LoadedSeries y = load(a.discharge, SeriesKind::discharge, a.discharge_column);

    if (name == "eps") {
        std::vector<std::vector<double>> cols(6);
        for (double e : values) {
            FitArgs b = a;
            b.eps = e;
            const DischargeFit f = fit_discharge(y.series, discharge_options(b));
            const double row[] = {e, f.levy.levy.a1(), f.levy.levy.a2(), f.levy.levy.a3(), f.levy.residual,
                                  f.pi.measure.alpha()};
            for (std::size_t k = 0; k < 6; ++k) cols[k].push_back(row[k]);
        }
        emit_csv("sweep_eps.csv", {"eps", "a1", "a2", "a3", "residual", "alpha_r"}, cols);
        return 0;
    }
    if (name == "maxlag") {
        if (a.wqi.empty()) throw StageError(Stage::usage, "--sweep maxlag needs --wqi");
        const LoadedSeries c = load(a.wqi, SeriesKind::concentration, a.wqi_column);
        const DischargeFit d = fit_discharge(y.series, discharge_options(a));
        std::vector<std::vector<double>> cols(7);
        for (double L : values) {
            FitArgs b = a;
            b.max_lag_x = L;
            const WqiFit f = fit_wqi(c.series, y.series, d.stats, d.levy.levy, d.pi.measure, wqi_options(b));
            const GammaMeasure& rho = *f.report.model.rho;
            const double row[] = {L,
                                  rho.alpha(),
                                  rho.beta(),
                                  *f.report.model.sigma,
                                  *f.report.model.mu,
                                  f.report.w.value_or(0.0),
                                  rho.alpha() <= 2.0 ? 1.0 : 0.0};
            for (std::size_t k = 0; k < 7; ++k) cols[k].push_back(row[k]);
        }
        emit_csv("sweep_maxlag.csv", {"max_lag", "alpha_R", "beta_R", "sigma", "mu", "w", "long_memory"}, cols);
        return 0;
    }
    throw StageError(Stage::usage, "--sweep: unknown parameter '" + name + "' (eps or maxlag)");
}

// ---------------------------------------------------------------- run

int cmd_run(const FitArgs& a) {
    const LoadedSeries y = load(a.discharge, SeriesKind::discharge, a.discharge_column);
    const bool with_wqi = !a.discharge_only && !a.wqi.empty();
    if (!a.discharge_only && a.wqi.empty())
        throw StageError(Stage::usage, "run: --wqi is required unless --discharge-only is given");
    std::optional<LoadedSeries> c;
    if (with_wqi) c = load(a.wqi, SeriesKind::concentration, a.wqi_column);

    const DischargeFit d = fit_discharge(y.series, discharge_options(a));
    note("discharge fit: alpha_r " + format_number(d.pi.measure.alpha()) + ", a3 " +
         format_number(d.levy.levy.a3()));
    json warnings = y.warnings;
    if (!d.levy.converged) warnings.push_back("levy moment matching did not reach residual 1e-10");

    ModelConfig cfg;
    cfg.levy = d.levy.levy;
    cfg.pi = d.pi.measure;
    json wqi = nullptr;
    std::vector<AcfPoint> acf_x;
    if (with_wqi) {
        for (const std::string& w : c->warnings) warnings.push_back(w);
        const WqiFit f = fit_wqi(c->series, y.series, d.stats, d.levy.levy, d.pi.measure, wqi_options(a));
        for (const std::string& w : f.report.warnings) {
            note("warning: " + w);
            warnings.push_back(w);
        }
        cfg = f.report.model;
        wqi = to_json(f);
        acf_x = f.acf;
    }

    json report{{"command", "run"},
                {"inputs", inputs_json(a)},
                {"discharge", to_json(d)},
                {"wqi", wqi},
                {"model", model_json(cfg)},
                {"warnings", warnings}};
    emit_json("fit_report.json", report);
    emit_text("model.cfg", format_config(cfg));
    auto rows = acf_rows("discharge", d.acf);
    if (with_wqi) {
        auto rx = acf_rows("wqi", acf_x);
        rows.insert(rows.end(), rx.begin(), rx.end());
    }
    emit_labelled_csv("acf_emp.csv", {"series", "lag", "acf", "pairs"}, rows);

    StatsOptions so;
    so.grid_size = a.stats_grid;
    emit_json("stats.json", model_stats(cfg, so));
    in_stats([&] { write_model_acf(cfg, d.acf, acf_x, a.stats_grid); });

    if (a.sim_years > 0.0) {
        SimArgs s;
        s.years = a.sim_years;
        s.burn_years = a.sim_burn_years;
        s.dt = a.dt;
        s.nodes = a.nodes;
        s.seed = a.seed;
        s.cd_quantile = a.cd_quantile;
        s.discharge_only = !with_wqi;
        emit_path(simulate_daily(cfg, s), a.cd_quantile);
    }
    if (!a.riccati_q.empty() && cfg.has_full_model())
        emit_json("riccati.json", riccati_json(cfg, a.riccati_q, a.nodes, 0.0));
    return 0;
}

void add_fit_options(CLI::App* sc, FitArgs& a, bool need_wqi) {
    sc->add_option("--discharge", a.discharge, "discharge CSV (time column first)")->required()->check(CLI::ExistingFile);
    sc->add_option("--discharge-column", a.discharge_column, "discharge value column")->capture_default_str();
    auto* w = sc->add_option("--wqi", a.wqi, "concentration CSV")->check(CLI::ExistingFile);
    if (need_wqi) w->required();
    sc->add_option("--wqi-column", a.wqi_column, "concentration value column")->capture_default_str();
    sc->add_option("--eps", a.eps, "regularization exponent")->capture_default_str()->check(CLI::NonNegativeNumber);
    sc->add_option("--max-lag-discharge", a.max_lag_y, "ACF window for discharge, days")->capture_default_str();
    sc->add_option("--max-lag-wqi", a.max_lag_x, "ACF window for the WQI, days")->capture_default_str();
    sc->add_option("--bin-discharge", a.bin_y, "discharge ACF bin width, days (0: median spacing)");
    sc->add_option("--bin-wqi", a.bin_x, "WQI ACF bin width, days (0: median spacing)");
    sc->add_option("--gap-days", a.gap, "spacing that declares a data gap")->capture_default_str();
    auto* c = sc->add_flag("--coupled", a.coupled, "two-step coupled fit (default)");
    auto* u = sc->add_flag("--uncoupled", a.uncoupled, "mu = 0 fit");
    c->excludes(u);
    sc->add_option("--alpha-step", a.alpha_step, "alpha_R grid step")->capture_default_str();
    sc->add_option("--grid", a.grid, "quadrature nodes per measure in the coupled fit")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"supOUSV: supOU discharge and stochastic-volatility water quality model"};
    app.require_subcommand(1);
    app.add_option("--out", g_common.out_dir, "output directory (default $SUPOUSV_OUT_DIR or .)");
    app.add_flag("-q,--quiet", g_common.quiet, "suppress progress messages");

    std::function<int()> action;

    IngestArgs ia;
    auto* ingest = app.add_subcommand("ingest", "validate a CSV series and summarize it");
    ingest->add_option("--input", ia.input)->required()->check(CLI::ExistingFile);
    ingest->add_option("--kind", ia.kind, "discharge | concentration | residual")->capture_default_str();
    ingest->add_option("--column", ia.column)->capture_default_str();
    ingest->callback([&] { action = [&] { return cmd_ingest(ia); }; });

    StatsArgs sa;
    auto* stats = app.add_subcommand("stats", "closed-form statistics of a model");
    stats->add_option("--config", sa.config)->required()->check(CLI::ExistingFile);
    stats->add_option("--grid", sa.grid)->capture_default_str();
    stats->add_option("--lags", sa.lags, "lags in days")->delimiter(',');
    stats->callback([&] { action = [&] { return cmd_stats(sa); }; });

    AcfArgs aa;
    auto* acf = app.add_subcommand("acf", "empirical autocorrelation of a series");
    acf->add_option("--input", aa.input)->required()->check(CLI::ExistingFile);
    acf->add_option("--kind", aa.kind)->capture_default_str();
    acf->add_option("--column", aa.column)->capture_default_str();
    acf->add_option("--max-lag", aa.max_lag)->capture_default_str();
    acf->add_option("--bin", aa.bin, "bin width, days (0: median spacing)");
    acf->add_option("--gap-days", aa.gap)->capture_default_str();
    acf->callback([&] { action = [&] { return cmd_acf(aa); }; });

    FitArgs fd;
    auto* fitd = app.add_subcommand("fit-discharge", "fit pi and the Levy measure to a discharge record");
    add_fit_options(fitd, fd, false);
    fitd->callback([&] { action = [&] { return cmd_fit_discharge(fd); }; });

    FitArgs fw;
    auto* fitw = app.add_subcommand("fit-wqi", "fit seasonality, rho, sigma and mu to a WQI record");
    add_fit_options(fitw, fw, true);
    fitw->add_option("--config", fw.config, "discharge model from fit-discharge")->required()->check(CLI::ExistingFile);
    fitw->callback([&] { action = [&] { return cmd_fit_wqi(fw); }; });

    SimArgs si;
    auto* sim = app.add_subcommand("simulate", "simulate the Markovian lift; writes daily means");
    sim->add_option("--config", si.config)->required()->check(CLI::ExistingFile);
    sim->add_option("--years", si.years)->capture_default_str()->check(CLI::PositiveNumber);
    sim->add_option("--burn-in-years", si.burn_years)->capture_default_str()->check(CLI::NonNegativeNumber);
    sim->add_option("--dt", si.dt, "step, days")->capture_default_str()->check(CLI::PositiveNumber);
    sim->add_option("--nodes", si.nodes, "lift size per measure")->capture_default_str();
    sim->add_option("--seed", si.seed)->capture_default_str();
    sim->add_option("--cd-quantile", si.cd_quantile)->capture_default_str();
    sim->add_flag("--discharge-only", si.discharge_only);
    sim->add_option("--sample-every", si.sample_every, "also write discharge.csv sampled every this many days");
    sim->add_option("--wqi-every", si.wqi_every, "also write wqi.csv sampled every this many days");
    sim->callback([&] { action = [&] { return cmd_simulate(si); }; });

    RiccatiArgs ra;
    auto* ric = app.add_subcommand("riccati", "moment generating function E[exp(qX)]");
    ric->add_option("--config", ra.config)->required()->check(CLI::ExistingFile);
    ric->add_option("--q", ra.q)->delimiter(',')->capture_default_str();
    ric->add_option("--nodes", ra.nodes)->capture_default_str();
    ric->add_option("--guard-a2", ra.guard_a2, "guard level (default: levy.a2)");
    ric->callback([&] { action = [&] { return cmd_riccati(ra); }; });

    CdArgs ca;
    auto* cd = app.add_subcommand("cdcurve", "concentration-discharge event loops from daily means");
    cd->add_option("--discharge", ca.discharge)->required()->check(CLI::ExistingFile);
    cd->add_option("--discharge-column", ca.discharge_column)->capture_default_str();
    cd->add_option("--wqi", ca.wqi)->required()->check(CLI::ExistingFile);
    cd->add_option("--wqi-column", ca.wqi_column)->capture_default_str();
    cd->add_option("--quantile", ca.quantile)->capture_default_str();
    cd->callback([&] { action = [&] { return cmd_cdcurve(ca); }; });

    SweepArgs sw;
    auto* sweep = app.add_subcommand("sweep", "sensitivity sweep: eps=v1,v2,... or maxlag=v1,v2,...");
    add_fit_options(sweep, sw, false);
    sweep->add_option("--sweep", sw.sweep)->required();
    sweep->callback([&] { action = [&] { return cmd_sweep(sw); }; });

    FitArgs ru;
    auto* run = app.add_subcommand("run", "fit-discharge, fit-wqi, stats and optional simulate/riccati");
    add_fit_options(run, ru, false);
    run->add_flag("--discharge-only", ru.discharge_only, "skip the WQI stages");
    run->add_option("--stats-grid", ru.stats_grid)->capture_default_str();
    run->add_option("--simulate-years", ru.sim_years, "simulate a path of this length (0: skip)");
    run->add_option("--burn-in-years", ru.sim_burn_years)->capture_default_str();
    run->add_option("--dt", ru.dt)->capture_default_str();
    run->add_option("--nodes", ru.nodes)->capture_default_str();
    run->add_option("--seed", ru.seed)->capture_default_str();
    run->add_option("--cd-quantile", ru.cd_quantile)->capture_default_str();
    run->add_option("--riccati-q", ru.riccati_q, "q values for the MGF")->delimiter(',');
    run->callback([&] { action = [&] { return cmd_run(ru); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : exit_code(Stage::usage);
    }

    try {
        return action();
    } catch (const StageError& e) {
        std::cerr << json{{"stage", std::string(to_string(e.stage()))}, {"error", e.what()}}.dump() << '\n';
        return exit_code(e.stage());
    } catch (const std::exception& e) {
        std::cerr << json{{"stage", "internal"}, {"error", e.what()}}.dump() << '\n';
        return 1;
    }
}
