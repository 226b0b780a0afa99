#include "doctest.h"
#include "oracles.hpp"

#include "supousv/cd_events.hpp"
#include "supousv/error.hpp"
#include "supousv/identify.hpp"
#include "supousv/simulate.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

using namespace supousv;

namespace {

const GammaMeasure kPi(2.143, 1.034);
const TemperedStableLevy kLevy(1.124, 8.920e-4, 0.75, 0.1);

SupOUSVParams tn() { return {kLevy, kPi, GammaMeasure(0.375, 0.2699), 0.1077, 0.02752}; }

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

SimConfig small_config(double years, std::uint64_t seed = kDefaultSeed) {
    SimConfig c;
    c.i_r = 64;
    c.i_R = 64;
    c.burn_in = 10 * kDaysPerYear;
    c.horizon = years * kDaysPerYear;
    c.seed = seed;
    c.record_every = 50;
    return c;
}

}  // namespace

TEST_SUITE("simulate") {

TEST_CASE("configuration validation") {
    SimConfig c;
    c.dt = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = SimConfig{};
    c.horizon = 0.001;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = SimConfig{};
    c.i_R = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    CHECK_NOTHROW(SimConfig{}.validate());
    CHECK(SimConfig{}.horizon_steps() == 3652500);
}

TEST_CASE("streams are reproducible and distinct") {
    auto a = make_stream(7, 0), b = make_stream(7, 0), c = make_stream(7, 1), d = make_stream(8, 0);
    const auto va = a();
    CHECK(va == b());
    CHECK(va != c());
    CHECK(va != d());
}

TEST_CASE("vanishing intensity draws no jumps") {
    auto rng = make_stream(1, 0);
    std::size_t n = 0;
    for (int k = 0; k < 1000; ++k) n += sample_jumps(TemperedStableLevy(1e-300, 1.0, -0.5, 0.1), 1.0, rng).size();
    CHECK(n == 0);
}

TEST_CASE("finite-activity jump counts are Poisson with the total mass as rate") {
    const TemperedStableLevy nu(1.0, 2.0, -0.5, 0.0);
    const double rate = std::tgamma(0.5) * std::pow(2.0, -0.5);
    const JumpSampler s(nu);
    CHECK(s.jump_rate() == doctest::Approx(rate).epsilon(1e-14));
    auto rng = make_stream(11, 0);
    JumpBatch b;
    const double dt = 0.1;
    const int draws = 100000;
    double total = 0.0, sizes = 0.0;
    for (int k = 0; k < draws; ++k) {
        s.sample(dt, rng, b);
        total += b.sizes.size();
        for (double z : b.sizes) sizes += z;
        for (double o : b.offsets) CHECK((o >= 0.0 && o < dt));
    }
    const double expect = rate * dt * draws;
    CHECK(std::abs(total - expect) < 3 * std::sqrt(expect));
    // Gamma(1/2, scale 1/2) sizes have mean 1/4
    CHECK(sizes / total == doctest::Approx(0.25).epsilon(0.02));
}

TEST_CASE("infinite-activity sampler reproduces the first regularized moment") {
    for (const auto& nu : {kLevy, TemperedStableLevy(1.0, 0.01, 0.0, 0.1)}) {
        const JumpSampler s(nu);
        auto rng = make_stream(3, 0);
        JumpBatch b;
        const double T = 20000.0;
        double sum = 0.0;
        for (int k = 0; k < 20000; ++k) {
            s.sample(1.0, rng, b);
            for (double z : b.sizes) sum += z;
        }
        const double m1 = levy_moment(nu, 1), m2 = levy_moment(nu, 2);
        CHECK(std::abs(sum / T + s.drift_rate() - m1) < 3 * std::sqrt(m2 / T));
        CHECK(s.drift_rate() < m1);
        CHECK(s.truncation() > 0.0);
    }
    const JumpSampler tn_sampler(kLevy);
    CHECK(levy_moment(kLevy, 1) == doctest::Approx(20.10).epsilon(2e-3));
    CHECK(tn_sampler.drift_rate() / levy_moment(kLevy, 1) < 0.2);
}

TEST_CASE("infinite-activity sampler matches the tail mass of the measure") {
    const JumpSampler s(kLevy);
    auto rng = make_stream(5, 0);
    JumpBatch b;
    const double level = 1.0 / kLevy.a2(), p = kLevy.size_exponent();
    const double days = 20000.0;
    double count = 0.0;
    for (int k = 0; k < 20000; ++k) {
        s.sample(1.0, rng, b);
        for (double z : b.sizes) count += std::pow(z, 1.0 / p) > level;
    }
    // nu((1/a2, inf)) = a1 a2^{a3} int_1^inf u^{-1-a3} e^{-u} du
    boost::math::quadrature::exp_sinh<double> es;
    const double tail = kLevy.a1() * std::pow(kLevy.a2(), kLevy.a3()) *
                        es.integrate([&](double u) { return std::exp(-u - (1 + kLevy.a3()) * std::log(1 + u)); }, 0.0,
                                     std::numeric_limits<double>::infinity()) /
                        std::exp(1.0);
    const double expect = tail * days;
    CHECK(std::abs(count - expect) < 3 * std::sqrt(expect));
}

TEST_CASE("paths are deterministic per seed and discharge stays nonnegative") {
    const SimConfig c = small_config(2);
    const SamplePath a = simulate_supousv(tn(), c);
    const SamplePath b = simulate_supousv(tn(), c);
    CHECK(a.y == b.y);
    CHECK(a.x == b.x);
    const SamplePath d = simulate_supousv(tn(), small_config(2, 99));
    CHECK(a.y != d.y);
    for (double y : a.y) CHECK(y >= 0.0);
    REQUIRE(a.times.size() == a.y.size());
    for (std::size_t k = 1; k < a.times.size(); ++k)
        CHECK(a.times[k] - a.times[k - 1] == doctest::Approx(a.dt).epsilon(1e-9));
    CHECK(a.warnings.empty());
}

TEST_CASE("no forcing leaves X at zero") {
    SupOUSVParams p = tn();
    p.sigma = 0.0;
    p.mu = 0.0;
    const SamplePath path = simulate_supousv(p, small_config(1));
    for (double x : path.x) CHECK(x == 0.0);
    const SamplePath cl = simulate_classical_sv(p, 0.5, small_config(1));
    for (double x : cl.x) CHECK(x == 0.0);
}

TEST_CASE("explicit-scheme stability warning") {
    SimConfig c = small_config(0.1);
    c.dt = 5.0;
    c.horizon = 50.0;
    const SamplePath path = simulate_supousv(tn(), c);
    CHECK_FALSE(path.warnings.empty());
}

TEST_CASE("components add up to the aggregates") {
    SimConfig c = small_config(0.2);
    c.keep_components = true;
    const SamplePath path = simulate_supousv(tn(), c);
    REQUIRE(path.components_y.size() == path.y.size());
    for (std::size_t k = 0; k < path.y.size(); k += 97) {
        const auto& cy = path.components_y[k];
        const auto& cx = path.components_x[k];
        CHECK(std::accumulate(cy.begin(), cy.end(), 0.0) == doctest::Approx(path.y[k]).epsilon(1e-12));
        CHECK(std::accumulate(cx.begin(), cx.end(), 0.0) == doctest::Approx(path.x[k]).epsilon(1e-9).scale(1e-12));
    }
}

TEST_CASE("classical volatility baseline: variance, autocorrelation, no correlation with Y") {
    SupOUSVParams p = tn();
    const double R = 0.5;
    SimConfig c = small_config(100);
    c.record_every = 1;
    const SamplePath path = simulate_classical_sv(p, R, c);
    const auto grids = ModelGrids::quantile(p, c.i_r, 1);
    double inv_r = 0.0;
    for (std::size_t i = 0; i < grids.pi.size(); ++i) inv_r += grids.pi.weights[i] / grids.pi.nodes[i];
    const double ybar = levy_moment(p.levy, 1) * inv_r;
    const EmpiricalStats sx = empirical_stats(path.x);
    CHECK(sx.variance == doctest::Approx(p.sigma * p.sigma * ybar / 2).epsilon(0.05));
    const double corr = empirical_covariance(path.x, path.y) / std::sqrt(sx.variance * empirical_stats(path.y).variance);
    CHECK(std::abs(corr) < 0.02);
    TimeSeries ts{path.times, path.x, SeriesKind::log_residual};
    const auto acf = empirical_acf(ts, 4.0, 1.0);
    // about 36500 days at a 2-day correlation time: standard error near 0.01 per lag
    for (std::size_t k = 1; k < acf.size(); ++k) CHECK(std::abs(acf[k].value - std::exp(-R * acf[k].lag)) < 0.03);
}

TEST_CASE("concentration reconstruction") {
    SamplePath path;
    path.times = {0.0, 365.25 / 4, 100.0};
    path.x = {0.0, 0.3, -0.2};
    const auto flat = reconstruct_wqi(SeasonalModel(2.0, {}), path);
    CHECK(flat[0] == doctest::Approx(2.0));
    CHECK(flat[2] == doctest::Approx(2.0 * std::exp(-0.2)));
    const auto peak = reconstruct_wqi(SeasonalModel(2.0, {{1.0, 0.0}}), path);
    CHECK(peak[1] == doctest::Approx(2.0 * std::exp(1.3)).epsilon(1e-12));
    SamplePath zero = path;
    zero.x.clear();
    CHECK(reconstruct_wqi(SeasonalModel(1.5, {}), zero)[1] == doctest::Approx(1.5));
}

TEST_CASE("daily averaging groups whole days") {
    const std::vector<double> t{0.25, 0.5, 0.75, 1.0, 1.5, 2.25};
    const std::vector<double> v{1, 2, 3, 10, 20, 7};
    const auto d = daily_average(t, v);
    REQUIRE(d.size() == 3);
    CHECK(d[0] == doctest::Approx(2.0));
    CHECK(d[1] == doctest::Approx(15.0));
    CHECK(d[2] == doctest::Approx(7.0));
}

TEST_CASE("cd events: synthetic loops") {
    const std::vector<double> y{1, 2, 3, 2, 1};
    const std::vector<double> c{1, 1, 2, 2, 1};
    auto ev = extract_cd_events(y, c, 0.0);
    REQUIRE(ev.size() == 1);
    CHECK(ev[0].first_day == 0);
    CHECK(ev[0].last_day == 4);
    CHECK(ev[0].signed_area > 0.0);
    CHECK(ev[0].direction == LoopDirection::counterclockwise);

    const std::vector<double> c_rev{1, 2, 2, 1, 1};
    ev = extract_cd_events(y, c_rev, 0.0);
    REQUIRE(ev.size() == 1);
    CHECK(ev[0].direction == LoopDirection::clockwise);

    const std::vector<double> flat(10, 3.0), cf(10, 1.0);
    CHECK(extract_cd_events(flat, cf, 0.5).empty());

    const std::vector<double> two{1, 5, 1, 1, 6, 1};
    CHECK(extract_cd_events(two, std::vector<double>(6, 1.0), 0.5).size() == 2);
    CHECK_THROWS_AS(extract_cd_events(y, std::vector<double>{1, 2}, 0.5), DataError);
    CHECK_THROWS_AS(extract_cd_events(y, c, 1.5), DomainError);
}

TEST_CASE("discharge moments and autocorrelation at reduced scale" * doctest::test_suite("slow")) {
    SimConfig c;
    c.record_every = 50;  // hourly-ish thinning keeps memory small
    const SamplePath path = simulate_supou(tn(), c);
    const CumulantSet k = discharge_cumulants(tn());
    const EmpiricalStats s = empirical_stats(path.y);
    CHECK(s.mean == doctest::Approx(k.mean).epsilon(0.05));
    CHECK(s.variance == doctest::Approx(k.variance).epsilon(0.10));
    TimeSeries ts{path.times, path.y, SeriesKind::discharge};
    const auto acf = empirical_acf(ts, 1.0, 1.0);
    // 200 years of a long-memory path: standard error of the lag-1 estimate is about 0.02
    CHECK(acf[1].value == doctest::Approx(discharge_acf(kPi, 1.0)).epsilon(0.1));
}

TEST_CASE("cd events of both directions occur over a century of simulated TN" * doctest::test_suite("slow")) {
    SimConfig c;
    c.burn_in = 20 * kDaysPerYear;
    c.horizon = 100 * kDaysPerYear;
    c.i_r = c.i_R = 128;
    const SamplePath path = simulate_supousv(tn(), c);
    const SeasonalModel s(0.5553, {{0.07104, 0.7198}, {0.06562, 0.7185}});
    const auto conc = reconstruct_wqi(s, path);
    const auto yd = daily_average(path.times, path.y);
    const auto cd = daily_average(path.times, conc);
    const auto ev = extract_cd_events(yd, cd, 0.95);
    std::size_t cw = 0, ccw = 0;
    for (const auto& e : ev) {
        cw += e.direction == LoopDirection::clockwise;
        ccw += e.direction == LoopDirection::counterclockwise;
    }
    CHECK(cw > 0);
    CHECK(ccw > 0);
    MESSAGE("events " << ev.size() << ", clockwise " << cw << ", counterclockwise " << ccw);
    CHECK(mean_of(conc) > 0.0);
}

}  // TEST_SUITE
