#include "supousv/params.hpp"

#include "supousv/error.hpp"
#include "supousv/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace supousv {

void SupOUSVParams::validate() const {
    if (!(pi.alpha() > 1.0)) throw DomainError("params: recession measure requires pi.alpha > 1");
    if (!(sigma >= 0.0)) throw DomainError("params: sigma must be nonnegative");
    if (!std::isfinite(mu)) throw DomainError("params: mu must be finite");
}

bool SupOUSVParams::acf_vanishes() const {
    if (pi.alpha() > 2.0) return true;
    return (pi.alpha() - 1.0) * (rho.alpha() + 2.0) > 1.0;
}

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

double parse_double(const std::string& key, const std::string& text, int line) {
    double v = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (!text.empty() && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last)
        throw ConfigError("config line " + std::to_string(line) + ": value of '" + key + "' is not a number");
    return v;
}

}  // namespace

ModelConfig parse_config(std::string_view text) {
    std::map<std::string, double> kv;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        if (auto h = raw.find('#'); h != std::string::npos) raw.erase(h);
        const std::string s = trim(raw);
        if (s.empty()) continue;
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line) + ": expected key = value");
        const std::string key = trim(std::string_view(s).substr(0, eq));
        const std::string val = trim(std::string_view(s).substr(eq + 1));
        if (key.empty()) throw ConfigError("config line " + std::to_string(line) + ": empty key");
        if (kv.count(key)) throw ConfigError("config line " + std::to_string(line) + ": duplicate key '" + key + "'");
        kv[key] = parse_double(key, val, line);
    }

    auto take = [&](const std::string& k) -> std::optional<double> {
        auto it = kv.find(k);
        if (it == kv.end()) return std::nullopt;
        double v = it->second;
        kv.erase(it);
        return v;
    };
    auto both = [](const std::optional<double>& a, const std::optional<double>& b, const char* group) {
        if (a.has_value() != b.has_value())
            throw ConfigError(std::string("config: incomplete group '") + group + "'");
        return a.has_value();
    };

    ModelConfig cfg;
    try {
        auto pa = take("pi.alpha"), pb = take("pi.beta");
        if (both(pa, pb, "pi")) cfg.pi = GammaMeasure(*pa, *pb);
        auto ra = take("rho.alpha"), rb = take("rho.beta");
        if (both(ra, rb, "rho")) cfg.rho = GammaMeasure(*ra, *rb);
        auto a1 = take("levy.a1"), a2 = take("levy.a2"), a3 = take("levy.a3");
        auto eps = take("levy.epsilon");
        if (a1 || a2 || a3) {
            if (!(a1 && a2 && a3)) throw ConfigError("config: incomplete group 'levy'");
            cfg.levy = TemperedStableLevy(*a1, *a2, *a3, eps.value_or(0.1));
        } else if (eps) {
            throw ConfigError("config: levy.epsilon given without levy.a1/a2/a3");
        }
        cfg.sigma = take("sigma");
        cfg.mu = take("mu");
        if (cfg.sigma && *cfg.sigma < 0.0) throw ConfigError("config: sigma must be nonnegative");

        auto cbar = take("seasonal.c_bar");
        auto period = take("seasonal.period");
        std::vector<Harmonic> hs;
        for (int i = 1;; ++i) {
            auto a = take("seasonal.A" + std::to_string(i));
            auto b = take("seasonal.B" + std::to_string(i));
            if (!a && !b) break;
            hs.push_back({a.value_or(0.0), b.value_or(0.0)});
        }
        if (cbar) {
            cfg.seasonal = SeasonalModel(*cbar, std::move(hs), period.value_or(365.25));
        } else if (!hs.empty() || period) {
            throw ConfigError("config: seasonal harmonics given without seasonal.c_bar");
        }
    } catch (const DomainError& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (!kv.empty()) throw ConfigError("config: unknown key '" + kv.begin()->first + "'");
    return cfg;
}

ModelConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string format_config(const ModelConfig& cfg) {
    std::ostringstream out;
    auto kv = [&](const std::string& k, double v) { out << k << " = " << format_number(v) << '\n'; };
    if (cfg.pi) {
        kv("pi.alpha", cfg.pi->alpha());
        kv("pi.beta", cfg.pi->beta());
    }
    if (cfg.rho) {
        kv("rho.alpha", cfg.rho->alpha());
        kv("rho.beta", cfg.rho->beta());
    }
    if (cfg.levy) {
        kv("levy.a1", cfg.levy->a1());
        kv("levy.a2", cfg.levy->a2());
        kv("levy.a3", cfg.levy->a3());
        kv("levy.epsilon", cfg.levy->epsilon());
    }
    if (cfg.sigma) kv("sigma", *cfg.sigma);
    if (cfg.mu) kv("mu", *cfg.mu);
    if (cfg.seasonal) {
        kv("seasonal.c_bar", cfg.seasonal->c_bar());
        kv("seasonal.period", cfg.seasonal->period());
        const auto& hs = cfg.seasonal->harmonics();
        for (std::size_t i = 0; i < hs.size(); ++i) {
            kv("seasonal.A" + std::to_string(i + 1), hs[i].amplitude);
            kv("seasonal.B" + std::to_string(i + 1), hs[i].phase);
        }
    }
    return out.str();
}

SupOUSVParams ModelConfig::full() const {
    if (!levy) throw ConfigError("config: missing levy.a1/levy.a2/levy.a3");
    if (!pi) throw ConfigError("config: missing pi.alpha/pi.beta");
    if (!rho) throw ConfigError("config: missing rho.alpha/rho.beta");
    if (!sigma) throw ConfigError("config: missing sigma");
    SupOUSVParams p{*levy, *pi, *rho, *sigma, mu.value_or(0.0)};
    try {
        p.validate();
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    return p;
}

ModelConfig to_config(const SupOUSVParams& p) {
    ModelConfig c;
    c.levy = p.levy;
    c.pi = p.pi;
    c.rho = p.rho;
    c.sigma = p.sigma;
    c.mu = p.mu;
    return c;
}

}  // namespace supousv
