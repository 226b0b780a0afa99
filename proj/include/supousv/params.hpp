#pragma once

#include "supousv/measures.hpp"
#include "supousv/seasonal.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace supousv {

/// Full model: jump law, recession measure pi, reversion measure rho,
/// noise intensity sigma and discharge coupling mu.
struct SupOUSVParams {
    TemperedStableLevy levy;
    GammaMeasure pi;
    GammaMeasure rho;
    double sigma = 0.0;
    double mu = 0.0;

    /// Throws DomainError unless pi.alpha > 1 and sigma >= 0.
    void validate() const;
    /// For pi.alpha in (1, 2]: (alpha_r - 1)(alpha_R + 2) > 1. Always true for alpha_r > 2.
    bool acf_vanishes() const;
};

/// Possibly partial model read from a flat `key = value` file.
/// Keys: pi.alpha pi.beta rho.alpha rho.beta levy.a1 levy.a2 levy.a3
/// levy.epsilon sigma mu, and seasonal.c_bar seasonal.period seasonal.A<i>
/// seasonal.B<i> for i = 1, 2, ...
struct ModelConfig {
    std::optional<TemperedStableLevy> levy;
    std::optional<GammaMeasure> pi;
    std::optional<GammaMeasure> rho;
    std::optional<double> sigma;
    std::optional<double> mu;
    std::optional<SeasonalModel> seasonal;

    bool has_discharge() const { return levy.has_value() && pi.has_value(); }
    bool has_full_model() const { return has_discharge() && rho.has_value() && sigma.has_value(); }
    /// Throws ConfigError naming the first missing key. mu defaults to 0.
    SupOUSVParams full() const;
};

ModelConfig parse_config(std::string_view text);
ModelConfig load_config(const std::filesystem::path& path);
std::string format_config(const ModelConfig& cfg);
ModelConfig to_config(const SupOUSVParams& p);

}  // namespace supousv
