#pragma once

// JSON configuration for simulation and error-rate studies.
//
// {
//   "seed": 42, "replications": 100000, "workers": 4,
//   "process": { "rate": 2, "exposure": 3,
//                "severity": [ {"weight": 1, "kind": "constant", "value": 1} ] },
//   "loss_classes": [1, 2, 4, 8, 16, 32],
//   "study": { "procedure": {"kind": "rate-ratio", "probable": 0.1, "potential": 0.25},
//              "rate_ref": 1, "rate_target_null": 1, "rate_target_alt": [1, 2, 5],
//              "exposure_ref": 4, "exposure_target": 1, "decision_counted": "probable" }
// }
//
// Severity kinds: constant{value}, pareto{scale, shape}, weibull{shape, scale},
// empirical{values, probabilities}. Errors name the offending field path.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "safelevel/simulate.hpp"

namespace safelevel::config {

/// Configuration error carrying a JSON path such as "$.study.rate_ref".
class ConfigError : public DataError {
public:
    ConfigError(std::string path, const std::string& message);
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

struct StudyConfig {
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> replications;
    unsigned workers = 1;
    std::optional<simulate::CompoundPoissonSpec> process;
    std::optional<std::array<double, 6>> loss_classes;
    std::optional<simulate::ErrorRateStudy> study;
    std::vector<double> alt_rates;  ///< from study.rate_target_alt
};

StudyConfig parse_study_config(const std::string& json_text);
StudyConfig load_study_config(const std::string& path);

simulate::SeverityModel parse_severity_model(const std::string& json_text);

}  // namespace safelevel::config
