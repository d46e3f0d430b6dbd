#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fate/data_model.hpp"

namespace fate {

inline constexpr const char* kVersion = "0.1.0";

/// tau: target-population ATE; beta: source-population ATE; the _att
/// variants condition on treated units of the respective population.
enum class Estimand { Tau, Beta, TauAtt, BetaAtt };

const char* estimand_name(Estimand e);
Estimand parse_estimand(const std::string& s);

struct BootstrapInterval {
    double low = 0;
    double high = 0;
    std::size_t replicates = 0;
    std::size_t dropped = 0;
};

struct Diagnostics {
    double mean_centered_eif = 0;
    double clip_fraction = 0;
    std::string nuisance_method;
    std::vector<std::string> notes;
    std::optional<BootstrapInterval> bootstrap;
};

struct EstimateReport {
    Estimand estimand = Estimand::Tau;
    SettingSpec setting;
    double point = 0;
    double variance = 0;
    double ci_low = 0;
    double ci_high = 0;
    std::size_t n = 0;
    Diagnostics diagnostics;

    double se() const;
};

nlohmann::ordered_json to_json(const EstimateReport& r);
std::string report_csv_header();
std::string report_csv_row(const EstimateReport& r);

/// Provenance block embedded in every output. The timestamp is the only
/// field that differs between two identical runs.
nlohmann::ordered_json run_meta(const std::string& command, const nlohmann::ordered_json& config,
                                std::uint64_t seed);
/// Same content as "# key=value" lines for CSV outputs.
std::string csv_meta_lines(const nlohmann::ordered_json& meta);

}  // namespace fate
