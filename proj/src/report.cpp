#include "fate/report.hpp"

#include <chrono>
#include <cmath>
#include <ctime>

#include "fate/error.hpp"

namespace fate {

const char* estimand_name(Estimand e) {
    switch (e) {
        case Estimand::Tau: return "tau";
        case Estimand::Beta: return "beta";
        case Estimand::TauAtt: return "tau_att";
        case Estimand::BetaAtt: return "beta_att";
    }
    return "?";
}

Estimand parse_estimand(const std::string& s) {
    if (s == "tau") return Estimand::Tau;
    if (s == "beta") return Estimand::Beta;
    if (s == "tau_att") return Estimand::TauAtt;
    if (s == "beta_att") return Estimand::BetaAtt;
    throw ConfigError("unknown estimand '" + s + "' (expected tau, beta, tau_att or beta_att)");
}

double EstimateReport::se() const { return std::sqrt(variance); }

nlohmann::ordered_json to_json(const EstimateReport& r) {
    nlohmann::ordered_json diag;
    diag["mean_centered_eif"] = r.diagnostics.mean_centered_eif;
    diag["clip_fraction"] = r.diagnostics.clip_fraction;
    diag["nuisance_method"] = r.diagnostics.nuisance_method;
    diag["notes"] = r.diagnostics.notes;
    if (r.diagnostics.bootstrap) {
        const auto& b = *r.diagnostics.bootstrap;
        diag["bootstrap"] = {{"ci_low", b.low}, {"ci_high", b.high}, {"replicates", b.replicates},
                             {"dropped", b.dropped}};
    }
    nlohmann::ordered_json j;
    j["estimand"] = estimand_name(r.estimand);
    j["setting"] = r.setting.name();
    j["drift"] = r.setting.drift.label();
    j["point"] = r.point;
    j["variance"] = r.variance;
    j["ci_low"] = r.ci_low;
    j["ci_high"] = r.ci_high;
    j["n"] = r.n;
    j["diagnostics"] = std::move(diag);
    return j;
}

std::string report_csv_header() {
    return "estimand,setting,drift,point,variance,ci_low,ci_high,n,mean_centered_eif,clip_fraction,nuisance_method";
}

std::string report_csv_row(const EstimateReport& r) {
    return std::string(estimand_name(r.estimand)) + "," + r.setting.name() + "," + r.setting.drift.label() + "," +
           format_double(r.point) + "," + format_double(r.variance) + "," + format_double(r.ci_low) + "," +
           format_double(r.ci_high) + "," + std::to_string(r.n) + "," +
           format_double(r.diagnostics.mean_centered_eif) + "," + format_double(r.diagnostics.clip_fraction) + "," +
           r.diagnostics.nuisance_method;
}

nlohmann::ordered_json run_meta(const std::string& command, const nlohmann::ordered_json& config,
                                std::uint64_t seed) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    nlohmann::ordered_json m;
    m["tool"] = "fate";
    m["version"] = kVersion;
    m["command"] = command;
    m["seed"] = seed;
    m["config"] = config;
    m["timestamp"] = stamp;
    return m;
}

std::string csv_meta_lines(const nlohmann::ordered_json& meta) {
    std::string out;
    for (const auto& [k, v] : meta.items()) out += "# " + k + "=" + (v.is_string() ? v.get<std::string>() : v.dump()) + "\n";
    return out;
}

}  // namespace fate
