#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "fate/study.hpp"

namespace fate {

enum class CheckKind {
    Greater,  // lhs - rhs > 5 se
    Less,     // lhs - rhs < -5 se
    Equal,    // |lhs - rhs| <= 3 se
    Report,   // informational
};

struct OrderingCheck {
    std::string family;
    std::string description;
    CheckKind kind = CheckKind::Report;
    double lhs = 0, rhs = 0;
    double diff = 0, se = 0;
    bool holds = true;
};

struct BoundsReport {
    std::vector<BoundEstimate> bounds;
    std::vector<OrderingCheck> checks;

    bool all_hold() const;
    const BoundEstimate& find(const std::string& case_id, const std::string& label) const;
};

/// Family names accepted by compare_bounds.
std::vector<std::string> bound_families();

/// Evaluates the bounds of a base design and its controls-only companion and
/// checks the orderings and gain identities between them.
BoundsReport compare_bounds(const std::string& family, std::size_t n_mc, std::uint64_t seed);

/// Throws OrderingViolation naming every failed check.
void require_orderings(const BoundsReport& r);

std::string bounds_csv(const BoundsReport& r);
nlohmann::ordered_json to_json(const BoundsReport& r);

}  // namespace fate
