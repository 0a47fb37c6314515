#pragma once

#include <reusecfg/cfg.hpp>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace reusecfg
{
enum class FindingKind : uint8_t
{
    TxOrigin,
    Reentrancy,
};

std::string_view to_string(FindingKind k) noexcept;

struct Evidence
{
    std::string role;
    uint64_t offset = 0;

    friend auto operator<=>(const Evidence&, const Evidence&) = default;
};

struct Finding
{
    FindingKind kind = FindingKind::TxOrigin;
    uint64_t site_offset = 0;
    std::vector<Evidence> evidence;

    friend auto operator<=>(const Finding&, const Finding&) = default;
};

/// ORIGIN values that decide a JUMPI condition, or that are compared with a
/// CALLER value. One finding per ORIGIN instruction.
std::vector<Finding> detect_tx_origin(const Cfg& cfg);

/// Check-interaction-effect violations: an SLOAD feeding a JUMPI, then a
/// CALL, CALLCODE or DELEGATECALL, then an SSTORE to a structurally equal
/// key, in that order along one acyclic path.
std::vector<Finding> detect_reentrancy(const Cfg& cfg);

std::vector<Finding> detect_all(const Cfg& cfg);

/// Structural equality of two values: isomorphic def-use trees with equal
/// constants. Phi and Unknown values match only themselves.
bool same_expression(ValueId a, ValueId b, const ValueTable& table);

/// `{kind, site_offset, evidence:[{role, offset}]}` records as a JSON array.
std::string findings_json(const std::vector<Finding>& findings);
std::string findings_text(const std::vector<Finding>& findings);

}  // namespace reusecfg
