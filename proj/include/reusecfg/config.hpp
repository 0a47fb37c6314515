#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace reusecfg
{
enum class Mode : uint8_t
{
    ReuseSensitive,
    ReuseInsensitive,
};

enum class OutputFormat : uint8_t
{
    Dot,
    Json,
    Text,
};

std::string_view to_string(Mode m) noexcept;
std::string_view to_string(OutputFormat f) noexcept;
std::optional<OutputFormat> parse_output_format(std::string_view s) noexcept;

/// Analysis budgets and presentation options. All budgets must be >= 1.
struct Config
{
    uint32_t clone_budget_per_offset = 512;
    uint32_t total_block_budget = 100000;
    uint32_t reemulation_cap = 64;
    uint32_t branch_bound = 16;
    Mode mode = Mode::ReuseSensitive;
    OutputFormat output_format = OutputFormat::Text;

    /// Throws std::invalid_argument if a budget is zero.
    void validate() const;
};

/// Prefix of the environment variables that override Config fields:
/// REUSECFG_CLONE_BUDGET, REUSECFG_BLOCK_BUDGET, REUSECFG_REEMULATION_CAP,
/// REUSECFG_BRANCH_BOUND.
inline constexpr std::string_view env_prefix = "REUSECFG_";

/// Applies environment overrides. `getenv` is injectable for tests.
void apply_env_overrides(Config& cfg, const char* (*getenv_fn)(const char*) = nullptr);

}  // namespace reusecfg
