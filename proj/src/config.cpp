#include <reusecfg/config.hpp>

#include <charconv>
#include <cstdlib>
#include <stdexcept>

namespace reusecfg
{
std::string_view to_string(Mode m) noexcept
{
    return m == Mode::ReuseSensitive ? "reuse-sensitive" : "reuse-insensitive";
}

std::string_view to_string(OutputFormat f) noexcept
{
    switch (f)
    {
    case OutputFormat::Dot:
        return "dot";
    case OutputFormat::Json:
        return "json";
    case OutputFormat::Text:
        return "text";
    }
    return "text";
}

std::optional<OutputFormat> parse_output_format(std::string_view s) noexcept
{
    for (const auto f : {OutputFormat::Dot, OutputFormat::Json, OutputFormat::Text})
    {
        if (to_string(f) == s)
            return f;
    }
    return std::nullopt;
}

void Config::validate() const
{
    if (clone_budget_per_offset == 0 || total_block_budget == 0 || reemulation_cap == 0 ||
        branch_bound == 0)
        throw std::invalid_argument("config budgets must be at least 1");
}

namespace
{
const char* system_getenv(const char* name)
{
    return std::getenv(name);
}

void override_field(uint32_t& field, const char* name, const char* (*getenv_fn)(const char*))
{
    const std::string var = std::string{env_prefix} + name;
    const char* raw = getenv_fn(var.c_str());
    if (raw == nullptr || *raw == '\0')
        return;
    const std::string_view text{raw};
    uint32_t value = 0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || end != text.data() + text.size() || value == 0)
        throw std::invalid_argument(var + " must be a positive integer, got '" + std::string{text} + "'");
    field = value;
}
}  // namespace

void apply_env_overrides(Config& cfg, const char* (*getenv_fn)(const char*))
{
    if (getenv_fn == nullptr)
        getenv_fn = system_getenv;
    override_field(cfg.clone_budget_per_offset, "CLONE_BUDGET", getenv_fn);
    override_field(cfg.total_block_budget, "BLOCK_BUDGET", getenv_fn);
    override_field(cfg.reemulation_cap, "REEMULATION_CAP", getenv_fn);
    override_field(cfg.branch_bound, "BRANCH_BOUND", getenv_fn);
}

}  // namespace reusecfg
