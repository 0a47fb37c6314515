#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace reusecfg
{
enum class Severity : uint8_t
{
    Info,
    Warning,
    Error,
};

std::string_view to_string(Severity s) noexcept;

struct Diagnostic
{
    Severity severity = Severity::Warning;
    std::string message;
    std::optional<uint64_t> offset;

    friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

/// Append-only diagnostic sink owned by one analysis session.
class Diagnostics
{
public:
    void add(Severity s, std::string message, std::optional<uint64_t> offset = std::nullopt)
    {
        items_.push_back({s, std::move(message), offset});
    }
    void warn(std::string message, std::optional<uint64_t> offset = std::nullopt)
    {
        add(Severity::Warning, std::move(message), offset);
    }

    const std::vector<Diagnostic>& items() const noexcept { return items_; }
    bool empty() const noexcept { return items_.empty(); }
    size_t size() const noexcept { return items_.size(); }

    /// True if some diagnostic message contains `needle`.
    bool contains(std::string_view needle) const
    {
        for (const auto& d : items_)
        {
            if (d.message.find(needle) != std::string::npos)
                return true;
        }
        return false;
    }

private:
    std::vector<Diagnostic> items_;
};

/// Fatal analysis failure (exit code 1 at the command line).
class AnalysisError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

}  // namespace reusecfg
