#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <string>

namespace reusecfg
{
/// 256-bit EVM word with wrapping (mod 2^256) arithmetic.
using u256 = boost::multiprecision::uint256_t;

/// Arbitrary precision counter used for path counts.
using bigint = boost::multiprecision::cpp_int;

/// Lowercase hex with 0x prefix and no leading zeros ("0x0" for zero).
std::string to_hex(const u256& v);

/// Big-endian bytes to word. Spans longer than 32 bytes keep the low 32.
u256 from_big_endian(std::span<const uint8_t> bytes);

/// Narrow to uint64 if the value fits.
inline std::optional<uint64_t> to_u64(const u256& v)
{
    if (v > std::numeric_limits<uint64_t>::max())
        return std::nullopt;
    return static_cast<uint64_t>(v);
}

}  // namespace reusecfg
