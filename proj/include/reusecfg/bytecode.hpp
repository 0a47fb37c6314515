#pragma once

#include <reusecfg/diagnostics.hpp>
#include <reusecfg/opcodes.hpp>
#include <reusecfg/u256.hpp>

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace reusecfg
{
using bytes = std::vector<uint8_t>;

/// A decoded instruction at a byte offset.
struct Instruction
{
    uint64_t offset = 0;
    uint8_t opcode = 0;
    /// Immediate of PUSH1..PUSH32, big-endian. A payload cut off by the end of
    /// code is zero-padded on the right (EVM reads implicit zeros).
    std::optional<u256> push_data;
    /// Bytes actually present in the code. Equals 1 + push width except for a
    /// truncated trailing PUSH.
    uint32_t length = 1;
    bool truncated = false;

    std::string mnemonic() const { return reusecfg::mnemonic(opcode); }
    uint64_t next_offset() const noexcept { return offset + length; }
};

/// CFG node identity: clones of one offset share it and differ by clone index.
struct BlockId
{
    uint64_t offset = 0;
    uint32_t clone_index = 0;

    friend auto operator<=>(const BlockId&, const BlockId&) = default;
};

/// Stable textual form "0x<hex offset>_<clone index>".
std::string to_string(const BlockId& id);

struct BlockIdHash
{
    size_t operator()(const BlockId& id) const noexcept
    {
        return std::hash<uint64_t>{}(id.offset * 1315423911ULL + id.clone_index);
    }
};

struct BasicBlock
{
    BlockId id;
    uint64_t start_offset = 0;
    std::vector<Instruction> instructions;
    Terminator terminator = Terminator::FallThrough;
    /// Set after CFG recovery for blocks that were never entered.
    bool is_data = false;

    uint64_t end_offset() const noexcept
    {
        return instructions.empty() ? start_offset : instructions.back().next_offset();
    }
    bool starts_with_jumpdest() const noexcept
    {
        return !instructions.empty() && instructions.front().opcode == op::JUMPDEST;
    }
};

/// Linear-sweep decoding. PUSH immediates are consumed as data; unknown bytes
/// decode as 1-byte undefined instructions. A truncated trailing PUSH is
/// reported through `diags` when given.
std::vector<Instruction> disassemble(std::span<const uint8_t> code, Diagnostics* diags = nullptr);

/// Splits before every JUMPDEST and after every terminator. Every
/// instruction lands in exactly one block; nothing is stripped.
std::vector<BasicBlock> identify_blocks(std::span<const Instruction> instructions);

/// Re-encodes an instruction stream to bytes (inverse of disassemble).
bytes serialize(std::span<const Instruction> instructions);

/// `0x<offset>: MNEMONIC [0xpayload]` per line.
std::string format_listing(std::span<const Instruction> instructions);

/// One instruction formatted like a listing line (without the newline).
std::string format_instruction(const Instruction& ins);

/// Parses hex text: optional 0x prefix, case-insensitive, whitespace ignored.
/// Throws std::invalid_argument on malformed input.
bytes parse_hex(std::string_view text);

std::string to_hex_string(std::span<const uint8_t> code);

/// True if every byte is a hex digit, 'x'/'X' or whitespace.
bool looks_like_hex(std::span<const uint8_t> raw) noexcept;

/// Interprets file content as hex text when it looks like hex, raw binary
/// otherwise.
bytes decode_input(std::span<const uint8_t> raw);

}  // namespace reusecfg
