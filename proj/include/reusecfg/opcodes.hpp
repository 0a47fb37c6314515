#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

namespace reusecfg
{
/// How a block ends. FallThrough means the block runs into the next one.
enum class Terminator : uint8_t
{
    Jump,
    JumpI,
    Stop,
    Return,
    Revert,
    Invalid,
    SelfDestruct,
    FallThrough,
};

std::string_view to_string(Terminator t) noexcept;

/// True for terminators that end the transaction.
constexpr bool ends_transaction(Terminator t) noexcept
{
    return t == Terminator::Stop || t == Terminator::Return || t == Terminator::Revert ||
           t == Terminator::Invalid || t == Terminator::SelfDestruct;
}

namespace op
{
// Opcodes the analyses refer to by name.
inline constexpr uint8_t STOP = 0x00;
inline constexpr uint8_t ADD = 0x01;
inline constexpr uint8_t MUL = 0x02;
inline constexpr uint8_t SUB = 0x03;
inline constexpr uint8_t DIV = 0x04;
inline constexpr uint8_t SDIV = 0x05;
inline constexpr uint8_t MOD = 0x06;
inline constexpr uint8_t SMOD = 0x07;
inline constexpr uint8_t EXP = 0x0a;
inline constexpr uint8_t LT = 0x10;
inline constexpr uint8_t GT = 0x11;
inline constexpr uint8_t SLT = 0x12;
inline constexpr uint8_t SGT = 0x13;
inline constexpr uint8_t EQ = 0x14;
inline constexpr uint8_t ISZERO = 0x15;
inline constexpr uint8_t AND = 0x16;
inline constexpr uint8_t OR = 0x17;
inline constexpr uint8_t XOR = 0x18;
inline constexpr uint8_t NOT = 0x19;
inline constexpr uint8_t BYTE = 0x1a;
inline constexpr uint8_t SHL = 0x1b;
inline constexpr uint8_t SHR = 0x1c;
inline constexpr uint8_t SAR = 0x1d;
inline constexpr uint8_t SHA3 = 0x20;
inline constexpr uint8_t ORIGIN = 0x32;
inline constexpr uint8_t CALLER = 0x33;
inline constexpr uint8_t CALLVALUE = 0x34;
inline constexpr uint8_t CALLDATALOAD = 0x35;
inline constexpr uint8_t POP = 0x50;
inline constexpr uint8_t MLOAD = 0x51;
inline constexpr uint8_t MSTORE = 0x52;
inline constexpr uint8_t MSTORE8 = 0x53;
inline constexpr uint8_t SLOAD = 0x54;
inline constexpr uint8_t SSTORE = 0x55;
inline constexpr uint8_t JUMP = 0x56;
inline constexpr uint8_t JUMPI = 0x57;
inline constexpr uint8_t JUMPDEST = 0x5b;
inline constexpr uint8_t PUSH0 = 0x5f;
inline constexpr uint8_t PUSH1 = 0x60;
inline constexpr uint8_t PUSH2 = 0x61;
inline constexpr uint8_t PUSH32 = 0x7f;
inline constexpr uint8_t DUP1 = 0x80;
inline constexpr uint8_t DUP16 = 0x8f;
inline constexpr uint8_t SWAP1 = 0x90;
inline constexpr uint8_t SWAP16 = 0x9f;
inline constexpr uint8_t LOG0 = 0xa0;
inline constexpr uint8_t CALL = 0xf1;
inline constexpr uint8_t CALLCODE = 0xf2;
inline constexpr uint8_t RETURN = 0xf3;
inline constexpr uint8_t DELEGATECALL = 0xf4;
inline constexpr uint8_t STATICCALL = 0xfa;
inline constexpr uint8_t REVERT = 0xfd;
inline constexpr uint8_t INVALID = 0xfe;
inline constexpr uint8_t SELFDESTRUCT = 0xff;
}  // namespace op

struct OpInfo
{
    std::string_view name;  ///< empty for undefined opcodes
    uint8_t pops = 0;
    uint8_t pushes = 0;
    bool defined = false;
};

/// Static opcode table (Cancun instruction set).
const OpInfo& op_info(uint8_t opcode) noexcept;

/// Mnemonic for display; undefined opcodes render as "UNDEFINED_0x??".
std::string mnemonic(uint8_t opcode);

/// Reverse lookup used by the assembler. Accepts the mnemonics from op_info
/// plus the alias KECCAK256 for SHA3.
std::optional<uint8_t> opcode_from_name(std::string_view name) noexcept;

constexpr bool is_push(uint8_t opcode) noexcept
{
    return opcode >= op::PUSH1 && opcode <= op::PUSH32;
}

/// Number of immediate bytes following the opcode.
constexpr unsigned push_width(uint8_t opcode) noexcept
{
    return is_push(opcode) ? static_cast<unsigned>(opcode - op::PUSH0) : 0;
}

constexpr bool is_dup(uint8_t opcode) noexcept
{
    return opcode >= op::DUP1 && opcode <= op::DUP16;
}

constexpr bool is_swap(uint8_t opcode) noexcept
{
    return opcode >= op::SWAP1 && opcode <= op::SWAP16;
}

/// Terminator class of an opcode, or nullopt for ordinary instructions.
/// Undefined opcodes halt like INVALID.
std::optional<Terminator> terminator_of(uint8_t opcode) noexcept;

/// Opcodes the emulator folds when every operand is constant.
bool is_foldable(uint8_t opcode) noexcept;

}  // namespace reusecfg
