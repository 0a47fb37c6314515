#include <reusecfg/opcodes.hpp>
#include <reusecfg/u256.hpp>

#include <array>
#include <cstdio>
#include <string>

namespace reusecfg
{
namespace
{
constexpr std::array<OpInfo, 256> make_table()
{
    std::array<OpInfo, 256> t{};
    auto def = [&t](uint8_t code, std::string_view name, uint8_t pops, uint8_t pushes) {
        t[code] = OpInfo{name, pops, pushes, true};
    };

    def(0x00, "STOP", 0, 0);
    def(0x01, "ADD", 2, 1);
    def(0x02, "MUL", 2, 1);
    def(0x03, "SUB", 2, 1);
    def(0x04, "DIV", 2, 1);
    def(0x05, "SDIV", 2, 1);
    def(0x06, "MOD", 2, 1);
    def(0x07, "SMOD", 2, 1);
    def(0x08, "ADDMOD", 3, 1);
    def(0x09, "MULMOD", 3, 1);
    def(0x0a, "EXP", 2, 1);
    def(0x0b, "SIGNEXTEND", 2, 1);
    def(0x10, "LT", 2, 1);
    def(0x11, "GT", 2, 1);
    def(0x12, "SLT", 2, 1);
    def(0x13, "SGT", 2, 1);
    def(0x14, "EQ", 2, 1);
    def(0x15, "ISZERO", 1, 1);
    def(0x16, "AND", 2, 1);
    def(0x17, "OR", 2, 1);
    def(0x18, "XOR", 2, 1);
    def(0x19, "NOT", 1, 1);
    def(0x1a, "BYTE", 2, 1);
    def(0x1b, "SHL", 2, 1);
    def(0x1c, "SHR", 2, 1);
    def(0x1d, "SAR", 2, 1);
    def(0x20, "SHA3", 2, 1);
    def(0x30, "ADDRESS", 0, 1);
    def(0x31, "BALANCE", 1, 1);
    def(0x32, "ORIGIN", 0, 1);
    def(0x33, "CALLER", 0, 1);
    def(0x34, "CALLVALUE", 0, 1);
    def(0x35, "CALLDATALOAD", 1, 1);
    def(0x36, "CALLDATASIZE", 0, 1);
    def(0x37, "CALLDATACOPY", 3, 0);
    def(0x38, "CODESIZE", 0, 1);
    def(0x39, "CODECOPY", 3, 0);
    def(0x3a, "GASPRICE", 0, 1);
    def(0x3b, "EXTCODESIZE", 1, 1);
    def(0x3c, "EXTCODECOPY", 4, 0);
    def(0x3d, "RETURNDATASIZE", 0, 1);
    def(0x3e, "RETURNDATACOPY", 3, 0);
    def(0x3f, "EXTCODEHASH", 1, 1);
    def(0x40, "BLOCKHASH", 1, 1);
    def(0x41, "COINBASE", 0, 1);
    def(0x42, "TIMESTAMP", 0, 1);
    def(0x43, "NUMBER", 0, 1);
    def(0x44, "PREVRANDAO", 0, 1);
    def(0x45, "GASLIMIT", 0, 1);
    def(0x46, "CHAINID", 0, 1);
    def(0x47, "SELFBALANCE", 0, 1);
    def(0x48, "BASEFEE", 0, 1);
    def(0x49, "BLOBHASH", 1, 1);
    def(0x4a, "BLOBBASEFEE", 0, 1);
    def(0x50, "POP", 1, 0);
    def(0x51, "MLOAD", 1, 1);
    def(0x52, "MSTORE", 2, 0);
    def(0x53, "MSTORE8", 2, 0);
    def(0x54, "SLOAD", 1, 1);
    def(0x55, "SSTORE", 2, 0);
    def(0x56, "JUMP", 1, 0);
    def(0x57, "JUMPI", 2, 0);
    def(0x58, "PC", 0, 1);
    def(0x59, "MSIZE", 0, 1);
    def(0x5a, "GAS", 0, 1);
    def(0x5b, "JUMPDEST", 0, 0);
    def(0x5c, "TLOAD", 1, 1);
    def(0x5d, "TSTORE", 2, 0);
    def(0x5e, "MCOPY", 3, 0);
    def(0x5f, "PUSH0", 0, 1);

    constexpr std::array<std::string_view, 32> push_names = {"PUSH1", "PUSH2", "PUSH3",
        "PUSH4", "PUSH5", "PUSH6", "PUSH7", "PUSH8", "PUSH9", "PUSH10", "PUSH11", "PUSH12",
        "PUSH13", "PUSH14", "PUSH15", "PUSH16", "PUSH17", "PUSH18", "PUSH19", "PUSH20",
        "PUSH21", "PUSH22", "PUSH23", "PUSH24", "PUSH25", "PUSH26", "PUSH27", "PUSH28",
        "PUSH29", "PUSH30", "PUSH31", "PUSH32"};
    for (unsigned i = 0; i < 32; ++i)
        def(static_cast<uint8_t>(0x60 + i), push_names[i], 0, 1);

    constexpr std::array<std::string_view, 16> dup_names = {"DUP1", "DUP2", "DUP3", "DUP4",
        "DUP5", "DUP6", "DUP7", "DUP8", "DUP9", "DUP10", "DUP11", "DUP12", "DUP13", "DUP14",
        "DUP15", "DUP16"};
    constexpr std::array<std::string_view, 16> swap_names = {"SWAP1", "SWAP2", "SWAP3",
        "SWAP4", "SWAP5", "SWAP6", "SWAP7", "SWAP8", "SWAP9", "SWAP10", "SWAP11", "SWAP12",
        "SWAP13", "SWAP14", "SWAP15", "SWAP16"};
    for (unsigned i = 0; i < 16; ++i)
    {
        const auto n = static_cast<uint8_t>(i + 1);
        def(static_cast<uint8_t>(0x80 + i), dup_names[i], n, static_cast<uint8_t>(n + 1));
        def(static_cast<uint8_t>(0x90 + i), swap_names[i], static_cast<uint8_t>(n + 1),
            static_cast<uint8_t>(n + 1));
    }

    def(0xa0, "LOG0", 2, 0);
    def(0xa1, "LOG1", 3, 0);
    def(0xa2, "LOG2", 4, 0);
    def(0xa3, "LOG3", 5, 0);
    def(0xa4, "LOG4", 6, 0);
    def(0xf0, "CREATE", 3, 1);
    def(0xf1, "CALL", 7, 1);
    def(0xf2, "CALLCODE", 7, 1);
    def(0xf3, "RETURN", 2, 0);
    def(0xf4, "DELEGATECALL", 6, 1);
    def(0xf5, "CREATE2", 4, 1);
    def(0xfa, "STATICCALL", 6, 1);
    def(0xfd, "REVERT", 2, 0);
    def(0xfe, "INVALID", 0, 0);
    def(0xff, "SELFDESTRUCT", 1, 0);
    return t;
}

constexpr auto table = make_table();
}  // namespace

std::string_view to_string(Terminator t) noexcept
{
    switch (t)
    {
    case Terminator::Jump:
        return "jump";
    case Terminator::JumpI:
        return "jumpi";
    case Terminator::Stop:
        return "stop";
    case Terminator::Return:
        return "return";
    case Terminator::Revert:
        return "revert";
    case Terminator::Invalid:
        return "invalid";
    case Terminator::SelfDestruct:
        return "selfdestruct";
    case Terminator::FallThrough:
        return "fallthrough";
    }
    return "?";
}

const OpInfo& op_info(uint8_t opcode) noexcept
{
    return table[opcode];
}

std::string mnemonic(uint8_t opcode)
{
    const auto& info = table[opcode];
    if (info.defined)
        return std::string{info.name};
    char buf[24];
    std::snprintf(buf, sizeof(buf), "UNDEFINED_0x%02x", opcode);
    return buf;
}

std::optional<uint8_t> opcode_from_name(std::string_view name) noexcept
{
    if (name == "KECCAK256")
        return op::SHA3;
    for (unsigned i = 0; i < 256; ++i)
    {
        if (table[i].defined && table[i].name == name)
            return static_cast<uint8_t>(i);
    }
    return std::nullopt;
}

std::optional<Terminator> terminator_of(uint8_t opcode) noexcept
{
    switch (opcode)
    {
    case op::JUMP:
        return Terminator::Jump;
    case op::JUMPI:
        return Terminator::JumpI;
    case op::STOP:
        return Terminator::Stop;
    case op::RETURN:
        return Terminator::Return;
    case op::REVERT:
        return Terminator::Revert;
    case op::INVALID:
        return Terminator::Invalid;
    case op::SELFDESTRUCT:
        return Terminator::SelfDestruct;
    default:
        break;
    }
    if (!table[opcode].defined)
        return Terminator::Invalid;
    return std::nullopt;
}

bool is_foldable(uint8_t opcode) noexcept
{
    switch (opcode)
    {
    case op::ADD:
    case op::MUL:
    case op::SUB:
    case op::DIV:
    case op::MOD:
    case op::EXP:
    case op::AND:
    case op::OR:
    case op::XOR:
    case op::NOT:
    case op::SHL:
    case op::SHR:
    case op::BYTE:
    case op::LT:
    case op::GT:
    case op::EQ:
    case op::ISZERO:
        return true;
    default:
        return false;
    }
}

std::string to_hex(const u256& v)
{
    if (v == 0)
        return "0x0";
    std::string digits;
    u256 x = v;
    constexpr char hex[] = "0123456789abcdef";
    while (x != 0)
    {
        digits.push_back(hex[static_cast<unsigned>(x & 0xf)]);
        x >>= 4;
    }
    return "0x" + std::string(digits.rbegin(), digits.rend());
}

u256 from_big_endian(std::span<const uint8_t> bytes)
{
    u256 v = 0;
    for (const auto b : bytes)
        v = (v << 8) | b;
    return v;
}

}  // namespace reusecfg
