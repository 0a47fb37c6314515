#include <reusecfg/bytecode.hpp>

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace reusecfg
{
std::string_view to_string(Severity s) noexcept
{
    switch (s)
    {
    case Severity::Info:
        return "info";
    case Severity::Warning:
        return "warning";
    case Severity::Error:
        return "error";
    }
    return "?";
}

std::string to_string(const BlockId& id)
{
    char buf[48];
    std::snprintf(buf, sizeof(buf), "0x%llx_%u", static_cast<unsigned long long>(id.offset),
        id.clone_index);
    return buf;
}

std::vector<Instruction> disassemble(std::span<const uint8_t> code, Diagnostics* diags)
{
    std::vector<Instruction> out;
    out.reserve(code.size());
    uint64_t pc = 0;
    while (pc < code.size())
    {
        Instruction ins;
        ins.offset = pc;
        ins.opcode = code[pc];
        const auto width = push_width(ins.opcode);
        if (width != 0)
        {
            const auto avail = std::min<uint64_t>(width, code.size() - pc - 1);
            u256 v = from_big_endian(code.subspan(pc + 1, avail));
            if (avail < width)
            {
                v <<= 8 * static_cast<unsigned>(width - avail);
                ins.truncated = true;
                if (diags)
                    diags->warn("truncated push payload zero-padded", pc);
            }
            ins.push_data = v;
            ins.length = static_cast<uint32_t>(1 + avail);
        }
        pc += ins.length;
        out.push_back(std::move(ins));
    }
    return out;
}

std::vector<BasicBlock> identify_blocks(std::span<const Instruction> instructions)
{
    std::vector<BasicBlock> blocks;
    BasicBlock* cur = nullptr;
    bool split_next = true;
    for (const auto& ins : instructions)
    {
        if (split_next || ins.opcode == op::JUMPDEST)
        {
            auto& b = blocks.emplace_back();
            b.id = BlockId{ins.offset, 0};
            b.start_offset = ins.offset;
            cur = &b;
        }
        cur->instructions.push_back(ins);
        const auto term = terminator_of(ins.opcode);
        split_next = term.has_value();
        cur->terminator = term.value_or(Terminator::FallThrough);
    }
    return blocks;
}

bytes serialize(std::span<const Instruction> instructions)
{
    bytes out;
    for (const auto& ins : instructions)
    {
        out.push_back(ins.opcode);
        const auto width = push_width(ins.opcode);
        if (width == 0)
            continue;
        u256 v = *ins.push_data;
        bytes imm(width);
        for (unsigned i = 0; i < width; ++i)
        {
            imm[width - 1 - i] = static_cast<uint8_t>(v & 0xff);
            v >>= 8;
        }
        out.insert(out.end(), imm.begin(), imm.begin() + (ins.length - 1));
    }
    return out;
}

std::string format_instruction(const Instruction& ins)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "0x%llx: ", static_cast<unsigned long long>(ins.offset));
    std::string line = buf + ins.mnemonic();
    if (ins.push_data)
    {
        // Payload printed at its full source width, leading zeros kept.
        std::string digits = to_hex(*ins.push_data).substr(2);
        const auto width = 2 * push_width(ins.opcode);
        if (digits.size() < width)
            digits.insert(0, width - digits.size(), '0');
        line += " 0x" + digits;
    }
    return line;
}

std::string format_listing(std::span<const Instruction> instructions)
{
    std::string out;
    for (const auto& ins : instructions)
    {
        out += format_instruction(ins);
        out += '\n';
    }
    return out;
}

namespace
{
int hex_value(char c) noexcept
{
    if (c >= '0' && c <= '9')
        return c - '0';
    if (c >= 'a' && c <= 'f')
        return c - 'a' + 10;
    if (c >= 'A' && c <= 'F')
        return c - 'A' + 10;
    return -1;
}
}  // namespace

bytes parse_hex(std::string_view text)
{
    std::string digits;
    digits.reserve(text.size());
    for (const char c : text)
    {
        if (!std::isspace(static_cast<unsigned char>(c)))
            digits.push_back(c);
    }
    std::string_view d = digits;
    if (d.size() >= 2 && d[0] == '0' && (d[1] == 'x' || d[1] == 'X'))
        d.remove_prefix(2);
    if (d.size() % 2 != 0)
        throw std::invalid_argument("odd number of hex digits");
    bytes out;
    out.reserve(d.size() / 2);
    for (size_t i = 0; i < d.size(); i += 2)
    {
        const int hi = hex_value(d[i]);
        const int lo = hex_value(d[i + 1]);
        if (hi < 0 || lo < 0)
            throw std::invalid_argument("invalid hex digit");
        out.push_back(static_cast<uint8_t>(hi << 4 | lo));
    }
    return out;
}

std::string to_hex_string(std::span<const uint8_t> code)
{
    constexpr char hex[] = "0123456789abcdef";
    std::string s;
    s.reserve(code.size() * 2);
    for (const auto b : code)
    {
        s.push_back(hex[b >> 4]);
        s.push_back(hex[b & 0xf]);
    }
    return s;
}

bool looks_like_hex(std::span<const uint8_t> raw) noexcept
{
    return std::all_of(raw.begin(), raw.end(), [](uint8_t b) {
        return hex_value(static_cast<char>(b)) >= 0 || b == 'x' || b == 'X' ||
               std::isspace(b) != 0;
    });
}

bytes decode_input(std::span<const uint8_t> raw)
{
    if (!raw.empty() && looks_like_hex(raw))
        return parse_hex(std::string_view{reinterpret_cast<const char*>(raw.data()), raw.size()});
    return bytes(raw.begin(), raw.end());
}

}  // namespace reusecfg
