#include <reusecfg/corpus.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>

namespace reusecfg
{
Assembler& Assembler::op(uint8_t opcode)
{
    code_.push_back(opcode);
    return *this;
}

Assembler& Assembler::op(std::string_view mnemonic)
{
    const auto opcode = opcode_from_name(mnemonic);
    if (!opcode)
        throw std::invalid_argument("unknown mnemonic: " + std::string{mnemonic});
    return op(*opcode);
}

Assembler& Assembler::push(const u256& value, unsigned width)
{
    unsigned needed = 1;
    for (auto v = value >> 8; v != 0; v >>= 8)
        ++needed;
    if (width == 0)
        width = needed;
    if (width > 32 || width < needed)
        throw std::invalid_argument("push width " + std::to_string(width) + " cannot hold " + to_hex(value));
    code_.push_back(static_cast<uint8_t>(op::PUSH1 + width - 1));
    for (unsigned i = width; i-- > 0;)
        code_.push_back(static_cast<uint8_t>((value >> (8 * i)) & 0xff));
    return *this;
}

Assembler& Assembler::push_label(const std::string& name)
{
    code_.push_back(op::PUSH2);
    refs_.emplace_back(code_.size(), name);
    code_.push_back(0);
    code_.push_back(0);
    return *this;
}

Assembler& Assembler::label(const std::string& name)
{
    mark(name);
    return op(op::JUMPDEST);
}

Assembler& Assembler::mark(const std::string& name)
{
    if (!labels_.emplace(name, code_.size()).second)
        duplicates_.push_back(name);
    return *this;
}

Assembler& Assembler::raw(std::span<const uint8_t> data)
{
    code_.insert(code_.end(), data.begin(), data.end());
    return *this;
}

Assembler& Assembler::append(const Assembler& other)
{
    const auto base = code_.size();
    code_.insert(code_.end(), other.code_.begin(), other.code_.end());
    for (const auto& [name, off] : other.labels_)
    {
        if (!labels_.emplace(name, base + off).second)
            duplicates_.push_back(name);
    }
    for (const auto& [pos, name] : other.refs_)
        refs_.emplace_back(base + pos, name);
    duplicates_.insert(duplicates_.end(), other.duplicates_.begin(), other.duplicates_.end());
    return *this;
}

uint64_t Assembler::offset_of(const std::string& name) const
{
    const auto it = labels_.find(name);
    if (it == labels_.end())
        throw std::invalid_argument("unknown label: " + name);
    return it->second;
}

bytes Assembler::finish() const
{
    if (!duplicates_.empty())
        throw std::invalid_argument("duplicate label: " + duplicates_.front());
    bytes out = code_;
    for (const auto& [pos, name] : refs_)
    {
        const auto target = offset_of(name);
        if (target > 0xffff)
            throw std::invalid_argument("label out of PUSH2 range: " + name);
        out[pos] = static_cast<uint8_t>(target >> 8);
        out[pos + 1] = static_cast<uint8_t>(target);
    }
    return out;
}

namespace
{
u256 parse_number(std::string_view tok)
{
    if (tok.starts_with("0x") || tok.starts_with("0X"))
    {
        tok.remove_prefix(2);
        if (tok.empty() || tok.size() > 64)
            throw std::invalid_argument("bad hex literal");
        u256 v = 0;
        for (const char c : tok)
        {
            if (!std::isxdigit(static_cast<unsigned char>(c)))
                throw std::invalid_argument("bad hex literal");
            const int d = std::isdigit(static_cast<unsigned char>(c)) ?
                              c - '0' :
                              std::tolower(static_cast<unsigned char>(c)) - 'a' + 10;
            v = (v << 4) | d;
        }
        return v;
    }
    uint64_t v = 0;
    const auto [end, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || end != tok.data() + tok.size())
        throw std::invalid_argument("bad number: " + std::string{tok});
    return v;
}

std::string upper(std::string_view s)
{
    std::string out{s};
    std::transform(out.begin(), out.end(), out.begin(),
        [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return out;
}
}  // namespace

bytes assemble(std::string_view text)
{
    std::vector<std::string> tokens;
    size_t i = 0;
    while (i < text.size())
    {
        const char c = text[i];
        if (c == ';')
        {
            while (i < text.size() && text[i] != '\n')
                ++i;
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c)))
        {
            ++i;
            continue;
        }
        const auto start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i])) && text[i] != ';')
            ++i;
        tokens.emplace_back(text.substr(start, i - start));
    }

    Assembler a;
    for (size_t t = 0; t < tokens.size(); ++t)
    {
        const auto& tok = tokens[t];
        const auto next = [&]() -> const std::string& {
            if (t + 1 >= tokens.size())
                throw std::invalid_argument("missing operand after " + tok);
            return tokens[++t];
        };

        if (tok.back() == ':')
        {
            a.label(tok.substr(0, tok.size() - 1));
            continue;
        }
        const auto up = upper(tok);
        if (up == ".BYTE")
        {
            const auto v = parse_number(next());
            if (v > 0xff)
                throw std::invalid_argument(".byte operand out of range");
            const uint8_t b = static_cast<uint8_t>(v);
            a.raw(std::span{&b, 1});
            continue;
        }
        if (up == "PUSH")
        {
            const auto& arg = next();
            if (arg.starts_with('@'))
                a.push_label(arg.substr(1));
            else
                a.push(parse_number(arg));
            continue;
        }
        if (up.starts_with("PUSH") && up != "PUSH0")
        {
            const auto opcode = opcode_from_name(up);
            if (!opcode)
                throw std::invalid_argument("unknown mnemonic: " + tok);
            const auto& arg = next();
            if (arg.starts_with('@'))
            {
                if (*opcode != op::PUSH2)
                    throw std::invalid_argument("label references need PUSH2 or PUSH");
                a.push_label(arg.substr(1));
            }
            else
                a.push(parse_number(arg), push_width(*opcode));
            continue;
        }
        a.op(up);
    }
    return a.finish();
}

}  // namespace reusecfg
