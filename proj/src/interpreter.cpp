#include <reusecfg/corpus.hpp>

#include <algorithm>

namespace reusecfg
{
namespace
{
using u128 = unsigned __int128;

// Limb arithmetic, deliberately written without boost so the oracle shares
// no code with the emulator's folding.

Word add(const Word& a, const Word& b)
{
    Word r;
    uint64_t carry = 0;
    for (int i = 0; i < 4; ++i)
    {
        const u128 s = u128{a.limb[i]} + b.limb[i] + carry;
        r.limb[i] = static_cast<uint64_t>(s);
        carry = static_cast<uint64_t>(s >> 64);
    }
    return r;
}

Word sub(const Word& a, const Word& b)
{
    Word r;
    uint64_t borrow = 0;
    for (int i = 0; i < 4; ++i)
    {
        const uint64_t d = a.limb[i] - b.limb[i] - borrow;
        borrow = (a.limb[i] < b.limb[i]) || (a.limb[i] - b.limb[i] < borrow) ? 1 : 0;
        r.limb[i] = d;
    }
    return r;
}

Word mul(const Word& a, const Word& b)
{
    Word r;
    for (int i = 0; i < 4; ++i)
    {
        uint64_t carry = 0;
        for (int j = 0; i + j < 4; ++j)
        {
            const u128 p = u128{a.limb[i]} * b.limb[j] + r.limb[i + j] + carry;
            r.limb[i + j] = static_cast<uint64_t>(p);
            carry = static_cast<uint64_t>(p >> 64);
        }
    }
    return r;
}

bool is_zero(const Word& a)
{
    return (a.limb[0] | a.limb[1] | a.limb[2] | a.limb[3]) == 0;
}

int compare(const Word& a, const Word& b)
{
    for (int i = 3; i >= 0; --i)
    {
        if (a.limb[i] != b.limb[i])
            return a.limb[i] < b.limb[i] ? -1 : 1;
    }
    return 0;
}

bool bit(const Word& a, unsigned n)
{
    return (a.limb[n / 64] >> (n % 64)) & 1;
}

Word shl(const Word& a, unsigned n)
{
    Word r;
    if (n >= 256)
        return r;
    const unsigned limbs = n / 64, bits = n % 64;
    for (int i = 3; i >= static_cast<int>(limbs); --i)
    {
        uint64_t v = a.limb[i - limbs] << bits;
        if (bits != 0 && i - static_cast<int>(limbs) - 1 >= 0)
            v |= a.limb[i - limbs - 1] >> (64 - bits);
        r.limb[i] = v;
    }
    return r;
}

Word shr(const Word& a, unsigned n)
{
    Word r;
    if (n >= 256)
        return r;
    const unsigned limbs = n / 64, bits = n % 64;
    for (unsigned i = 0; i + limbs < 4; ++i)
    {
        uint64_t v = a.limb[i + limbs] >> bits;
        if (bits != 0 && i + limbs + 1 < 4)
            v |= a.limb[i + limbs + 1] << (64 - bits);
        r.limb[i] = v;
    }
    return r;
}

/// Restoring binary long division.
std::pair<Word, Word> divmod(const Word& a, const Word& b)
{
    Word q, r;
    if (is_zero(b))
        return {q, r};
    for (int i = 255; i >= 0; --i)
    {
        r = shl(r, 1);
        r.limb[0] |= bit(a, static_cast<unsigned>(i)) ? 1 : 0;
        if (compare(r, b) >= 0)
        {
            r = sub(r, b);
            q.limb[i / 64] |= uint64_t{1} << (i % 64);
        }
    }
    return {q, r};
}

Word small(uint64_t v)
{
    Word w;
    w.limb[0] = v;
    return w;
}

/// Shift amount, saturated at 256.
unsigned shift_amount(const Word& a)
{
    if (a.limb[1] | a.limb[2] | a.limb[3] || a.limb[0] >= 256)
        return 256;
    return static_cast<unsigned>(a.limb[0]);
}
}  // namespace

Word Word::from(const u256& v)
{
    Word w;
    for (int i = 0; i < 4; ++i)
        w.limb[i] = static_cast<uint64_t>((v >> (64 * i)) & std::numeric_limits<uint64_t>::max());
    return w;
}

u256 Word::to_u256() const
{
    u256 v = 0;
    for (int i = 3; i >= 0; --i)
        v = (v << 64) | limb[i];
    return v;
}

Word interp_eval(uint8_t opcode, std::span<const Word> args)
{
    const auto need = [&](size_t n) {
        if (args.size() < n)
            throw std::invalid_argument("interp_eval: too few operands for " + mnemonic(opcode));
    };
    switch (opcode)
    {
    case op::ADD:
        need(2);
        return add(args[0], args[1]);
    case op::MUL:
        need(2);
        return mul(args[0], args[1]);
    case op::SUB:
        need(2);
        return sub(args[0], args[1]);
    case op::DIV:
        need(2);
        return divmod(args[0], args[1]).first;
    case op::MOD:
        need(2);
        return divmod(args[0], args[1]).second;
    case op::EXP:
    {
        need(2);
        Word result = small(1);
        for (int i = 255; i >= 0; --i)
        {
            result = mul(result, result);
            if (bit(args[1], static_cast<unsigned>(i)))
                result = mul(result, args[0]);
        }
        return result;
    }
    case op::AND:
    case op::OR:
    case op::XOR:
    {
        need(2);
        Word r;
        for (int i = 0; i < 4; ++i)
        {
            const auto x = args[0].limb[i], y = args[1].limb[i];
            r.limb[i] = opcode == op::AND ? (x & y) : opcode == op::OR ? (x | y) : (x ^ y);
        }
        return r;
    }
    case op::NOT:
    {
        need(1);
        Word r;
        for (int i = 0; i < 4; ++i)
            r.limb[i] = ~args[0].limb[i];
        return r;
    }
    case op::SHL:
        need(2);
        return shl(args[1], shift_amount(args[0]));
    case op::SHR:
        need(2);
        return shr(args[1], shift_amount(args[0]));
    case op::BYTE:
    {
        need(2);
        const auto i = shift_amount(args[0]);
        if (i >= 32)
            return {};
        return small(shr(args[1], 8 * (31 - i)).limb[0] & 0xff);
    }
    case op::LT:
        need(2);
        return small(compare(args[0], args[1]) < 0);
    case op::GT:
        need(2);
        return small(compare(args[0], args[1]) > 0);
    case op::EQ:
        need(2);
        return small(compare(args[0], args[1]) == 0);
    case op::ISZERO:
        need(1);
        return small(is_zero(args[0]));
    default:
        throw std::invalid_argument("interp_eval: not a foldable opcode: " + mnemonic(opcode));
    }
}

namespace
{
struct Slot
{
    Word value;
    bool input = false;
};

struct State
{
    uint64_t pc = 0;
    std::vector<Slot> stack;
    /// Byte-addressed memory; values read back are never branch inputs.
    std::vector<uint8_t> memory;
    Run run;
    uint64_t steps = 0;
};

/// Memory accesses beyond this end the run as out of gas.
constexpr uint64_t memory_limit = uint64_t{1} << 20;

/// Grows memory to cover [offset, offset + size). False if out of bounds.
bool touch(std::vector<uint8_t>& memory, const Word& offset, uint64_t size)
{
    if (offset.limb[1] | offset.limb[2] | offset.limb[3] || offset.limb[0] + size > memory_limit)
        return false;
    const auto end = offset.limb[0] + size;
    if (memory.size() < end)
        memory.resize((end + 31) / 32 * 32, 0);
    return true;
}

/// Offsets of JUMPDEST bytes outside push data.
std::vector<bool> jumpdest_map(std::span<const uint8_t> code)
{
    std::vector<bool> valid(code.size(), false);
    for (size_t pc = 0; pc < code.size(); ++pc)
    {
        const auto c = code[pc];
        if (c == op::JUMPDEST)
            valid[pc] = true;
        else if (c >= op::PUSH1 && c <= op::PUSH32)
            pc += static_cast<size_t>(c - op::PUSH1 + 1);
    }
    return valid;
}
}  // namespace

std::vector<Run> interpret_runs(std::span<const uint8_t> code, const InterpreterConfig& config)
{
    const auto valid = jumpdest_map(code);
    std::vector<Run> runs;
    std::vector<State> pending;
    {
        State init;
        init.run.trace.offsets.push_back(0);
        pending.push_back(std::move(init));
    }

    while (!pending.empty())
    {
        auto s = std::move(pending.back());
        pending.pop_back();

        const auto finish = [&](RunOutcome outcome) {
            s.run.outcome = outcome;
            for (const auto& slot : s.stack)
                s.run.final_stack.push_back(slot.value.to_u256());
            runs.push_back(std::move(s.run));
        };
        const auto pop = [&](Slot& out) {
            if (s.stack.empty())
                return false;
            out = s.stack.back();
            s.stack.pop_back();
            return true;
        };

        while (true)
        {
            if (++s.steps > config.step_limit)
                throw InterpreterError("step limit exceeded");
            if (s.pc >= code.size())
            {
                finish(RunOutcome::Stop);
                break;
            }
            const uint8_t opcode = code[s.pc];
            // Falling into a JUMPDEST starts a new block; jumps record their
            // target themselves.
            if (opcode == op::JUMPDEST && s.run.trace.offsets.back() != s.pc)
                s.run.trace.offsets.push_back(s.pc);
            const auto next_pc = s.pc + 1 + (opcode >= op::PUSH1 && opcode <= op::PUSH32 ? opcode - op::PUSH1 + 1 : 0);

            if (opcode >= op::PUSH0 && opcode <= op::PUSH32)
            {
                Word w;
                for (uint64_t i = s.pc + 1; i < next_pc; ++i)
                {
                    w = shl(w, 8);
                    w.limb[0] |= i < code.size() ? code[i] : 0;
                }
                s.stack.push_back({w, false});
                s.pc = next_pc;
                if (s.stack.size() > 1024)
                {
                    finish(RunOutcome::Revert);
                    break;
                }
                continue;
            }
            if (opcode >= op::DUP1 && opcode <= op::DUP16)
            {
                const size_t n = opcode - op::DUP1 + 1;
                if (s.stack.size() < n)
                {
                    finish(RunOutcome::Revert);
                    break;
                }
                s.stack.push_back(s.stack[s.stack.size() - n]);
                s.pc = next_pc;
                continue;
            }
            if (opcode >= op::SWAP1 && opcode <= op::SWAP16)
            {
                const size_t n = opcode - op::SWAP1 + 1;
                if (s.stack.size() < n + 1)
                {
                    finish(RunOutcome::Revert);
                    break;
                }
                std::swap(s.stack.back(), s.stack[s.stack.size() - 1 - n]);
                s.pc = next_pc;
                continue;
            }
            if (is_foldable(opcode))
            {
                const size_t n = (opcode == op::NOT || opcode == op::ISZERO) ? 1 : 2;
                if (s.stack.size() < n)
                {
                    finish(RunOutcome::Revert);
                    break;
                }
                std::vector<Word> args;
                bool input = false;
                for (size_t i = 0; i < n; ++i)
                {
                    args.push_back(s.stack.back().value);
                    input |= s.stack.back().input;
                    s.stack.pop_back();
                }
                s.stack.push_back({interp_eval(opcode, args), input});
                s.pc = next_pc;
                continue;
            }

            bool stop = false;
            switch (opcode)
            {
            case op::JUMPDEST:
                s.pc = next_pc;
                break;
            case op::POP:
            {
                Slot x;
                if (!pop(x))
                {
                    finish(RunOutcome::Revert);
                    stop = true;
                    break;
                }
                s.pc = next_pc;
                break;
            }
            case op::CALLDATALOAD:
            {
                Slot x;
                if (!pop(x))
                {
                    finish(RunOutcome::Revert);
                    stop = true;
                    break;
                }
                s.stack.push_back({Word::from(config.calldata_value), true});
                s.pc = next_pc;
                break;
            }
            case op::MLOAD:
            {
                Slot at;
                if (!pop(at) || !touch(s.memory, at.value, 32))
                {
                    finish(RunOutcome::Revert);
                    stop = true;
                    break;
                }
                Word w;
                for (uint64_t i = 0; i < 32; ++i)
                {
                    w = shl(w, 8);
                    w.limb[0] |= s.memory[at.value.limb[0] + i];
                }
                s.stack.push_back({w, false});
                s.pc = next_pc;
                break;
            }
            case op::MSTORE:
            case op::MSTORE8:
            {
                Slot at, x;
                const uint64_t width = opcode == op::MSTORE ? 32 : 1;
                if (!pop(at) || !pop(x) || !touch(s.memory, at.value, width))
                {
                    finish(RunOutcome::Revert);
                    stop = true;
                    break;
                }
                for (uint64_t i = 0; i < width; ++i)
                {
                    const auto byte_index = width - 1 - i;
                    s.memory[at.value.limb[0] + i] =
                        static_cast<uint8_t>(x.value.limb[byte_index / 8] >> (8 * (byte_index % 8)));
                }
                s.pc = next_pc;
                break;
            }
            case op::JUMP:
            {
                Slot dest;
                if (!pop(dest) || dest.value.limb[1] | dest.value.limb[2] | dest.value.limb[3] ||
                    dest.value.limb[0] >= code.size() || !valid[dest.value.limb[0]])
                {
                    finish(RunOutcome::Revert);
                    stop = true;
                    break;
                }
                s.pc = dest.value.limb[0];
                s.run.trace.offsets.push_back(s.pc);
                break;
            }
            case op::JUMPI:
            {
                Slot dest, cond;
                if (!pop(dest) || !pop(cond))
                {
                    finish(RunOutcome::Revert);
                    stop = true;
                    break;
                }
                const bool dest_ok = !(dest.value.limb[1] | dest.value.limb[2] | dest.value.limb[3]) &&
                                     dest.value.limb[0] < code.size() && valid[dest.value.limb[0]];

                auto take = [&](State& st) {
                    if (!dest_ok)
                        return false;
                    st.pc = dest.value.limb[0];
                    st.run.trace.offsets.push_back(st.pc);
                    return true;
                };
                auto fall = [&](State& st) {
                    st.pc = next_pc;
                    st.run.trace.offsets.push_back(st.pc);
                };

                if (cond.input && s.run.decisions < config.branch_bound)
                {
                    ++s.run.decisions;
                    State other = s;
                    fall(other);
                    pending.push_back(std::move(other));
                    if (!take(s))
                    {
                        finish(RunOutcome::Revert);
                        stop = true;
                    }
                }
                else if (!is_zero(cond.value))
                {
                    if (!take(s))
                    {
                        finish(RunOutcome::Revert);
                        stop = true;
                    }
                }
                else
                    fall(s);
                break;
            }
            case op::STOP:
                finish(RunOutcome::Stop);
                stop = true;
                break;
            case op::SELFDESTRUCT:
            {
                Slot x;
                finish(pop(x) ? RunOutcome::Stop : RunOutcome::Revert);
                stop = true;
                break;
            }
            case op::RETURN:
            case op::REVERT:
            {
                Slot a, b;
                const bool ok = pop(a) && pop(b);
                finish(ok && opcode == op::RETURN ? RunOutcome::Return : RunOutcome::Revert);
                stop = true;
                break;
            }
            case op::INVALID:
                finish(RunOutcome::Revert);
                stop = true;
                break;
            default:
                if (!op_info(opcode).defined)
                {
                    finish(RunOutcome::Revert);
                    stop = true;
                    break;
                }
                throw InterpreterError("unsupported opcode " + mnemonic(opcode) + " at offset " +
                                       std::to_string(s.pc));
            }
            if (stop)
                break;
        }
    }
    return runs;
}

std::vector<Trace> interpret(std::span<const uint8_t> code, uint32_t branch_bound)
{
    InterpreterConfig config;
    config.branch_bound = branch_bound;
    std::vector<Trace> out;
    for (auto& r : interpret_runs(code, config))
        out.push_back(std::move(r.trace));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace reusecfg
