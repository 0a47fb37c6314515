#include <reusecfg/emulator.hpp>

#include <algorithm>
#include <array>

namespace reusecfg
{
namespace
{
// Interning tags.
constexpr uint32_t tag_result = 0;
constexpr uint32_t tag_underflow = 1;
constexpr uint32_t tag_phi = 2;
constexpr uint32_t tag_widened = 3;

u256 exp_mod(u256 base, u256 exponent)
{
    u256 result = 1;
    while (exponent != 0)
    {
        if ((exponent & 1) != 0)
            result *= base;
        base *= base;
        exponent >>= 1;
    }
    return result;
}
}  // namespace

std::string_view to_string(EdgeKind k) noexcept
{
    return k == EdgeKind::Jump ? "jump" : "fallthrough";
}

size_t ValueTable::KeyHash::operator()(const Key& k) const noexcept
{
    size_t h = std::hash<uint64_t>{}(k.pc) ^ (size_t{k.site} << 32) ^ (size_t{k.tag} << 20);
    for (const auto id : k.operands)
        h = h * 1099511628211ULL ^ id;
    return h;
}

ValueId ValueTable::push(Value v)
{
    v.id = static_cast<ValueId>(values_.size());
    values_.push_back(std::move(v));
    return values_.back().id;
}

ValueId ValueTable::make_const(const u256& v, uint64_t pc, uint32_t site)
{
    Value val;
    val.kind = ValueKind::Const;
    val.constant = v;
    val.pc = pc;
    val.site = site;
    return push(std::move(val));
}

ValueId ValueTable::make_sym(
    uint8_t opcode, std::vector<ValueId> operands, uint64_t pc, uint32_t site)
{
    Value val;
    val.kind = ValueKind::Sym;
    val.opcode = opcode;
    val.operands = std::move(operands);
    val.pc = pc;
    val.site = site;
    return push(std::move(val));
}

ValueId ValueTable::make_folded(
    const u256& v, uint8_t opcode, std::vector<ValueId> operands, uint64_t pc, uint32_t site)
{
    Value val;
    val.kind = ValueKind::Const;
    val.constant = v;
    val.opcode = opcode;
    val.folded = true;
    val.operands = std::move(operands);
    val.pc = pc;
    val.site = site;
    return push(std::move(val));
}

ValueId ValueTable::make_unknown(std::string reason, uint64_t pc, uint32_t site)
{
    Value val;
    val.kind = ValueKind::Unknown;
    val.reason = std::move(reason);
    val.pc = pc;
    val.site = site;
    return push(std::move(val));
}

ValueId ValueTable::make_phi(std::span<const ValueId> members, uint64_t pc, uint32_t site)
{
    Value val;
    val.kind = ValueKind::Phi;
    val.pc = pc;
    val.site = site;
    const auto id = push(std::move(val));
    for (const auto m : members)
        add_phi_member(id, m);
    return id;
}

bool ValueTable::add_phi_member(ValueId phi, ValueId member)
{
    if (member == phi)
        return false;
    if (values_.at(member).kind == ValueKind::Phi)
    {
        // Copy first: the member list may alias when phis reference each other.
        const auto nested = values_[member].members;
        bool grew = false;
        for (const auto m : nested)
            grew |= add_phi_member(phi, m);
        return grew;
    }
    auto& members = values_.at(phi).members;
    for (const auto m : members)
    {
        if (same(m, member))
            return false;
    }
    members.insert(std::upper_bound(members.begin(), members.end(), member), member);
    return true;
}

std::optional<ValueId> ValueTable::lookup(const Key& k) const
{
    const auto it = interned_.find(k);
    if (it == interned_.end())
        return std::nullopt;
    return it->second;
}

void ValueTable::remember(Key k, ValueId id)
{
    interned_.emplace(std::move(k), id);
}

bool ValueTable::same(ValueId a, ValueId b) const
{
    if (a == b)
        return true;
    const auto& va = values_.at(a);
    const auto& vb = values_.at(b);
    return va.is_const() && vb.is_const() && va.constant == vb.constant;
}

u256 fold(uint8_t opcode, std::span<const u256> args)
{
    const auto& a = args[0];
    switch (opcode)
    {
    case op::ADD:
        return a + args[1];
    case op::MUL:
        return a * args[1];
    case op::SUB:
        return a - args[1];
    case op::DIV:
        return args[1] == 0 ? u256{0} : u256{a / args[1]};
    case op::MOD:
        return args[1] == 0 ? u256{0} : u256{a % args[1]};
    case op::EXP:
        return exp_mod(a, args[1]);
    case op::AND:
        return a & args[1];
    case op::OR:
        return a | args[1];
    case op::XOR:
        return a ^ args[1];
    case op::NOT:
        return ~a;
    case op::LT:
        return a < args[1] ? 1 : 0;
    case op::GT:
        return a > args[1] ? 1 : 0;
    case op::EQ:
        return a == args[1] ? 1 : 0;
    case op::ISZERO:
        return a == 0 ? 1 : 0;
    case op::SHL:
        return a >= 256 ? u256{0} : u256{args[1] << static_cast<unsigned>(a)};
    case op::SHR:
        return a >= 256 ? u256{0} : u256{args[1] >> static_cast<unsigned>(a)};
    case op::BYTE:
        if (a >= 32)
            return 0;
        return (args[1] >> (8 * (31 - static_cast<unsigned>(a)))) & 0xff;
    default:
        break;
    }
    throw std::invalid_argument("opcode is not foldable: " + mnemonic(opcode));
}

namespace
{
class BlockEmulator
{
public:
    BlockEmulator(ValueTable& table, uint32_t site, Diagnostics& diags)
      : table_{table}, site_{site}, diags_{diags}
    {}

    EmulationResult run(const BasicBlock& block, const StackState& s_start)
    {
        stack_ = s_start.entries;
        EmulationResult res;
        for (const auto& ins : block.instructions)
            step(ins, res);
        if (block.terminator == Terminator::FallThrough)
            res.successors.push_back({EdgeKind::FallThrough, u256{block.end_offset()}, 0});
        res.s_end.entries = std::move(stack_);
        return res;
    }

private:
    ValueId intern(uint64_t pc, uint32_t tag, std::vector<ValueId> operands, auto&& make)
    {
        ValueTable::Key key{site_, pc, tag, std::move(operands)};
        if (const auto id = table_.lookup(key))
            return *id;
        const auto id = make(key.operands);
        table_.remember(std::move(key), id);
        return id;
    }

    /// Ensures at least `n` entries, padding the bottom with underflow
    /// placeholders.
    void require(size_t n, uint64_t pc)
    {
        if (stack_.size() >= n)
            return;
        const auto missing = n - stack_.size();
        if (!underflow_reported_)
        {
            diags_.warn("stack underflow", pc);
            underflow_reported_ = true;
        }
        std::vector<ValueId> pad;
        for (size_t k = 0; k < missing; ++k)
        {
            pad.push_back(intern(pc, tag_underflow, {static_cast<ValueId>(k)},
                [&](const auto&) { return table_.make_unknown("underflow", pc, site_); }));
        }
        stack_.insert(stack_.begin(), pad.rbegin(), pad.rend());
    }

    ValueId pop(uint64_t pc)
    {
        require(1, pc);
        const auto v = stack_.back();
        stack_.pop_back();
        return v;
    }

    void push_value(ValueId v, uint64_t pc)
    {
        stack_.push_back(v);
        if (stack_.size() > max_stack_depth && !overflow_reported_)
        {
            diags_.warn("stack overflow beyond 1024 entries", pc);
            overflow_reported_ = true;
        }
    }

    void step(const Instruction& ins, EmulationResult& res)
    {
        const auto pc = ins.offset;
        const auto opcode = ins.opcode;
        TacEntry tac{pc, opcode, {}, std::nullopt};

        if (is_push(opcode) || opcode == op::PUSH0)
        {
            const u256 v = ins.push_data.value_or(0);
            const auto id =
                intern(pc, tag_result, {}, [&](const auto&) { return table_.make_const(v, pc, site_); });
            push_value(id, pc);
            tac.result = id;
        }
        else if (is_dup(opcode))
        {
            const size_t n = opcode - op::DUP1 + 1;
            require(n, pc);
            const auto v = stack_[stack_.size() - n];
            tac.args = {v};
            push_value(v, pc);
        }
        else if (is_swap(opcode))
        {
            const size_t n = opcode - op::SWAP1 + 1;
            require(n + 1, pc);
            auto& top = stack_.back();
            auto& other = stack_[stack_.size() - 1 - n];
            tac.args = {top, other};
            std::swap(top, other);
        }
        else if (opcode == op::JUMP)
        {
            const auto target = pop(pc);
            tac.args = {target};
            add_jump_successors(target, pc, res);
        }
        else if (opcode == op::JUMPI)
        {
            const auto target = pop(pc);
            const auto cond = pop(pc);
            tac.args = {target, cond};
            add_jump_successors(target, pc, res);
            res.successors.push_back({EdgeKind::FallThrough, u256{ins.next_offset()}, 0});
        }
        else
        {
            const auto& info = op_info(opcode);
            std::vector<ValueId> args;
            args.reserve(info.pops);
            for (unsigned k = 0; k < info.pops; ++k)
                args.push_back(pop(pc));
            tac.args = args;
            if (info.pushes == 1)
            {
                const auto id = intern(pc, tag_result, args, [&](const auto& operands) {
                    return make_result(opcode, operands, pc);
                });
                push_value(id, pc);
                tac.result = id;
            }
        }
        res.tac.push_back(std::move(tac));
    }

    ValueId make_result(uint8_t opcode, const std::vector<ValueId>& args, uint64_t pc)
    {
        if (is_foldable(opcode))
        {
            std::array<u256, 2> vals{};
            bool all_const = true;
            for (size_t k = 0; k < args.size(); ++k)
            {
                const auto& v = table_[args[k]];
                if (!v.is_const())
                {
                    all_const = false;
                    break;
                }
                vals[k] = v.constant;
            }
            if (all_const)
            {
                const auto folded = fold(opcode, std::span{vals.data(), args.size()});
                return table_.make_folded(folded, opcode, args, pc, site_);
            }
        }
        return table_.make_sym(opcode, args, pc, site_);
    }

    void add_jump_successors(ValueId target, uint64_t pc, EmulationResult& res)
    {
        const auto& v = table_[target];
        if (v.is_const())
        {
            res.successors.push_back({EdgeKind::Jump, v.constant, target});
            return;
        }
        if (v.kind == ValueKind::Phi && !v.members.empty() &&
            std::all_of(v.members.begin(), v.members.end(),
                [&](ValueId m) { return table_[m].is_const(); }))
        {
            for (const auto m : v.members)
                res.successors.push_back({EdgeKind::Jump, table_[m].constant, target});
            return;
        }
        diags_.warn("unresolved jump at offset " + std::to_string(pc), pc);
        res.successors.push_back({EdgeKind::Jump, std::nullopt, target});
    }

    ValueTable& table_;
    uint32_t site_;
    Diagnostics& diags_;
    std::vector<ValueId> stack_;
    bool underflow_reported_ = false;
    bool overflow_reported_ = false;
};
}  // namespace

EmulationResult emulate_block(const BasicBlock& block, const StackState& s_start,
    ValueTable& table, uint32_t site, Diagnostics& diags)
{
    return BlockEmulator{table, site, diags}.run(block, s_start);
}

MergeResult prepare_stack(ValueTable& table, const StackState& pred_end,
    const std::optional<StackState>& existing, uint32_t site, Diagnostics& diags,
    uint64_t block_offset, bool widen)
{
    if (!existing)
        return {pred_end, false};

    MergeResult res{*existing, false};
    auto& entries = res.merged.entries;
    if (pred_end.size() != entries.size())
        diags.warn("irregular stack depth at join", block_offset);

    const auto common = std::min(pred_end.size(), entries.size());
    for (size_t depth = 0; depth < common; ++depth)
    {
        auto& slot = entries[entries.size() - 1 - depth];
        const auto incoming = pred_end.at_depth(depth);
        if (table.same(slot, incoming))
            continue;

        const auto& cur = table[slot];
        if (cur.kind == ValueKind::Unknown && cur.reason == "widened")
            continue;

        if (widen)
        {
            ValueTable::Key key{site, depth, tag_widened, {}};
            auto id = table.lookup(key);
            if (!id)
            {
                id = table.make_unknown("widened", block_offset, site);
                table.remember(key, *id);
            }
            slot = *id;
            res.changed = true;
            continue;
        }

        ValueTable::Key key{site, depth, tag_phi, {}};
        const auto phi = table.lookup(key);
        if (phi && *phi == slot)
        {
            res.changed |= table.add_phi_member(slot, incoming);
            continue;
        }
        ValueId id;
        if (phi)
            id = *phi;
        else
        {
            id = table.make_phi({}, block_offset, site);
            table.remember(key, id);
        }
        table.add_phi_member(id, slot);
        table.add_phi_member(id, incoming);
        slot = id;
        res.changed = true;
    }
    return res;
}

std::set<ValueId> trace_origin(ValueId v, const ValueTable& table)
{
    std::set<ValueId> seen;
    std::vector<ValueId> work{v};
    while (!work.empty())
    {
        const auto id = work.back();
        work.pop_back();
        if (!seen.insert(id).second)
            continue;
        const auto& val = table[id];
        switch (val.kind)
        {
        case ValueKind::Sym:
            work.insert(work.end(), val.operands.begin(), val.operands.end());
            break;
        case ValueKind::Const:
            if (val.folded)
                work.insert(work.end(), val.operands.begin(), val.operands.end());
            break;
        case ValueKind::Phi:
            work.insert(work.end(), val.members.begin(), val.members.end());
            break;
        case ValueKind::Unknown:
            break;
        }
    }
    return seen;
}

std::string format_tac(const TacEntry& e, const ValueTable& table)
{
    auto arg = [&](ValueId id) {
        const auto& v = table[id];
        return v.is_const() ? to_hex(v.constant) : "v" + std::to_string(id);
    };
    std::string line;
    if (e.result)
        line = "v" + std::to_string(*e.result) + " = ";
    line += mnemonic(e.opcode);
    line += '(';
    if (e.result && table[*e.result].is_const() && !table[*e.result].folded)
    {
        line += to_hex(table[*e.result].constant);
    }
    else
    {
        for (size_t k = 0; k < e.args.size(); ++k)
        {
            if (k != 0)
                line += ", ";
            line += arg(e.args[k]);
        }
    }
    line += ')';
    return line;
}

}  // namespace reusecfg
