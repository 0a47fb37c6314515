#include <reusecfg/corpus.hpp>

#include <json.hpp>

#include <algorithm>
#include <random>

namespace reusecfg
{
std::string_view to_string(Pattern p) noexcept
{
    switch (p)
    {
    case Pattern::BasicFakeJoin:
        return "BasicFakeJoin";
    case Pattern::BasicFakeLoop:
        return "BasicFakeLoop";
    case Pattern::FakeJoinSequence:
        return "FakeJoinSequence";
    case Pattern::NestedFakeLoops:
        return "NestedFakeLoops";
    case Pattern::FakeJoinWithReal:
        return "FakeJoinWithReal";
    case Pattern::FakeLoopWithRealLoop:
        return "FakeLoopWithRealLoop";
    case Pattern::FakeJoinMultiExit:
        return "FakeJoinMultiExit";
    case Pattern::FakeLoopWithTransfers:
        return "FakeLoopWithTransfers";
    }
    return "?";
}

std::optional<Pattern> parse_pattern(std::string_view name) noexcept
{
    for (const auto p : all_patterns)
    {
        if (to_string(p) == name)
            return p;
    }
    return std::nullopt;
}

namespace
{
/// Builds one or more pattern instances. Each unit is a run of blocks that
/// must stay contiguous (fallthrough chains); units are shuffled by seed.
class Builder
{
public:
    explicit Builder(uint64_t seed) : rng_{seed} {}

    /// New unit; returns it for chaining.
    Assembler& unit()
    {
        units_.emplace_back();
        return units_.back();
    }

    /// Zero to two neutral PUSH/POP pairs.
    void filler(Assembler& a)
    {
        const auto n = std::uniform_int_distribution<int>{0, 2}(rng_);
        for (int i = 0; i < n; ++i)
            a.push(std::uniform_int_distribution<unsigned>{0, 255}(rng_)).op(op::POP);
    }

    /// Callee call with a pre-pushed return address.
    void call(Assembler& a, const std::string& ret, const std::string& target)
    {
        a.push_label(ret).push_label(target).op(op::JUMP);
    }

    /// Calldata word offset used for an input-dependent branch.
    unsigned calldata_slot() { return 32 * std::uniform_int_distribution<unsigned>{0, 7}(rng_); }

    uint32_t small_int(uint32_t lo, uint32_t hi)
    {
        return std::uniform_int_distribution<uint32_t>{lo, hi}(rng_);
    }

    void entry(const std::string& label) { entries_.push_back(label); }
    void reused(const std::string& label) { reused_.push_back(label); }

    /// Dispatcher at offset 0 branching on calldata to every entry, then the
    /// shuffled units, then a short never-executed data tail.
    Assembler link()
    {
        Assembler out;
        for (size_t i = 0; i + 1 < entries_.size(); ++i)
            out.push(32 * (i % 8)).op(op::CALLDATALOAD).push_label(entries_[i]).op(op::JUMPI);
        out.push_label(entries_.back()).op(op::JUMP);

        std::shuffle(units_.begin(), units_.end(), rng_);
        for (const auto& u : units_)
            out.append(u);

        out.op(op::INVALID);
        const auto tail = std::uniform_int_distribution<int>{0, 8}(rng_);
        for (int i = 0; i < tail; ++i)
        {
            // Keep JUMPDEST out of the data so no dead block masquerades as a
            // jump target.
            auto b = static_cast<uint8_t>(std::uniform_int_distribution<unsigned>{0, 255}(rng_));
            if (b == op::JUMPDEST)
                b = 0;
            out.raw(std::span{&b, 1});
        }
        return out;
    }

    const std::vector<std::string>& reused_labels() const { return reused_; }

private:
    std::mt19937_64 rng_;
    std::vector<Assembler> units_;
    std::vector<std::string> entries_;
    std::vector<std::string> reused_;
};

struct Counts
{
    bigint sensitive;
    bigint insensitive;
};

/// Emits one instance with label prefix `p`; returns its closed-form path
/// counts (summed over the instance's entries).
Counts emit(Builder& b, Pattern pattern, uint32_t d, const std::string& p)
{
    const auto L = [&](const std::string& name) { return p + name; };
    const auto I = [&](const std::string& name, uint32_t i) { return p + name + std::to_string(i); };

    switch (pattern)
    {
    case Pattern::BasicFakeJoin:
    {
        // k callers share X; X returns to the caller's pre-pushed C_i.
        const uint32_t k = d + 1;
        auto& x = b.unit().label(L("X"));
        b.filler(x);
        x.op(op::JUMP);
        b.reused(L("X"));
        for (uint32_t i = 0; i < k; ++i)
        {
            auto& a = b.unit().label(I("A", i));
            b.filler(a);
            b.call(a, I("C", i), L("X"));
            auto& c = b.unit().label(I("C", i));
            b.filler(c);
            c.op(op::STOP);
            b.entry(I("A", i));
        }
        return {k, bigint{k} * k};
    }
    case Pattern::BasicFakeLoop:
    {
        // A pre-pushes C, B_d..B_1; X is entered d+1 times, each time
        // leaving to the next address on the stack.
        auto& a = b.unit().label(L("A"));
        b.filler(a);
        a.push_label(L("C"));
        for (uint32_t j = d; j >= 1; --j)
            a.push_label(I("B", j));
        a.push_label(L("X")).op(op::JUMP);
        auto& x = b.unit().label(L("X"));
        b.filler(x);
        x.op(op::JUMP);
        for (uint32_t j = 1; j <= d; ++j)
        {
            auto& bj = b.unit().label(I("B", j));
            b.filler(bj);
            bj.push_label(L("X")).op(op::JUMP);
        }
        b.unit().label(L("C")).op(op::STOP);
        b.entry(L("A"));
        b.reused(L("X"));
        return {1, d + 1};
    }
    case Pattern::FakeJoinSequence:
    {
        // Level 0 is X; level j has B_j calling level j-1 and returning
        // through D_j. A_i enters at level i, E and F at the top level.
        const auto level = [&](uint32_t j) { return j == 0 ? L("X") : I("B", j); };
        auto& x = b.unit().label(L("X"));
        b.filler(x);
        x.op(op::JUMP);
        b.reused(L("X"));
        for (uint32_t j = 1; j <= d; ++j)
        {
            auto& bj = b.unit().label(I("B", j));
            b.filler(bj);
            b.call(bj, I("D", j), level(j - 1));
            auto& dj = b.unit().label(I("D", j));
            b.filler(dj);
            dj.op(op::JUMP);
            b.reused(I("B", j));
            b.reused(I("D", j));
        }
        for (uint32_t i = 0; i < d; ++i)
        {
            auto& a = b.unit().label(I("A", i));
            b.filler(a);
            b.call(a, I("C", i), level(i));
            b.unit().label(I("C", i)).op(op::STOP);
            b.entry(I("A", i));
        }
        for (const auto* name : {"E", "F"})
        {
            const std::string ret = std::string{name} == "E" ? L("G") : L("H");
            auto& e = b.unit().label(L(name));
            b.filler(e);
            b.call(e, ret, level(d));
            b.unit().label(ret).op(op::STOP);
            b.entry(L(name));
        }
        const uint32_t n = d + 2;
        return {n, bigint{n} * n};
    }
    case Pattern::NestedFakeLoops:
    {
        // Q_0 = B; Q_j = A_j calls Q_{j-1}, then C_j tail-calls Q_{j-1}.
        // M runs Q_d twice through R1.
        const auto q = [&](uint32_t j) { return j == 0 ? L("B") : I("A", j); };
        auto& bb = b.unit().label(L("B"));
        b.filler(bb);
        bb.op(op::JUMP);
        b.reused(L("B"));
        for (uint32_t j = 1; j <= d; ++j)
        {
            auto& a = b.unit().label(I("A", j));
            b.filler(a);
            b.call(a, I("C", j), q(j - 1));
            auto& c = b.unit().label(I("C", j));
            b.filler(c);
            c.push_label(q(j - 1)).op(op::JUMP);
            b.reused(I("A", j));
            b.reused(I("C", j));
        }
        auto& m = b.unit().label(L("M"));
        b.filler(m);
        m.push_label(L("R2"));
        b.call(m, L("R1"), q(d));
        auto& r1 = b.unit().label(L("R1"));
        b.filler(r1);
        r1.push_label(q(d)).op(op::JUMP);
        b.unit().label(L("R2")).op(op::STOP);
        b.entry(L("M"));
        return {1, d + 2};
    }
    case Pattern::FakeJoinWithReal:
    {
        // A reuses X towards C; B_0..B_d really join at X towards D, each
        // with its own data word underneath.
        auto& x = b.unit().label(L("X"));
        b.filler(x);
        x.op(op::JUMP);
        b.reused(L("X"));
        auto& a = b.unit().label(L("A"));
        a.push(b.small_int(0, 255));
        b.call(a, L("C"), L("X"));
        b.entry(L("A"));
        for (uint32_t i = 0; i <= d; ++i)
        {
            auto& bi = b.unit().label(I("B", i));
            b.filler(bi);
            bi.push(b.small_int(0, 255));
            b.call(bi, L("D"), L("X"));
            b.entry(I("B", i));
        }
        b.unit().label(L("C")).op(op::POP).op(op::STOP);
        b.unit().label(L("D")).op(op::POP).op(op::STOP);
        return {d + 2, bigint{2} * (d + 2)};
    }
    case Pattern::FakeLoopWithRealLoop:
    {
        // Countdown loop L/F called d+1 times in a chain K_0..K_d.
        auto& l = b.unit().label(L("L"));
        l.op(op::DUP1).op(op::ISZERO).op(op::DUP1 + 2).op(op::JUMPI);
        l.mark(L("F"));
        l.push(1).op(op::SWAP1).op(op::SUB).push_label(L("L")).op(op::JUMP);
        b.reused(L("L"));
        b.reused(L("F"));

        auto& m = b.unit().label(L("M"));
        b.filler(m);
        m.push_label(I("K", 0)).push(b.small_int(1, 3)).push_label(L("L")).op(op::JUMP);
        b.entry(L("M"));
        for (uint32_t i = 0; i <= d; ++i)
        {
            auto& k = b.unit().label(I("K", i));
            k.op(op::POP).op(op::POP);
            if (i == d)
            {
                k.op(op::STOP);
                break;
            }
            b.filler(k);
            k.push_label(I("K", i + 1)).push(b.small_int(1, 3)).push_label(L("L")).op(op::JUMP);
        }
        return {d + 2, d + 2};
    }
    case Pattern::FakeJoinMultiExit:
    {
        // Cluster X (branch) -> Y | Z, both returning to the caller.
        const uint32_t k = d + 1;
        auto& x = b.unit().label(L("X"));
        b.filler(x);
        x.push(b.calldata_slot()).op(op::CALLDATALOAD).push_label(L("Z")).op(op::JUMPI);
        x.mark(L("Y"));
        x.op(op::JUMP);
        auto& z = b.unit().label(L("Z"));
        b.filler(z);
        z.op(op::JUMP);
        for (const auto* n : {"X", "Y", "Z"})
            b.reused(L(n));
        for (uint32_t i = 0; i < k; ++i)
        {
            auto& a = b.unit().label(I("A", i));
            b.filler(a);
            b.call(a, I("C", i), L("X"));
            b.unit().label(I("C", i)).op(op::STOP);
            b.entry(I("A", i));
        }
        return {2 * k, bigint{2} * k * k};
    }
    case Pattern::FakeLoopWithTransfers:
    {
        // Cluster A (branch) -> X | Y -> Z (join), executed twice per caller:
        // first returning to B_i, which re-enters A, then to C_i.
        const uint32_t k = d;
        auto& a = b.unit().label(L("A"));
        b.filler(a);
        a.push(b.calldata_slot()).op(op::CALLDATALOAD).push_label(L("Y")).op(op::JUMPI);
        a.mark(L("X"));
        a.push_label(L("Z")).op(op::JUMP);
        auto& y = b.unit().label(L("Y"));
        b.filler(y);
        y.push_label(L("Z")).op(op::JUMP);
        auto& z = b.unit().label(L("Z"));
        b.filler(z);
        z.op(op::JUMP);
        for (const auto* n : {"A", "X", "Y", "Z"})
            b.reused(L(n));
        for (uint32_t i = 0; i < k; ++i)
        {
            auto& pi = b.unit().label(I("P", i));
            b.filler(pi);
            pi.push_label(I("C", i));
            b.call(pi, I("B", i), L("A"));
            auto& bi = b.unit().label(I("B", i));
            b.filler(bi);
            bi.push_label(L("A")).op(op::JUMP);
            b.unit().label(I("C", i)).op(op::STOP);
            b.entry(I("P", i));
        }
        return {4 * k, bigint{4} * k * k};
    }
    }
    throw std::invalid_argument("unknown pattern");
}
}  // namespace

GroundTruth generate(const PatternSpec& spec)
{
    if (spec.nesting_depth == 0)
        throw std::invalid_argument("nesting_depth must be at least 1");
    // Every pattern grows at least linearly with depth; reject early before
    // building something absurd.
    if (spec.nesting_depth > 4096)
        throw std::invalid_argument("nesting_depth too large: code would exceed 24576 bytes");

    Builder b{spec.seed};
    const auto counts = emit(b, spec.pattern, spec.nesting_depth, "");
    const auto linked = b.link();

    GroundTruth gt;
    gt.bytecode = linked.finish();
    if (gt.bytecode.size() > max_code_size)
        throw std::invalid_argument("generated code is " + std::to_string(gt.bytecode.size()) +
                                    " bytes, above the 24576-byte limit");
    for (const auto& name : b.reused_labels())
        gt.reused_offsets.insert(linked.offset_of(name));
    gt.expected_sensitive_paths = counts.sensitive;
    gt.expected_insensitive_paths = counts.insensitive;
    gt.traces = interpret(gt.bytecode);
    return gt;
}

GroundTruth guarded_calls_example()
{
    // x = calldata[0]
    // if (calldata[1]) x = inc(x)     inc is shared: SWAP1 +2 SWAP1 JUMP
    // if (calldata[2]) x = inc(x)
    Assembler a;
    a.push(0).op(op::CALLDATALOAD);
    a.push(0x20).op(op::CALLDATALOAD).op(op::ISZERO).push_label("join1").op(op::JUMPI);
    a.push_label("after1").push_label("inc").op(op::JUMP);
    a.label("after1");
    a.label("join1");
    a.push(0x40).op(op::CALLDATALOAD).op(op::ISZERO).push_label("join2").op(op::JUMPI);
    a.push_label("after2").push_label("inc").op(op::JUMP);
    a.label("after2");
    a.label("join2").op(op::POP).op(op::STOP);
    a.label("inc").op(op::SWAP1).push(2).op(op::ADD).op(op::SWAP1).op(op::JUMP);

    GroundTruth gt;
    gt.bytecode = a.finish();
    gt.reused_offsets = {a.offset_of("inc")};
    gt.expected_sensitive_paths = 4;
    gt.expected_insensitive_paths = 0;  // cyclic; no closed form
    gt.traces = interpret(gt.bytecode);
    return gt;
}

GroundTruth shared_callee_example(std::map<std::string, uint64_t>* offsets)
{
    Assembler a;
    a.mark("A").push_label("C").push_label("X").op(op::JUMP);
    a.label("X").op(op::JUMP);
    a.label("C").push(0).op(op::CALLDATALOAD).push_label("E").op(op::JUMPI);
    a.mark("B").push_label("D").push_label("X").op(op::JUMP);
    a.label("E").push_label("D").push_label("X").op(op::JUMP);
    a.label("D").op(op::STOP);

    GroundTruth gt;
    gt.bytecode = a.finish();
    gt.reused_offsets = {a.offset_of("X")};
    gt.expected_sensitive_paths = 2;
    gt.expected_insensitive_paths = 2;
    gt.traces = interpret(gt.bytecode);
    if (offsets != nullptr)
    {
        for (const auto* n : {"A", "X", "C", "B", "E", "D"})
            (*offsets)[n] = a.offset_of(n);
    }
    return gt;
}

bytes large_composition(uint64_t seed, size_t target_size)
{
    // Round-robin over the patterns at depth 4 until the next instance
    // would overflow the target.
    std::mt19937_64 rng{seed};
    bytes best;
    Builder b{seed};
    for (size_t n = 0;; ++n)
    {
        const auto pattern = all_patterns[n % all_patterns.size()];
        const auto depth = static_cast<uint32_t>(1 + rng() % 4);
        Builder trial = b;
        emit(trial, pattern, depth, "u" + std::to_string(n) + ".");
        auto code = Builder{trial}.link().finish();
        if (code.size() > target_size)
            break;
        b = std::move(trial);
        best = std::move(code);
    }
    return best;
}

std::string manifest_json(const PatternSpec& spec, const GroundTruth& gt)
{
    nlohmann::ordered_json j;
    j["pattern"] = std::string{to_string(spec.pattern)};
    j["seed"] = spec.seed;
    j["nesting_depth"] = spec.nesting_depth;
    j["code_size"] = gt.bytecode.size();
    j["bytecode"] = to_hex_string(gt.bytecode);
    auto reused = nlohmann::ordered_json::array();
    for (const auto off : gt.reused_offsets)
        reused.push_back(off);
    j["reused_offsets"] = std::move(reused);
    j["expected_sensitive_paths"] = gt.expected_sensitive_paths.str();
    j["expected_insensitive_paths"] = gt.expected_insensitive_paths.str();
    auto traces = nlohmann::ordered_json::array();
    for (const auto& t : gt.traces)
        traces.push_back(format_trace(t));
    j["traces"] = std::move(traces);
    return j.dump(2) + "\n";
}

}  // namespace reusecfg
