#include <reusecfg/corpus.hpp>
#include <reusecfg/emulator.hpp>

#include <gtest/gtest.h>

#include <deque>
#include <random>

using namespace reusecfg;

namespace
{
BasicBlock first_block(const bytes& code)
{
    return identify_blocks(disassemble(code)).at(0);
}

EmulationResult run_block(const bytes& code, ValueTable& t, Diagnostics& d, const StackState& start = {})
{
    return emulate_block(first_block(code), start, t, 0, d);
}

u256 random_word(std::mt19937_64& rng)
{
    switch (rng() % 6)
    {
    case 0:
        return rng() % 4;
    case 1:
        return rng() % 300;
    case 2:
        return ~u256{0} - (rng() % 3);
    case 3:
        return u256{1} << (rng() % 256);
    default:
    {
        u256 v = 0;
        for (int i = 0; i < 4; ++i)
            v = (v << 64) | u256{rng()};
        return v;
    }
    }
}

std::vector<uint8_t> foldable_opcodes()
{
    std::vector<uint8_t> out;
    for (int c = 0; c < 256; ++c)
    {
        if (is_foldable(static_cast<uint8_t>(c)))
            out.push_back(static_cast<uint8_t>(c));
    }
    return out;
}
}  // namespace

TEST(emulator, push_add_folds)
{
    ValueTable t;
    Diagnostics d;
    const auto r = run_block(assemble("PUSH1 2 PUSH1 3 ADD"), t, d);
    ASSERT_EQ(r.s_end.size(), 1u);
    const auto& v = t[r.s_end.at_depth(0)];
    EXPECT_TRUE(v.is_const());
    EXPECT_EQ(v.constant, 5);
    EXPECT_TRUE(d.empty());
}

TEST(emulator, and_with_symbol_keeps_operand_links)
{
    ValueTable t;
    Diagnostics d;
    const auto b = t.make_sym(op::CALLDATALOAD, {});
    const auto r = run_block(assemble("PUSH2 0xffff AND"), t, d, StackState{{b}});
    ASSERT_EQ(r.s_end.size(), 1u);
    const auto& v = t[r.s_end.at_depth(0)];
    EXPECT_EQ(v.kind, ValueKind::Sym);
    EXPECT_EQ(v.opcode, op::AND);
    ASSERT_EQ(v.operands.size(), 2u);
    EXPECT_EQ(t[v.operands[0]].constant, 0xffff);
    EXPECT_EQ(v.operands[1], b);
}

TEST(emulator, folded_constant_keeps_operands)
{
    ValueTable t;
    Diagnostics d;
    const auto r = run_block(assemble("PUSH1 2 PUSH1 3 ADD"), t, d);
    const auto& v = t[r.s_end.at_depth(0)];
    EXPECT_TRUE(v.folded);
    EXPECT_EQ(v.operands.size(), 2u);
}

TEST(emulator, jump_successor_from_constant)
{
    ValueTable t;
    Diagnostics d;
    const auto r = run_block(assemble("PUSH1 0x10 JUMP"), t, d);
    ASSERT_EQ(r.successors.size(), 1u);
    EXPECT_EQ(r.successors[0].kind, EdgeKind::Jump);
    EXPECT_EQ(*r.successors[0].target, 0x10);
}

TEST(emulator, jumpi_yields_target_and_fallthrough)
{
    ValueTable t;
    Diagnostics d;
    const auto c = t.make_sym(op::CALLDATALOAD, {});
    const auto r = run_block(assemble("PUSH1 0x10 JUMPI"), t, d, StackState{{c}});
    ASSERT_EQ(r.successors.size(), 2u);
    bool has_jump = false, has_fall = false;
    for (const auto& s : r.successors)
    {
        if (s.kind == EdgeKind::Jump)
            has_jump = s.target && *s.target == 0x10;
        else
            has_fall = s.target && *s.target == 3;
    }
    EXPECT_TRUE(has_jump);
    EXPECT_TRUE(has_fall);
    ASSERT_EQ(r.tac.size(), 2u);
    EXPECT_EQ(r.tac[1].args.size(), 2u);
}

TEST(emulator, symbolic_jump_is_unresolved)
{
    ValueTable t;
    Diagnostics d;
    const auto c = t.make_sym(op::CALLDATALOAD, {});
    const auto r = run_block(assemble("JUMP"), t, d, StackState{{c}});
    ASSERT_EQ(r.successors.size(), 1u);
    EXPECT_FALSE(r.successors[0].target.has_value());
}

TEST(emulator, terminator_has_no_successors)
{
    ValueTable t;
    Diagnostics d;
    EXPECT_TRUE(run_block(assemble("STOP"), t, d).successors.empty());
    EXPECT_TRUE(run_block(assemble("PUSH1 0 PUSH1 0 REVERT"), t, d).successors.empty());
}

TEST(emulator, non_foldable_yields_symbol)
{
    ValueTable t;
    Diagnostics d;
    const auto r = run_block(assemble("PUSH1 0 SLOAD"), t, d);
    const auto& v = t[r.s_end.at_depth(0)];
    EXPECT_EQ(v.kind, ValueKind::Sym);
    EXPECT_EQ(v.opcode, op::SLOAD);
}

TEST(emulator, underflow_yields_unknown_with_diagnostic)
{
    ValueTable t;
    Diagnostics d;
    const auto r = run_block(assemble("ADD"), t, d);
    ASSERT_EQ(r.s_end.size(), 1u);
    EXPECT_FALSE(d.empty());
    EXPECT_TRUE(d.contains("underflow"));
}

TEST(emulator, overflow_is_reported_and_emulation_continues)
{
    std::string text;
    for (int i = 0; i < 1030; ++i)
        text += "PUSH1 1 ";
    ValueTable t;
    Diagnostics d;
    const auto r = run_block(assemble(text), t, d);
    EXPECT_TRUE(d.contains("overflow"));
    EXPECT_EQ(r.s_end.size(), 1030u);
}

TEST(emulator, dup_and_swap_rearrange_ids)
{
    ValueTable t;
    Diagnostics d;
    const auto a = t.make_sym(op::CALLER, {});
    const auto b = t.make_sym(op::ORIGIN, {});
    const auto r = run_block(assemble("DUP2 SWAP2"), t, d, StackState{{a, b}});
    // [a, b] -> [a, b, a] -> [a, b, a] with swap2 exchanging top and depth 2
    EXPECT_EQ(r.s_end.entries, (std::vector<ValueId>{a, b, a}));
    const auto r2 = run_block(assemble("SWAP1"), t, d, StackState{{a, b}});
    EXPECT_EQ(r2.s_end.entries, (std::vector<ValueId>{b, a}));
}

TEST(emulator, stack_effect_matches_opcode_table)
{
    for (int c = 0; c < 256; ++c)
    {
        const auto opcode = static_cast<uint8_t>(c);
        const auto& info = op_info(opcode);
        if (!info.defined || is_push(opcode) || opcode == op::JUMPDEST)
            continue;
        ValueTable t;
        Diagnostics d;
        StackState start;
        for (int i = 0; i < 20; ++i)
            start.entries.push_back(t.make_sym(op::CALLDATALOAD, {}, static_cast<uint64_t>(i)));
        BasicBlock block;
        block.start_offset = 0;
        Instruction ins;
        ins.offset = 0;
        ins.opcode = opcode;
        ins.length = 1;
        block.instructions.push_back(ins);
        block.terminator = terminator_of(opcode).value_or(Terminator::FallThrough);
        const auto r = emulate_block(block, start, t, 0, d);
        EXPECT_EQ(r.s_end.size(), start.size() - info.pops + info.pushes) << mnemonic(opcode);
        // Symbolic jump targets are reported as unresolved; nothing else warns.
        if (opcode != op::JUMP && opcode != op::JUMPI)
            EXPECT_TRUE(d.empty()) << mnemonic(opcode);
    }
}

TEST(emulator, emulation_is_deterministic_and_idempotent)
{
    const auto code = assemble("PUSH1 4 CALLDATALOAD DUP1 PUSH1 2 ADD SLOAD SWAP1 PUSH1 0x20 JUMPI");
    ValueTable t1, t2;
    Diagnostics d;
    const auto a = run_block(code, t1, d);
    const auto b = run_block(code, t2, d);
    EXPECT_EQ(a.s_end, b.s_end);
    // Re-emulating with the same entry stack in the same table reuses ids.
    const auto size_before = t1.size();
    const auto again = run_block(code, t1, d);
    EXPECT_EQ(again.s_end, a.s_end);
    EXPECT_EQ(t1.size(), size_before);
}

TEST(emulator, fold_examples)
{
    const auto f = [](uint8_t opcode, std::vector<u256> args) { return fold(opcode, args); };
    EXPECT_EQ(f(op::ADD, {~u256{0}, 1}), 0);
    EXPECT_EQ(f(op::SUB, {0, 1}), ~u256{0});
    EXPECT_EQ(f(op::DIV, {5, 0}), 0);
    EXPECT_EQ(f(op::MOD, {5, 0}), 0);
    EXPECT_EQ(f(op::EXP, {2, 10}), 1024);
    EXPECT_EQ(f(op::SHL, {4, 1}), 16);
    EXPECT_EQ(f(op::SHR, {300, 1}), 0);
    EXPECT_EQ(f(op::BYTE, {31, 0xab}), 0xab);
    EXPECT_EQ(f(op::BYTE, {32, 0xab}), 0);
    EXPECT_EQ(f(op::ISZERO, {0}), 1);
    EXPECT_EQ(f(op::LT, {1, 2}), 1);
    EXPECT_EQ(f(op::GT, {1, 2}), 0);
    EXPECT_THROW(f(op::SLOAD, {0}), std::invalid_argument);
}

TEST(emulator, fold_agrees_with_reference_on_10000_tuples_per_opcode)
{
    std::mt19937_64 rng{99};
    for (const auto opcode : foldable_opcodes())
    {
        const auto arity = op_info(opcode).pops;
        int mismatches = 0;
        for (int i = 0; i < 10000; ++i)
        {
            std::vector<u256> args;
            std::vector<Word> words;
            for (unsigned k = 0; k < arity; ++k)
            {
                args.push_back(random_word(rng));
                words.push_back(Word::from(args.back()));
            }
            if (fold(opcode, args) != interp_eval(opcode, words).to_u256())
                ++mismatches;
        }
        EXPECT_EQ(mismatches, 0) << mnemonic(opcode);
    }
}

TEST(emulator, random_sequences_match_interpreter)
{
    std::mt19937_64 rng{5};
    const auto folds = foldable_opcodes();
    for (int iter = 0; iter < 1000; ++iter)
    {
        Assembler a;
        size_t depth = 0;
        const int len = 1 + static_cast<int>(rng() % 40);
        for (int i = 0; i < len; ++i)
        {
            const auto choice = rng() % 4;
            if (choice == 0 || depth < 2)
            {
                a.push(random_word(rng));
                ++depth;
            }
            else if (choice == 1)
            {
                const auto n = 1 + rng() % std::min<size_t>(depth, 4);
                if (rng() % 2)
                {
                    a.op(static_cast<uint8_t>(op::DUP1 + n - 1));
                    ++depth;
                }
                else if (n < depth)
                    a.op(static_cast<uint8_t>(op::SWAP1 + n - 1));
                else
                {
                    a.op(op::POP);
                    --depth;
                }
            }
            else
            {
                const auto opcode = folds[rng() % folds.size()];
                const auto& info = op_info(opcode);
                a.op(opcode);
                depth = depth - info.pops + info.pushes;
            }
        }
        a.op(op::STOP);
        const auto code = a.finish();

        ValueTable t;
        Diagnostics d;
        const auto r = run_block(code, t, d);
        const auto runs = interpret_runs(code);
        ASSERT_EQ(runs.size(), 1u);
        const auto& expect = runs[0].final_stack;
        ASSERT_EQ(r.s_end.size(), expect.size());
        for (size_t k = 0; k < expect.size(); ++k)
        {
            const auto& v = t[r.s_end.entries[k]];
            ASSERT_TRUE(v.is_const());
            EXPECT_EQ(v.constant, expect[k]) << "iteration " << iter;
        }
    }
}

TEST(emulator, prepare_stack_absent_copies)
{
    ValueTable t;
    Diagnostics d;
    const StackState s{{t.make_const(5)}};
    const auto m = prepare_stack(t, s, std::nullopt, 1, d);
    EXPECT_EQ(m.merged, s);
}

TEST(emulator, prepare_stack_equal_constants_unchanged)
{
    ValueTable t;
    Diagnostics d;
    const StackState a{{t.make_const(5, 1)}};
    const StackState b{{t.make_const(5, 2)}};
    const auto m = prepare_stack(t, a, b, 1, d);
    EXPECT_FALSE(m.changed);
    EXPECT_EQ(m.merged, b);
}

TEST(emulator, prepare_stack_differing_constants_make_phi)
{
    ValueTable t;
    Diagnostics d;
    const StackState five{{t.make_const(5)}};
    const StackState seven{{t.make_const(7)}};
    const auto m = prepare_stack(t, five, seven, 1, d);
    EXPECT_TRUE(m.changed);
    const auto& phi = t[m.merged.at_depth(0)];
    ASSERT_EQ(phi.kind, ValueKind::Phi);
    std::set<u256> members;
    for (const auto id : phi.members)
        members.insert(t[id].constant);
    EXPECT_EQ(members, (std::set<u256>{5, 7}));

    // Merging a member again changes nothing.
    const auto again = prepare_stack(t, StackState{{t.make_const(5, 9)}}, m.merged, 1, d);
    EXPECT_FALSE(again.changed);
    EXPECT_EQ(again.merged, m.merged);
    EXPECT_EQ(t[again.merged.at_depth(0)].members.size(), 2u);
}

TEST(emulator, prepare_stack_irregular_depth_is_top_aligned)
{
    ValueTable t;
    Diagnostics d;
    const auto x = t.make_const(1);
    const auto y = t.make_const(2);
    const auto z = t.make_const(3);
    const auto m = prepare_stack(t, StackState{{x, y, z}}, StackState{{y, z}}, 1, d, 0x40);
    EXPECT_TRUE(d.contains("irregular stack depth at join"));
    EXPECT_EQ(m.merged.size(), 2u);
    EXPECT_EQ(t[m.merged.at_depth(0)].constant, 3);
}

TEST(emulator, prepare_stack_widen_gives_unknown)
{
    ValueTable t;
    Diagnostics d;
    const auto m = prepare_stack(
        t, StackState{{t.make_const(5)}}, StackState{{t.make_const(7)}}, 1, d, 0, true);
    EXPECT_EQ(t[m.merged.at_depth(0)].kind, ValueKind::Unknown);
}

TEST(emulator, trace_origin_of_constant_is_itself)
{
    ValueTable t;
    const auto v = t.make_const(0x10);
    EXPECT_EQ(trace_origin(v, t), (std::set<ValueId>{v}));
}

TEST(emulator, trace_origin_of_and_includes_pushed_operands)
{
    ValueTable t;
    const auto k = t.make_const(0xffff);
    const auto b = t.make_sym(op::CALLDATALOAD, {});
    const auto v = t.make_sym(op::AND, {k, b});
    EXPECT_EQ(trace_origin(v, t), (std::set<ValueId>{v, k, b}));
}

TEST(emulator, trace_origin_matches_exhaustive_walk)
{
    ValueTable t;
    const auto c = t.make_const(3);
    const auto d = t.make_unknown("input");
    const auto a = t.make_sym(op::ADD, {c, d});
    const auto b = t.make_const(9);
    const std::vector<ValueId> members{a, b};
    const auto v = t.make_phi(members);

    // Walk every operand and member edge.
    std::set<ValueId> seen;
    std::deque<ValueId> queue{v};
    while (!queue.empty())
    {
        const auto id = queue.front();
        queue.pop_front();
        if (!seen.insert(id).second)
            continue;
        for (const auto o : t[id].operands)
            queue.push_back(o);
        for (const auto m : t[id].members)
            queue.push_back(m);
    }
    EXPECT_EQ(seen, (std::set<ValueId>{v, a, b, c, d}));
    EXPECT_EQ(trace_origin(v, t), seen);
}

TEST(emulator, tac_formatting)
{
    ValueTable t;
    Diagnostics d;
    const auto r = run_block(assemble("PUSH1 0 SLOAD"), t, d);
    ASSERT_EQ(r.tac.size(), 2u);
    const auto line = format_tac(r.tac[1], t);
    EXPECT_NE(line.find("SLOAD"), std::string::npos);
    EXPECT_NE(line.find("0x0"), std::string::npos);
}
