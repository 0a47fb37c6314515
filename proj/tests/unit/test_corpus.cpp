#include <reusecfg/corpus.hpp>

#include <gtest/gtest.h>
#include <json.hpp>

#include <algorithm>

using namespace reusecfg;

TEST(corpus, assembler_resolves_labels)
{
    Assembler a;
    a.push_label("end").op(op::JUMP).op("INVALID").label("end").op(op::STOP);
    EXPECT_EQ(a.finish(), parse_hex("610005 56 fe 5b 00"));
    EXPECT_EQ(a.offset_of("end"), 5u);
}

TEST(corpus, assembler_rejects_unknown_and_duplicate_labels)
{
    Assembler unknown;
    unknown.push_label("nowhere");
    EXPECT_THROW(unknown.finish(), std::invalid_argument);
    Assembler dup;
    dup.label("x").label("x");
    EXPECT_THROW(dup.finish(), std::invalid_argument);
}

TEST(corpus, push_widths)
{
    EXPECT_EQ(Assembler{}.push(0).finish(), parse_hex("6000"));
    EXPECT_EQ(Assembler{}.push(0x1234).finish(), parse_hex("611234"));
    EXPECT_EQ(Assembler{}.push(1, 4).finish(), parse_hex("6300000001"));
}

TEST(corpus, text_assembly)
{
    const auto code = assemble(R"(
        ; comment
        PUSH1 0x04 jump      ; mnemonics are case-insensitive
        .byte 0xfe
        here: STOP
    )");
    EXPECT_EQ(code, parse_hex("6004 56 fe 5b 00"));
    EXPECT_EQ(assemble("PUSH @a a:"), parse_hex("610003 5b"));
    EXPECT_EQ(assemble("SHA3 KECCAK256"), parse_hex("2020"));
    EXPECT_THROW(assemble("FROB"), std::invalid_argument);
}

TEST(corpus, interpreter_single_jump)
{
    // PUSH1 4; JUMP; INVALID; JUMPDEST; STOP
    const auto traces = interpret(parse_hex("600456fe5b00"));
    ASSERT_EQ(traces.size(), 1u);
    EXPECT_EQ(traces[0].offsets, (std::vector<uint64_t>{0, 4}));
}

TEST(corpus, interpreter_forks_on_input_condition)
{
    const auto code = assemble("PUSH 0 CALLDATALOAD PUSH @t JUMPI STOP t: STOP");
    EXPECT_EQ(interpret(code, 1).size(), 2u);
    // Without decisions left the concrete calldata value (1) is taken.
    const auto runs = interpret_runs(code, {.branch_bound = 0});
    ASSERT_EQ(runs.size(), 1u);
    EXPECT_EQ(runs[0].trace.offsets.back(), code.size() - 2);
}

TEST(corpus, interpreter_does_not_fork_on_constant_condition)
{
    EXPECT_EQ(interpret(assemble("PUSH 0 PUSH @t JUMPI STOP t: STOP")).size(), 1u);
}

TEST(corpus, interpreter_revert_class_endings)
{
    const auto bad_jump = interpret_runs(assemble("PUSH 3 JUMP"));
    ASSERT_EQ(bad_jump.size(), 1u);
    EXPECT_EQ(bad_jump[0].outcome, RunOutcome::Revert);
    EXPECT_EQ(interpret_runs(assemble("ADD"))[0].outcome, RunOutcome::Revert);
    EXPECT_EQ(interpret_runs(bytes{0x0c})[0].outcome, RunOutcome::Revert);
    EXPECT_EQ(interpret_runs(assemble("PUSH 0 PUSH 0 RETURN"))[0].outcome, RunOutcome::Return);
}

TEST(corpus, interpreter_memory_round_trip)
{
    const auto runs = interpret_runs(assemble("PUSH 0xabcd PUSH 0x20 MSTORE PUSH 0x20 MLOAD STOP"));
    ASSERT_EQ(runs.size(), 1u);
    EXPECT_EQ(runs[0].final_stack, (std::vector<u256>{0xabcd}));
}

TEST(corpus, interpreter_names_unsupported_opcode)
{
    try
    {
        interpret(assemble("PUSH 0 SLOAD STOP"));
        FAIL() << "expected an error";
    }
    catch (const InterpreterError& e)
    {
        EXPECT_NE(std::string{e.what()}.find("SLOAD"), std::string::npos);
    }
}

TEST(corpus, basic_fake_join_has_two_traces)
{
    const auto gt = generate({Pattern::BasicFakeJoin, 0, 1});
    EXPECT_EQ(gt.traces.size(), 2u);
    EXPECT_EQ(gt.expected_sensitive_paths, 2);
}

TEST(corpus, nested_fake_loops_run_inner_block_four_times)
{
    const auto gt = generate({Pattern::NestedFakeLoops, 0, 1});
    ASSERT_EQ(gt.traces.size(), 1u);
    // The innermost reused block is the lowest reused offset that is
    // visited most often.
    size_t best = 0;
    for (const auto off : gt.reused_offsets)
        best = std::max<size_t>(best, std::count(gt.traces[0].offsets.begin(), gt.traces[0].offsets.end(), off));
    EXPECT_EQ(best, 4u);
}

TEST(corpus, generator_is_deterministic_and_seed_sensitive)
{
    for (const auto p : all_patterns)
    {
        const auto a = generate({p, 1, 2});
        const auto b = generate({p, 1, 2});
        EXPECT_EQ(a.bytecode, b.bytecode);
        EXPECT_EQ(a.traces, b.traces);
        EXPECT_EQ(manifest_json({p, 1, 2}, a), manifest_json({p, 1, 2}, b));
    }
    bool any_differs = false;
    for (uint64_t seed = 1; seed < 5; ++seed)
        any_differs |= generate({Pattern::BasicFakeJoin, seed, 2}).bytecode != generate({Pattern::BasicFakeJoin, 0, 2}).bytecode;
    EXPECT_TRUE(any_differs);
}

TEST(corpus, generated_fixtures_are_well_formed)
{
    for (const auto p : all_patterns)
    {
        for (uint32_t depth = 1; depth <= 4; ++depth)
        {
            const auto gt = generate({p, 7, depth});
            EXPECT_LE(gt.bytecode.size(), max_code_size);
            EXPECT_FALSE(gt.reused_offsets.empty());
            EXPECT_FALSE(gt.traces.empty());
            EXPECT_LE(gt.expected_sensitive_paths, gt.expected_insensitive_paths);
            // A real loop with a constant bound runs once but exits at every
            // unrolled step of the DAG.
            if (p != Pattern::FakeLoopWithRealLoop)
                EXPECT_EQ(bigint{gt.traces.size()}, gt.expected_sensitive_paths) << to_string(p) << " " << depth;
            const auto blocks = identify_blocks(disassemble(gt.bytecode));
            for (const auto off : gt.reused_offsets)
            {
                const auto it = std::find_if(blocks.begin(), blocks.end(),
                    [&](const BasicBlock& b) { return b.start_offset == off; });
                EXPECT_NE(it, blocks.end());
            }
        }
    }
}

TEST(corpus, generator_rejects_bad_depth)
{
    EXPECT_THROW(generate({Pattern::BasicFakeJoin, 0, 0}), std::invalid_argument);
    EXPECT_THROW(generate({Pattern::NestedFakeLoops, 0, 5000}), std::invalid_argument);
}

TEST(corpus, pattern_names_round_trip)
{
    for (const auto p : all_patterns)
        EXPECT_EQ(parse_pattern(to_string(p)), p);
    EXPECT_FALSE(parse_pattern("NoSuchPattern").has_value());
}

TEST(corpus, manifest_fields)
{
    const PatternSpec spec{Pattern::FakeJoinSequence, 3, 1};
    const auto gt = generate(spec);
    const auto j = nlohmann::json::parse(manifest_json(spec, gt));
    EXPECT_EQ(j["pattern"], "FakeJoinSequence");
    EXPECT_EQ(j["seed"], 3);
    EXPECT_EQ(j["expected_sensitive_paths"], "3");
    EXPECT_EQ(j["expected_insensitive_paths"], "9");
    EXPECT_EQ(j["bytecode"], to_hex_string(gt.bytecode));
    EXPECT_EQ(j["traces"].size(), gt.traces.size());
}

TEST(corpus, large_composition_fits_target)
{
    const auto code = large_composition(1);
    EXPECT_LE(code.size(), 24000u);
    EXPECT_GT(code.size(), 20000u);
}

TEST(corpus, word_round_trip)
{
    const u256 v = (u256{0x0123456789abcdefULL} << 192) | 42;
    EXPECT_EQ(Word::from(v).to_u256(), v);
    EXPECT_EQ(Word::from(v).limb[0], 42u);
}
