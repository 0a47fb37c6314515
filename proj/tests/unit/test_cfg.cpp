#include <reusecfg/cfg.hpp>
#include <reusecfg/corpus.hpp>
#include <reusecfg/metrics.hpp>

#include <gtest/gtest.h>
#include <json.hpp>

#include <random>

using namespace reusecfg;

namespace
{
std::vector<size_t> clones(const Cfg& cfg, uint64_t offset)
{
    const auto s = cfg.clones_at(offset);
    return {s.begin(), s.end()};
}

size_t in_degree(const Cfg& cfg, size_t idx)
{
    return cfg.node(idx).preds.size();
}

/// Entry pushes `ret` then jumps into a shared block that returns through it.
bytes and_masked_return()
{
    return assemble(R"(
        PUSH @ret PUSH @x JUMP
        x: PUSH2 0xffff AND JUMP
        ret: STOP
    )");
}

/// Three JUMPI arms each jumping to one STOP block.
bytes three_into_stop()
{
    return assemble(R"(
        PUSH 0 CALLDATALOAD PUSH @a JUMPI
        PUSH 1 CALLDATALOAD PUSH @b JUMPI
        PUSH @end JUMP
        a: PUSH @end JUMP
        b: PUSH @end JUMP
        end: STOP
    )");
}
}  // namespace

TEST(cfg, guarded_calls_example_sensitive_has_four_paths)
{
    const auto gt = guarded_calls_example();
    const auto cfg = build_cfg(gt.bytecode, Mode::ReuseSensitive);
    const auto r = count_paths(cfg);
    EXPECT_EQ(r.path_count, 4);
    EXPECT_EQ(r.back_edges_removed, 0u);
    EXPECT_EQ(cloned_offsets(cfg), gt.reused_offsets);
}

TEST(cfg, guarded_calls_example_insensitive_has_loop)
{
    const auto cfg = build_cfg(guarded_calls_example().bytecode, Mode::ReuseInsensitive);
    EXPECT_GT(count_paths(cfg).back_edges_removed, 0u);
    EXPECT_TRUE(cloned_offsets(cfg).empty());
}

TEST(cfg, basic_fake_loop_sensitive_is_linear)
{
    const auto gt = generate({Pattern::BasicFakeLoop, 0, 1});
    const auto cfg = build_cfg(gt.bytecode);
    EXPECT_EQ(count_paths(cfg).path_count, gt.expected_sensitive_paths);
    EXPECT_EQ(count_paths(cfg).back_edges_removed, 0u);
    EXPECT_EQ(cloned_offsets(cfg), gt.reused_offsets);
}

TEST(cfg, regular_jump_adds_no_taint)
{
    const auto cfg = build_cfg(assemble("PUSH @a JUMP a: PUSH @b JUMP b: STOP"));
    for (const auto& n : cfg.nodes())
        EXPECT_TRUE(n.context.empty()) << to_string(n.id);
}

TEST(cfg, shared_callee_block_carries_return_offset_as_context)
{
    std::map<std::string, uint64_t> at;
    const auto gt = shared_callee_example(&at);
    const auto cfg = build_cfg(gt.bytecode);
    const auto xs = clones(cfg, at["X"]);
    ASSERT_EQ(xs.size(), 2u);
    EXPECT_EQ(cfg.node(xs[0]).context.entries, (std::map<uint32_t, u256>{{0, at["C"]}}));
    EXPECT_EQ(cfg.node(xs[1]).context.entries, (std::map<uint32_t, u256>{{0, at["D"]}}));
}

TEST(cfg, shared_callee_graph_shape)
{
    std::map<std::string, uint64_t> at;
    const auto cfg = build_cfg(shared_callee_example(&at).bytecode);
    EXPECT_EQ(cfg.nodes().size(), 7u);
    const auto x0 = *cfg.find({at["X"], 0});
    const auto x1 = *cfg.find({at["X"], 1});
    const auto b = *cfg.find({at["B"], 0});
    const auto e = *cfg.find({at["E"], 0});
    const auto c = *cfg.find({at["C"], 0});
    const auto d = *cfg.find({at["D"], 0});
    EXPECT_TRUE(cfg.has_edge(0, x0, EdgeKind::Jump));
    EXPECT_TRUE(cfg.has_edge(x0, c, EdgeKind::Jump));
    EXPECT_TRUE(cfg.has_edge(b, x1, EdgeKind::Jump));
    EXPECT_TRUE(cfg.has_edge(e, x1, EdgeKind::Jump));
    EXPECT_TRUE(cfg.has_edge(x1, d, EdgeKind::Jump));
    EXPECT_FALSE(cfg.has_edge(x0, d, EdgeKind::Jump));
    EXPECT_FALSE(cfg.has_edge(x1, c, EdgeKind::Jump));
    EXPECT_TRUE(polymorphic_jump_targets(cfg).empty());
}

TEST(cfg, and_masked_operand_taints_pre_pushed_source)
{
    const auto code = and_masked_return();
    const auto cfg = build_cfg(code);
    // x sits after PUSH2 PUSH2 JUMP = 7 bytes; ret after x's 5 bytes.
    const auto xs = clones(cfg, 7);
    ASSERT_EQ(xs.size(), 1u);
    EXPECT_EQ(cfg.node(xs[0]).context.entries, (std::map<uint32_t, u256>{{0, 13}}));
}

TEST(cfg, transfer_stops_after_first_differing_value)
{
    CfgBuilder b{assemble("x: STOP"), Mode::ReuseSensitive, {}};
    auto& t = b.values();
    const auto k = [&](uint64_t v) { return t.make_const(v); };
    // Depth 0 is the top.
    const auto first = b.create_node(0, StackState{{k(30), k(20), k(10)}});
    const auto second = b.create_node(0, StackState{{k(31), k(21), k(10)}});
    b.context(first).entries = {{0, 10}, {1, 20}, {2, 30}};
    b.transfer_taint(0);
    EXPECT_EQ(b.context(second).entries, (std::map<uint32_t, u256>{{0, 10}, {1, 21}}));
}

TEST(cfg, transfer_single_clone_is_noop)
{
    CfgBuilder b{assemble("x: STOP"), Mode::ReuseSensitive, {}};
    const auto n = b.create_node(0, StackState{{b.values().make_const(1)}});
    b.context(n).entries = {{0, 1}};
    b.transfer_taint(0);
    EXPECT_EQ(b.context(n).entries.size(), 1u);
}

TEST(cfg, transfer_out_of_range_is_diagnosed)
{
    CfgBuilder b{assemble("x: STOP"), Mode::ReuseSensitive, {}};
    auto& t = b.values();
    const auto first = b.create_node(0, StackState{{t.make_const(2), t.make_const(1)}});
    const auto second = b.create_node(0, StackState{{t.make_const(1)}});
    b.context(first).entries = {{0, 1}, {1, 2}};
    b.transfer_taint(0);
    EXPECT_EQ(b.context(second).entries, (std::map<uint32_t, u256>{{0, 1}}));
    EXPECT_TRUE(b.cfg().diagnostics().contains("shared taint index out of range"));
}

TEST(cfg, reuse_handler_matches_or_clones)
{
    CfgBuilder b{assemble("a: JUMP x: JUMP"), Mode::ReuseSensitive, {}};
    auto& t = b.values();
    const auto pred_c = b.create_node(0, {});
    const auto pred_d = b.create_node(0, {});
    b.node(pred_c).s_end = StackState{{t.make_const(0x20)}};
    b.node(pred_d).s_end = StackState{{t.make_const(0x30)}};

    // Empty context matches vacuously.
    const auto x = b.create_node(2, StackState{{t.make_const(0x20)}});
    EXPECT_EQ(b.reuse_handler(pred_d, 2), x);

    b.context(x).entries = {{0, 0x20}};
    EXPECT_EQ(b.reuse_handler(pred_c, 2), x);
    const auto x1 = b.reuse_handler(pred_d, 2);
    EXPECT_NE(x1, x);
    EXPECT_EQ(b.cfg().node(x1).id.clone_index, 1u);
    // The new clone inherits the tainted position with its own value.
    EXPECT_EQ(b.context(x1).entries, (std::map<uint32_t, u256>{{0, 0x30}}));
    // A second caller with the same return offset reuses the clone.
    EXPECT_EQ(b.reuse_handler(pred_d, 2), x1);
}

TEST(cfg, handle_end_block_first_predecessor_gets_original)
{
    CfgBuilder b{assemble("a: STOP b: STOP"), Mode::ReuseSensitive, {}};
    const auto pred = b.create_node(0, {});
    const auto end = b.handle_end_block(pred, 2);
    b.add_edge(pred, end, EdgeKind::Jump);
    EXPECT_EQ(b.cfg().node(end).id.clone_index, 0u);
    EXPECT_EQ(b.handle_end_block(pred, 2), end);
    const auto other = b.create_node(0, {});
    const auto second = b.handle_end_block(other, 2);
    EXPECT_EQ(b.cfg().node(second).id.clone_index, 1u);
    EXPECT_TRUE(b.cfg().node(second).end_clone);
}

TEST(cfg, three_predecessors_get_three_end_clones)
{
    const auto code = three_into_stop();
    const auto cfg = build_cfg(code);
    const uint64_t end = code.size() - 2;
    const auto ends = clones(cfg, end);
    ASSERT_EQ(ends.size(), 3u);
    for (const auto idx : ends)
        EXPECT_EQ(in_degree(cfg, idx), 1u);
    EXPECT_TRUE(cloned_offsets(cfg).empty());
    EXPECT_EQ(count_paths(cfg).path_count, 3);
}

TEST(cfg, insensitive_mode_keeps_one_node_per_offset)
{
    const auto cfg = build_cfg(three_into_stop(), Mode::ReuseInsensitive);
    std::set<uint64_t> seen;
    for (const auto& n : cfg.nodes())
        EXPECT_TRUE(seen.insert(n.id.offset).second);
}

TEST(cfg, empty_bytecode_is_an_error)
{
    EXPECT_THROW(build_cfg(bytes{}), AnalysisError);
}

TEST(cfg, invalid_jump_target_is_dropped_with_diagnostic)
{
    const auto cfg = build_cfg(assemble("PUSH 0x40 JUMP"));
    EXPECT_EQ(cfg.nodes().size(), 1u);
    EXPECT_TRUE(cfg.diagnostics().contains("invalid jump target"));
}

TEST(cfg, unresolved_jump_is_diagnosed)
{
    const auto cfg = build_cfg(assemble("PUSH 0 MLOAD JUMP"));
    EXPECT_EQ(cfg.edge_count(), 0u);
    EXPECT_FALSE(cfg.diagnostics().empty());
}

TEST(cfg, clone_budget_aborts)
{
    const auto gt = generate({Pattern::BasicFakeJoin, 0, 4});
    Config c;
    c.clone_budget_per_offset = 1;
    try
    {
        build_cfg(gt.bytecode, Mode::ReuseSensitive, c);
        FAIL() << "expected clone explosion";
    }
    catch (const AnalysisError& e)
    {
        EXPECT_NE(std::string{e.what()}.find("clone explosion at offset"), std::string::npos);
    }
}

TEST(cfg, unreached_blocks_are_data)
{
    const auto cfg = build_cfg(parse_hex("00a264697066735822"));
    ASSERT_GE(cfg.blocks().size(), 2u);
    EXPECT_FALSE(cfg.blocks()[0].is_data);
    for (size_t i = 1; i < cfg.blocks().size(); ++i)
        EXPECT_TRUE(cfg.blocks()[i].is_data);
}

TEST(cfg, json_of_single_stop)
{
    const auto j = nlohmann::json::parse(to_json(build_cfg(bytes{0x00})));
    EXPECT_EQ(j["entry"], "0x0_0");
    ASSERT_EQ(j["blocks"].size(), 1u);
    EXPECT_EQ(j["blocks"][0]["id"], "0x0_0");
    EXPECT_EQ(j["blocks"][0]["terminator"], "stop");
    EXPECT_TRUE(j["edges"].empty());
}

TEST(cfg, json_of_shared_callee_lists_both_clones)
{
    std::map<std::string, uint64_t> at;
    const auto cfg = build_cfg(shared_callee_example(&at).bytecode);
    const auto j = nlohmann::json::parse(to_json(cfg));
    std::set<std::string> ids;
    for (const auto& b : j["blocks"])
        ids.insert(b["id"].get<std::string>());
    EXPECT_EQ(ids.size(), 7u);
    EXPECT_TRUE(ids.contains(to_string(BlockId{at["X"], 0})));
    EXPECT_TRUE(ids.contains(to_string(BlockId{at["X"], 1})));
}

TEST(cfg, exports_are_deterministic)
{
    const auto code = generate({Pattern::NestedFakeLoops, 3, 2}).bytecode;
    EXPECT_EQ(to_json(build_cfg(code)), to_json(build_cfg(code)));
    EXPECT_EQ(to_json(build_cfg(code), true), to_json(build_cfg(code), true));
    EXPECT_EQ(to_dot(build_cfg(code)), to_dot(build_cfg(code)));
}

TEST(cfg, dot_marks_fallthrough_dashed)
{
    const auto dot = to_dot(build_cfg(three_into_stop()));
    EXPECT_EQ(dot.rfind("digraph", 0), 0u);
    EXPECT_NE(dot.find("style=dashed"), std::string::npos);
}

TEST(cfg, tac_is_exported_on_request)
{
    const auto j = nlohmann::json::parse(to_json(build_cfg(assemble("PUSH 1 PUSH 2 ADD STOP")), true));
    EXPECT_TRUE(j["blocks"][0].contains("tac"));
}

TEST(cfg, sensitive_cfg_is_conservative_on_corpus)
{
    // Every concrete trace is a walk in both graphs.
    for (const auto p : all_patterns)
    {
        for (uint32_t depth = 1; depth <= 3; ++depth)
        {
            const auto gt = generate({p, 11, depth});
            for (const auto mode : {Mode::ReuseSensitive, Mode::ReuseInsensitive})
            {
                const auto rep = trace_coverage(build_cfg(gt.bytecode, mode), gt.traces);
                EXPECT_EQ(rep.covered, rep.total) << to_string(p) << " depth " << depth;
            }
        }
    }
}

TEST(cfg, random_bytes_never_crash)
{
    std::mt19937_64 rng{17};
    Config c;
    c.total_block_budget = 20000;
    for (int i = 0; i < 300; ++i)
    {
        bytes code(1 + rng() % 512);
        for (auto& x : code)
        {
            // Bias towards control flow so jumps actually resolve.
            const auto r = rng() % 8;
            x = r == 0 ? op::JUMPDEST : r == 1 ? op::JUMP : r == 2 ? op::JUMPI : static_cast<uint8_t>(rng());
        }
        try
        {
            const auto cfg = build_cfg(code, Mode::ReuseSensitive, c);
            EXPECT_GE(cfg.nodes().size(), 1u);
        }
        catch (const AnalysisError&)
        {
        }
    }
}
