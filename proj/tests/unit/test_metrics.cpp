#include <reusecfg/corpus.hpp>
#include <reusecfg/metrics.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace reusecfg;

namespace
{
/// Simple paths from `entry` to nodes without successors, by enumeration.
/// Walks that would revisit a node on the current path end there, which is
/// what back-edge removal yields on these small graphs only when the graph
/// is acyclic; callers restrict themselves to DAGs.
uint64_t enumerate_paths(const Adjacency& adj, size_t node)
{
    if (adj[node].empty())
        return 1;
    uint64_t total = 0;
    for (const auto s : adj[node])
        total += enumerate_paths(adj, s);
    return total;
}

Adjacency random_dag(std::mt19937_64& rng, size_t n)
{
    Adjacency adj(n);
    for (size_t i = 0; i < n; ++i)
    {
        for (size_t j = i + 1; j < n; ++j)
        {
            if (rng() % 3 == 0)
                adj[i].push_back(j);
        }
    }
    return adj;
}
}  // namespace

TEST(metrics, diamond_has_two_paths)
{
    const Adjacency adj{{1, 2}, {3}, {3}, {}};
    const auto r = count_paths(adj, 0);
    EXPECT_EQ(r.path_count, 2);
    EXPECT_EQ(r.back_edges_removed, 0u);
}

TEST(metrics, cycle_with_exit_counts_once)
{
    // A -> B -> A, B -> C
    const Adjacency adj{{1}, {0, 2}, {}};
    const auto r = count_paths(adj, 0);
    EXPECT_EQ(r.path_count, 1);
    EXPECT_EQ(r.back_edges_removed, 1u);
}

TEST(metrics, missing_entry_is_an_error)
{
    EXPECT_THROW(count_paths(Adjacency{}, 0), AnalysisError);
}

TEST(metrics, path_count_matches_enumeration_on_random_dags)
{
    std::mt19937_64 rng{3};
    for (int i = 0; i < 500; ++i)
    {
        const auto adj = random_dag(rng, 1 + rng() % 12);
        // Only nodes reachable from 0 take part in both counts.
        EXPECT_EQ(count_paths(adj, 0).path_count, enumerate_paths(adj, 0));
        EXPECT_EQ(count_paths(adj, 0).back_edges_removed, 0u);
    }
}

TEST(metrics, acyclic_view_orders_topologically)
{
    std::mt19937_64 rng{4};
    for (int i = 0; i < 200; ++i)
    {
        const size_t n = 1 + rng() % 12;
        Adjacency adj(n);
        for (size_t a = 0; a < n; ++a)
        {
            for (size_t b = 0; b < n; ++b)
            {
                if (rng() % 4 == 0)
                    adj[a].push_back(b);
            }
        }
        const auto f = acyclic_view(adj, 0);
        std::vector<size_t> pos(n, n);
        for (size_t k = 0; k < f.topo_order.size(); ++k)
            pos[f.topo_order[k]] = k;
        for (const auto a : f.topo_order)
        {
            for (const auto b : adj[a])
            {
                if (!f.back_edges.contains({a, b}))
                    EXPECT_LT(pos[a], pos[b]);
            }
        }
    }
}

TEST(metrics, fake_join_sequence_three_versus_nine)
{
    const auto gt = generate({Pattern::FakeJoinSequence, 0, 1});
    EXPECT_EQ(gt.expected_sensitive_paths, 3);
    EXPECT_EQ(gt.expected_insensitive_paths, 9);
    EXPECT_EQ(count_paths(build_cfg(gt.bytecode, Mode::ReuseSensitive)).path_count, 3);
    EXPECT_EQ(count_paths(build_cfg(gt.bytecode, Mode::ReuseInsensitive)).path_count, 9);
}

TEST(metrics, basic_fake_loop_insensitive_is_polymorphic)
{
    const auto gt = generate({Pattern::BasicFakeLoop, 0, 1});
    const auto poly = polymorphic_jump_targets(build_cfg(gt.bytecode, Mode::ReuseInsensitive));
    ASSERT_EQ(poly.size(), 1u);
    EXPECT_TRUE(gt.reused_offsets.contains(poly[0].block.offset));
    EXPECT_EQ(poly[0].targets.size(), 2u);
    EXPECT_TRUE(polymorphic_jump_targets(build_cfg(gt.bytecode)).empty());
}

TEST(metrics, straight_line_has_no_polymorphic_jumps)
{
    EXPECT_TRUE(polymorphic_jump_targets(build_cfg(assemble("PUSH 1 PUSH 2 ADD STOP"))).empty());
}

TEST(metrics, linear_trace_is_covered)
{
    const auto cfg = build_cfg(assemble("PUSH @a JUMP a: STOP"));
    const auto r = trace_coverage(cfg, {Trace{{0, 4}}});
    EXPECT_EQ(r.covered, 1u);
    EXPECT_EQ(r.total, 1u);
    EXPECT_DOUBLE_EQ(r.ratio(), 1.0);
}

TEST(metrics, empty_trace_list)
{
    const auto r = trace_coverage(build_cfg(bytes{0x00}), {});
    EXPECT_EQ(r.covered, 0u);
    EXPECT_EQ(r.total, 0u);
    EXPECT_TRUE(r.uncovered.empty());
}

TEST(metrics, memory_borne_jump_leaves_trace_uncovered)
{
    // The return offset goes through memory, so the jump stays unresolved.
    const auto code = assemble(R"(
        PUSH @a PUSH 0 MSTORE
        PUSH 0 MLOAD JUMP
        a: STOP
    )");
    const auto traces = interpret(code);
    ASSERT_EQ(traces.size(), 1u);
    const auto cfg = build_cfg(code);
    const auto r = trace_coverage(cfg, traces);
    EXPECT_EQ(r.covered, 0u);
    ASSERT_EQ(r.uncovered.size(), 1u);
    EXPECT_EQ(r.uncovered[0].failed_at, 1u);
    EXPECT_FALSE(cfg.diagnostics().empty());
}

TEST(metrics, coverage_is_monotone_in_the_trace_set)
{
    const auto gt = generate({Pattern::FakeJoinWithReal, 2, 2});
    const auto cfg = build_cfg(gt.bytecode);
    auto traces = gt.traces;
    traces.push_back(Trace{{0, 0xdead}});
    size_t last = 0;
    std::vector<Trace> prefix;
    for (const auto& t : traces)
    {
        prefix.push_back(t);
        const auto r = trace_coverage(cfg, prefix);
        EXPECT_GE(r.covered, last);
        EXPECT_EQ(r.covered + r.uncovered.size(), r.total);
        last = r.covered;
    }
    EXPECT_EQ(last, gt.traces.size());
}

TEST(metrics, parse_and_format_traces)
{
    const auto t = parse_traces("# comment\n0x0,0x1a\n\n0,4, 8\n");
    ASSERT_EQ(t.size(), 2u);
    EXPECT_EQ(t[0].offsets, (std::vector<uint64_t>{0, 0x1a}));
    EXPECT_EQ(t[1].offsets, (std::vector<uint64_t>{0, 4, 8}));
    EXPECT_EQ(format_trace(t[0]), "0x0,0x1a");
    EXPECT_EQ(parse_traces(format_trace(t[1]) + "\n")[0], t[1]);
    EXPECT_THROW(parse_traces("0x0,zz\n"), std::invalid_argument);
}
