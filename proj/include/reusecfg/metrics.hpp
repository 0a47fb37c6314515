#pragma once

#include <reusecfg/cfg.hpp>

#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace reusecfg
{
/// Block start offsets visited by one execution, beginning at 0.
struct Trace
{
    std::vector<uint64_t> offsets;

    friend auto operator<=>(const Trace&, const Trace&) = default;
};

struct PathReport
{
    bigint path_count = 0;
    uint32_t back_edges_removed = 0;
};

/// Plain successor lists, used by the graph-level entry points.
using Adjacency = std::vector<std::vector<size_t>>;

/// Successor lists of the CFG, deduplicated per node.
Adjacency adjacency(const Cfg& cfg);

/// Nodes reachable from the entry in reverse DFS postorder, plus the DFS
/// back edges. Dropping the back edges leaves a DAG ordered by topo_order.
struct DfsForest
{
    std::vector<size_t> topo_order;
    std::set<std::pair<size_t, size_t>> back_edges;
};
DfsForest acyclic_view(const Adjacency& adj, size_t entry);
DfsForest acyclic_view(const Cfg& cfg);

/// Entry-to-sink path count with DFS back edges removed, so every loop body
/// is traversed once. Sinks are nodes left without out-edges.
PathReport count_paths(const Adjacency& adj, size_t entry);
PathReport count_paths(const Cfg& cfg);

struct PolymorphicJump
{
    BlockId block;
    std::set<BlockId> targets;

    friend bool operator==(const PolymorphicJump&, const PolymorphicJump&) = default;
};

/// Nodes whose jump-kind out-edges reach more than one node.
std::vector<PolymorphicJump> polymorphic_jump_targets(const Cfg& cfg);

struct UncoveredTrace
{
    Trace trace;
    /// Index of the first offset that no walk could reach.
    size_t failed_at = 0;
};

struct CoverageReport
{
    size_t covered = 0;
    size_t total = 0;
    std::vector<UncoveredTrace> uncovered;

    double ratio() const noexcept { return total == 0 ? 0.0 : double(covered) / double(total); }
};

/// A trace is covered if some walk from the entry projects onto its offsets.
/// Traces need not end at a terminator.
CoverageReport trace_coverage(const Cfg& cfg, const std::vector<Trace>& traces);

/// One trace per line, comma-separated hex offsets (0x prefix optional).
/// Blank lines and lines starting with '#' are skipped. Throws
/// std::invalid_argument on malformed input.
std::vector<Trace> parse_traces(std::string_view text);
std::string format_trace(const Trace& t);

}  // namespace reusecfg
