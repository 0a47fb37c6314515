#pragma once

#include <reusecfg/bytecode.hpp>
#include <reusecfg/config.hpp>
#include <reusecfg/diagnostics.hpp>
#include <reusecfg/emulator.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace reusecfg
{
/// Tainted pre-pushed jump operands of one block clone, keyed by stack depth
/// counted from the top of S_start (0 = top).
struct ReuseContext
{
    std::map<uint32_t, u256> entries;

    bool empty() const noexcept { return entries.empty(); }
    friend bool operator==(const ReuseContext&, const ReuseContext&) = default;
};

struct Edge
{
    BlockId from;
    BlockId to;
    EdgeKind kind = EdgeKind::Jump;

    friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// One CFG node: a block clone with its recovery state.
struct CfgNode
{
    BlockId id;
    size_t block_index = 0;  ///< into Cfg::blocks_by_offset order
    StackState s_start;
    StackState s_end;
    bool has_start = false;
    bool visited = false;
    /// Clone created only to give an end block a single predecessor.
    bool end_clone = false;
    uint32_t emulations = 0;
    ReuseContext context;
    std::vector<Snapshot> snapshots;
    std::vector<TacEntry> tac;
    std::vector<std::pair<size_t, EdgeKind>> succs;
    std::vector<std::pair<size_t, EdgeKind>> preds;
};

/// Recovered control-flow graph. Immutable once build_cfg returns.
class Cfg
{
public:
    Mode mode() const noexcept { return mode_; }
    const bytes& code() const noexcept { return code_; }

    /// Blocks from pre-processing, one per start offset, clone index 0.
    /// `is_data` is set on blocks never entered.
    const std::vector<BasicBlock>& blocks() const noexcept { return blocks_; }

    const std::vector<CfgNode>& nodes() const noexcept { return nodes_; }
    const CfgNode& node(size_t idx) const { return nodes_.at(idx); }
    std::optional<size_t> find(const BlockId& id) const;
    /// Node indices of all clones at `offset`, in clone-index order.
    std::span<const size_t> clones_at(uint64_t offset) const;
    const BasicBlock& block_of(size_t node_idx) const { return blocks_[nodes_[node_idx].block_index]; }
    const BasicBlock* block_at(uint64_t offset) const;

    size_t entry() const noexcept { return 0; }
    BlockId entry_id() const { return nodes_.at(0).id; }

    /// All edges sorted by (from, to, kind).
    std::vector<Edge> edges() const;
    size_t edge_count() const noexcept { return edge_set_.size(); }
    bool has_edge(size_t from, size_t to, EdgeKind kind) const
    {
        return edge_set_.contains({from, to, kind});
    }

    const ValueTable& values() const noexcept { return values_; }
    const Diagnostics& diagnostics() const noexcept { return diags_; }

private:
    friend class CfgBuilder;

    struct EdgeKey
    {
        size_t from;
        size_t to;
        EdgeKind kind;
        friend auto operator<=>(const EdgeKey&, const EdgeKey&) = default;
    };

    Mode mode_ = Mode::ReuseSensitive;
    bytes code_;
    std::vector<BasicBlock> blocks_;
    std::unordered_map<uint64_t, size_t> block_by_offset_;
    std::vector<CfgNode> nodes_;
    std::unordered_map<BlockId, size_t, BlockIdHash> node_by_id_;
    std::unordered_map<uint64_t, std::vector<size_t>> clones_;
    std::set<EdgeKey> edge_set_;
    ValueTable values_;
    Diagnostics diags_;
};

/// One CFG recovery session: the worklist traversal plus the reuse-context
/// machinery. Single-threaded; owns the Cfg until `finish`.
///
/// The individual steps are public so they can be exercised in isolation.
class CfgBuilder
{
public:
    CfgBuilder(std::span<const uint8_t> code, Mode mode, const Config& config);

    /// Runs the worklist to completion from offset 0 with an empty stack.
    /// Throws AnalysisError on clone explosion.
    void run();

    /// Marks unreached blocks as data and hands over the graph.
    Cfg finish() &&;

    Cfg& cfg() noexcept { return cfg_; }
    const Cfg& cfg() const noexcept { return cfg_; }

    /// Creates the next clone at `offset` with the given entry stack.
    size_t create_node(uint64_t offset, const StackState& s_start);
    ReuseContext& context(size_t node) { return cfg_.nodes_.at(node).context; }
    CfgNode& node(size_t idx) { return cfg_.nodes_.at(idx); }
    ValueTable& values() noexcept { return cfg_.values_; }

    /// Taint generation: taints the S_start positions of `node` holding
    /// the origins of `jump_operand`, walks predecessors whose S_start
    /// carries the same origins, then shares taint across clones.
    void update_reuse_context(size_t node, ValueId jump_operand);

    /// Context sharing among the clones at `offset`, pairwise to fixpoint.
    void transfer_taint(uint64_t offset);

    /// Picks the first clone at `target_offset` whose tainted positions match
    /// `from`'s S_end, or creates a fresh clone.
    size_t reuse_handler(size_t from, uint64_t target_offset);

    /// Successor selection for blocks that end the transaction: each clone
    /// keeps a single predecessor.
    size_t handle_end_block(size_t from, uint64_t end_offset);

    /// True if every tainted position of `candidate` holds an equal constant
    /// in `s_end`.
    bool context_matches(const StackState& s_end, size_t candidate) const;

    void add_edge(size_t from, size_t to, EdgeKind kind);

private:
    struct WorkItem
    {
        std::optional<size_t> pred;
        size_t current;
    };

    void visit(const WorkItem& item);
    void process(size_t node);
    size_t node_for_offset(uint64_t offset);
    bool taint_positions(size_t node, const std::set<ValueId>& origins);
    bool transfer_pair(size_t from, size_t to);
    std::optional<uint64_t> valid_jump_target(const u256& target, uint64_t pc);

    Cfg cfg_;
    Config config_;
    std::vector<WorkItem> worklist_;
    std::set<std::pair<size_t, uint32_t>> reported_out_of_range_;
};

/// Reuse-sensitive (or baseline) CFG recovery from runtime bytecode.
Cfg build_cfg(std::span<const uint8_t> code, Mode mode = Mode::ReuseSensitive,
    const Config& config = {});

/// Offsets with at least one clone beyond the original, end-block clones
/// excluded.
std::set<uint64_t> cloned_offsets(const Cfg& cfg);

/// Graphviz rendering: one node per BlockId, jump edges solid, fallthrough
/// edges dashed. With `with_tac` the labels show three-address code.
std::string to_dot(const Cfg& cfg, bool with_tac = false);

/// Deterministic JSON (see README for the schema).
std::string to_json(const Cfg& cfg, bool with_tac = false);

}  // namespace reusecfg
