#pragma once

#include <reusecfg/bytecode.hpp>
#include <reusecfg/diagnostics.hpp>
#include <reusecfg/u256.hpp>

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace reusecfg
{
using ValueId = uint32_t;

/// Sentinel for values not tied to any CFG node.
inline constexpr uint32_t no_site = 0xffffffffu;

inline constexpr size_t max_stack_depth = 1024;

enum class ValueKind : uint8_t
{
    Const,
    Sym,
    Phi,
    Unknown,
};

/// SSA value. Folded constants keep their defining opcode and operands so
/// taint can follow them back to pushed operands.
struct Value
{
    ValueId id = 0;
    ValueKind kind = ValueKind::Unknown;
    u256 constant = 0;
    uint8_t opcode = 0;
    bool folded = false;
    std::vector<ValueId> operands;
    /// Phi members, sorted, no duplicates. Grows in place at join points so
    /// loop-carried members may be younger than the phi.
    std::vector<ValueId> members;
    std::string reason;
    uint64_t pc = 0;
    uint32_t site = no_site;

    bool is_const() const noexcept { return kind == ValueKind::Const; }
};

/// Append-only arena of SSA values for one recovery session.
///
/// Instruction results are interned by (site, pc, operands): re-emulating a
/// block with the same entry stack hands back the same ids, so downstream
/// joins see no change.
class ValueTable
{
public:
    const Value& operator[](ValueId id) const { return values_.at(id); }
    size_t size() const noexcept { return values_.size(); }

    ValueId make_const(const u256& v, uint64_t pc = 0, uint32_t site = no_site);
    ValueId make_sym(uint8_t opcode, std::vector<ValueId> operands, uint64_t pc = 0,
        uint32_t site = no_site);
    ValueId make_folded(const u256& v, uint8_t opcode, std::vector<ValueId> operands,
        uint64_t pc = 0, uint32_t site = no_site);
    ValueId make_unknown(std::string reason, uint64_t pc = 0, uint32_t site = no_site);
    ValueId make_phi(std::span<const ValueId> members, uint64_t pc = 0, uint32_t site = no_site);

    /// Adds `member` (flattening phis) to `phi`. Returns true if the set grew.
    bool add_phi_member(ValueId phi, ValueId member);

    /// Interning key. `tag` separates instruction results from phi slots and
    /// placeholder unknowns at the same site.
    struct Key
    {
        uint32_t site;
        uint64_t pc;
        uint32_t tag;
        std::vector<ValueId> operands;
        bool operator==(const Key&) const = default;
    };
    struct KeyHash
    {
        size_t operator()(const Key& k) const noexcept;
    };

    std::optional<ValueId> lookup(const Key& k) const;
    void remember(Key k, ValueId id);

    /// Const equality by value, everything else by id.
    bool same(ValueId a, ValueId b) const;

private:
    ValueId push(Value v);

    std::vector<Value> values_;
    std::unordered_map<Key, ValueId, KeyHash> interned_;
};

/// Stack of value ids, index 0 = bottom.
struct StackState
{
    std::vector<ValueId> entries;

    size_t size() const noexcept { return entries.size(); }
    bool empty() const noexcept { return entries.empty(); }
    /// Entry at `depth` counted from the top (0 = top).
    ValueId at_depth(size_t depth) const { return entries.at(entries.size() - 1 - depth); }

    friend bool operator==(const StackState&, const StackState&) = default;
};

/// (S_start, S_end) recorded for one visit of a block.
struct Snapshot
{
    StackState s_start;
    StackState s_end;
    uint32_t visit_ordinal = 0;
};

enum class EdgeKind : uint8_t
{
    Jump,
    FallThrough,
};

std::string_view to_string(EdgeKind k) noexcept;

/// A successor produced by emulation. `target` is empty for an unresolved
/// jump. A jump over a phi of constants yields one entry per constant.
struct Successor
{
    EdgeKind kind = EdgeKind::Jump;
    std::optional<u256> target;
    ValueId operand = 0;  ///< jump target value (Jump kind only)
};

/// Three-address form of one instruction.
struct TacEntry
{
    uint64_t pc = 0;
    uint8_t opcode = 0;
    std::vector<ValueId> args;
    std::optional<ValueId> result;
};

struct EmulationResult
{
    StackState s_end;
    std::vector<Successor> successors;
    std::vector<TacEntry> tac;
};

/// EVM semantics of a foldable opcode, operands in pop order (args[0] = top).
u256 fold(uint8_t opcode, std::span<const u256> args);

/// Symbolically executes one block from `s_start`. `site` scopes interning
/// (the CFG node index; any stable number works for standalone use).
EmulationResult emulate_block(const BasicBlock& block, const StackState& s_start,
    ValueTable& table, uint32_t site, Diagnostics& diags);

struct MergeResult
{
    StackState merged;
    bool changed = false;
};

/// Joins a predecessor's S_end into a block's existing S_start. Positions are
/// aligned from the top; differing positions become the site's phi for that
/// depth. With `widen`, differing positions become Unknown instead.
MergeResult prepare_stack(ValueTable& table, const StackState& pred_end,
    const std::optional<StackState>& existing, uint32_t site, Diagnostics& diags,
    uint64_t block_offset = 0, bool widen = false);

/// `v` plus everything on its def-use chain back to pushed constants and
/// unknowns. Phis expand to their members.
std::set<ValueId> trace_origin(ValueId v, const ValueTable& table);

/// `vK = MNEMONIC(arg, ...)`, constants rendered as hex.
std::string format_tac(const TacEntry& e, const ValueTable& table);

}  // namespace reusecfg
