#include <reusecfg/cfg.hpp>

#include <algorithm>
#include <deque>

namespace reusecfg
{
std::optional<size_t> Cfg::find(const BlockId& id) const
{
    const auto it = node_by_id_.find(id);
    if (it == node_by_id_.end())
        return std::nullopt;
    return it->second;
}

std::span<const size_t> Cfg::clones_at(uint64_t offset) const
{
    const auto it = clones_.find(offset);
    if (it == clones_.end())
        return {};
    return it->second;
}

const BasicBlock* Cfg::block_at(uint64_t offset) const
{
    const auto it = block_by_offset_.find(offset);
    return it == block_by_offset_.end() ? nullptr : &blocks_[it->second];
}

std::vector<Edge> Cfg::edges() const
{
    std::vector<Edge> out;
    out.reserve(edge_set_.size());
    for (const auto& e : edge_set_)
        out.push_back({nodes_[e.from].id, nodes_[e.to].id, e.kind});
    std::sort(out.begin(), out.end());
    return out;
}

CfgBuilder::CfgBuilder(std::span<const uint8_t> code, Mode mode, const Config& config)
  : config_{config}
{
    config_.validate();
    if (code.empty())
        throw AnalysisError("empty bytecode");
    cfg_.mode_ = mode;
    cfg_.code_.assign(code.begin(), code.end());
    const auto instructions = disassemble(code, &cfg_.diags_);
    cfg_.blocks_ = identify_blocks(instructions);
    for (size_t i = 0; i < cfg_.blocks_.size(); ++i)
        cfg_.block_by_offset_.emplace(cfg_.blocks_[i].start_offset, i);
}

size_t CfgBuilder::create_node(uint64_t offset, const StackState& s_start)
{
    auto& clones = cfg_.clones_[offset];
    if (clones.size() >= config_.clone_budget_per_offset)
        throw AnalysisError("clone explosion at offset " + std::to_string(offset));
    if (cfg_.nodes_.size() >= config_.total_block_budget)
        throw AnalysisError("block budget exhausted at offset " + std::to_string(offset));

    const auto block_it = cfg_.block_by_offset_.find(offset);
    if (block_it == cfg_.block_by_offset_.end())
        throw std::logic_error("no block at offset " + std::to_string(offset));

    CfgNode n;
    n.id = BlockId{offset, static_cast<uint32_t>(clones.size())};
    n.block_index = block_it->second;
    n.s_start = s_start;
    const auto idx = cfg_.nodes_.size();
    cfg_.nodes_.push_back(std::move(n));
    cfg_.node_by_id_.emplace(cfg_.nodes_.back().id, idx);
    clones.push_back(idx);
    return idx;
}

void CfgBuilder::add_edge(size_t from, size_t to, EdgeKind kind)
{
    if (!cfg_.edge_set_.insert({from, to, kind}).second)
        return;
    cfg_.nodes_[from].succs.emplace_back(to, kind);
    cfg_.nodes_[to].preds.emplace_back(from, kind);
}

size_t CfgBuilder::node_for_offset(uint64_t offset)
{
    const auto clones = cfg_.clones_at(offset);
    if (!clones.empty())
        return clones.front();
    return create_node(offset, {});
}

void CfgBuilder::run()
{
    const auto entry = create_node(0, {});
    worklist_.push_back({std::nullopt, entry});
    while (!worklist_.empty())
    {
        const auto item = worklist_.back();
        worklist_.pop_back();
        visit(item);
    }
}

void CfgBuilder::visit(const WorkItem& item)
{
    const auto c = item.current;
    if (!item.pred)
    {
        if (cfg_.nodes_[c].visited)
            return;
        cfg_.nodes_[c].s_start = {};
        cfg_.nodes_[c].has_start = true;
        process(c);
        return;
    }

    auto& n = cfg_.nodes_[c];
    const bool widen = n.emulations > config_.reemulation_cap;
    std::optional<StackState> existing;
    if (n.has_start)
        existing = n.s_start;
    auto merged = prepare_stack(cfg_.values_, cfg_.nodes_[*item.pred].s_end, existing,
        static_cast<uint32_t>(c), cfg_.diags_, n.id.offset, widen);
    if (n.visited && !merged.changed)
        return;
    n.s_start = std::move(merged.merged);
    n.has_start = true;
    process(c);
}

void CfgBuilder::process(size_t c)
{
    const bool sensitive = cfg_.mode_ == Mode::ReuseSensitive;
    std::vector<Successor> succs;
    uint64_t jump_pc = 0;
    {
        auto& n = cfg_.nodes_[c];
        n.visited = true;
        ++n.emulations;
        const auto& block = cfg_.blocks_[n.block_index];
        jump_pc = block.instructions.back().offset;
        auto res = emulate_block(block, n.s_start, cfg_.values_, static_cast<uint32_t>(c), cfg_.diags_);
        n.s_end = std::move(res.s_end);
        n.tac = std::move(res.tac);
        n.snapshots.push_back({n.s_start, n.s_end, static_cast<uint32_t>(n.snapshots.size())});
        succs = std::move(res.successors);
    }

    // A phi operand yields several successors; taint once per operand.
    std::set<ValueId> tainted_operands;
    for (const auto& succ : succs)
    {
        if (!succ.target)
            continue;

        uint64_t offset = 0;
        if (succ.kind == EdgeKind::Jump)
        {
            if (sensitive && tainted_operands.insert(succ.operand).second)
            {
                const auto origins = trace_origin(succ.operand, cfg_.values_);
                const auto& s_start = cfg_.nodes_[c].s_start.entries;
                const bool pre_pushed = std::any_of(s_start.begin(), s_start.end(),
                    [&](ValueId id) { return origins.contains(id); });
                if (pre_pushed)
                    update_reuse_context(c, succ.operand);
            }
            const auto target = valid_jump_target(*succ.target, jump_pc);
            if (!target)
                continue;
            offset = *target;
        }
        else
        {
            const auto ft = to_u64(*succ.target);
            if (!ft || !cfg_.block_at(*ft))
                continue;  // ran off the end of code: implicit STOP
            offset = *ft;
        }

        size_t s = 0;
        if (!sensitive)
            s = node_for_offset(offset);
        else if (ends_transaction(cfg_.block_at(offset)->terminator))
            s = handle_end_block(c, offset);
        else
            s = reuse_handler(c, offset);
        add_edge(c, s, succ.kind);
        worklist_.push_back({c, s});
    }
}

std::optional<uint64_t> CfgBuilder::valid_jump_target(const u256& target, uint64_t pc)
{
    const auto off = to_u64(target);
    const BasicBlock* b = off ? cfg_.block_at(*off) : nullptr;
    if (b == nullptr || !b->starts_with_jumpdest())
    {
        cfg_.diags_.warn("invalid jump target " + to_hex(target), pc);
        return std::nullopt;
    }
    return off;
}

bool CfgBuilder::taint_positions(size_t node, const std::set<ValueId>& origins)
{
    bool found = false;
    auto& n = cfg_.nodes_[node];
    const auto& s = n.s_start;
    for (size_t depth = 0; depth < s.size(); ++depth)
    {
        const auto id = s.at_depth(depth);
        if (!origins.contains(id))
            continue;
        found = true;
        const auto& v = cfg_.values_[id];
        if (!v.is_const())
        {
            cfg_.diags_.warn("tainted position holds a non-constant value", n.id.offset);
            continue;
        }
        n.context.entries.emplace(static_cast<uint32_t>(depth), v.constant);
    }
    return found;
}

void CfgBuilder::update_reuse_context(size_t node, ValueId jump_operand)
{
    if (!cfg_.values_[jump_operand].is_const())
    {
        cfg_.diags_.warn("jump operand is not constant; no taint", cfg_.nodes_[node].id.offset);
        return;
    }
    const auto origins = trace_origin(jump_operand, cfg_.values_);

    std::set<uint64_t> touched;
    if (taint_positions(node, origins))
        touched.insert(cfg_.nodes_[node].id.offset);

    // Other blocks on the same flow carry the same SSA ids in their S_start:
    // predecessors that pushed the operand and successors that were handed
    // it without consuming it (a branch arm created before this jump was
    // seen). Walk both directions while the ids persist.
    std::set<size_t> seen{node};
    std::deque<size_t> queue;
    const auto enqueue_neighbours = [&](size_t n) {
        for (const auto& [p, kind] : cfg_.nodes_[n].preds)
            queue.push_back(p);
        for (const auto& [s, kind] : cfg_.nodes_[n].succs)
            queue.push_back(s);
    };
    enqueue_neighbours(node);
    while (!queue.empty())
    {
        const auto n = queue.front();
        queue.pop_front();
        if (!seen.insert(n).second)
            continue;
        if (!taint_positions(n, origins))
            continue;
        touched.insert(cfg_.nodes_[n].id.offset);
        enqueue_neighbours(n);
    }
    for (const auto off : touched)
        transfer_taint(off);
}

bool CfgBuilder::transfer_pair(size_t from, size_t to)
{
    bool changed = false;
    const auto src = cfg_.nodes_[from].context.entries;
    auto& dst = cfg_.nodes_[to];
    for (const auto& [depth, value] : src)
    {
        if (depth >= dst.s_start.size())
        {
            if (reported_out_of_range_.emplace(to, depth).second)
                cfg_.diags_.warn("shared taint index out of range", dst.id.offset);
            break;
        }
        const auto& v = cfg_.values_[dst.s_start.at_depth(depth)];
        if (!v.is_const())
            break;
        changed |= dst.context.entries.emplace(depth, v.constant).second;
        // Different operands mean different paths from here on.
        if (v.constant != value)
            break;
    }
    return changed;
}

void CfgBuilder::transfer_taint(uint64_t offset)
{
    const auto it = cfg_.clones_.find(offset);
    if (it == cfg_.clones_.end() || it->second.size() < 2)
        return;
    const auto clones = it->second;
    bool changed = true;
    while (changed)
    {
        changed = false;
        for (const auto a : clones)
        {
            for (const auto b : clones)
            {
                if (a != b)
                    changed |= transfer_pair(a, b);
            }
        }
    }
}

bool CfgBuilder::context_matches(const StackState& s_end, size_t candidate) const
{
    for (const auto& [depth, value] : cfg_.nodes_[candidate].context.entries)
    {
        if (depth >= s_end.size())
            return false;
        const auto& v = cfg_.values_[s_end.at_depth(depth)];
        if (!v.is_const() || v.constant != value)
            return false;
    }
    return true;
}

size_t CfgBuilder::reuse_handler(size_t from, uint64_t target_offset)
{
    for (const auto idx : cfg_.clones_at(target_offset))
    {
        if (context_matches(cfg_.nodes_[from].s_end, idx))
            return idx;
    }
    const auto s_end = cfg_.nodes_[from].s_end;
    const auto idx = create_node(target_offset, s_end);
    cfg_.nodes_[idx].has_start = true;
    transfer_taint(target_offset);
    return idx;
}

size_t CfgBuilder::handle_end_block(size_t from, uint64_t end_offset)
{
    const auto clones = cfg_.clones_at(end_offset);
    for (const auto idx : clones)
    {
        for (const auto& [p, kind] : cfg_.nodes_[idx].preds)
        {
            if (p == from)
                return idx;
        }
    }
    for (const auto idx : clones)
    {
        if (cfg_.nodes_[idx].preds.empty())
            return idx;
    }
    const bool first = clones.empty();
    const auto s_end = cfg_.nodes_[from].s_end;
    const auto idx = create_node(end_offset, s_end);
    cfg_.nodes_[idx].has_start = true;
    cfg_.nodes_[idx].end_clone = !first;
    return idx;
}

Cfg CfgBuilder::finish() &&
{
    for (auto& b : cfg_.blocks_)
        b.is_data = cfg_.clones_at(b.start_offset).empty();
    return std::move(cfg_);
}

Cfg build_cfg(std::span<const uint8_t> code, Mode mode, const Config& config)
{
    CfgBuilder builder{code, mode, config};
    builder.run();
    return std::move(builder).finish();
}

std::set<uint64_t> cloned_offsets(const Cfg& cfg)
{
    std::set<uint64_t> out;
    for (const auto& n : cfg.nodes())
    {
        if (n.id.clone_index == 0)
            continue;
        const auto* b = cfg.block_at(n.id.offset);
        if (b != nullptr && ends_transaction(b->terminator))
            continue;
        out.insert(n.id.offset);
    }
    return out;
}

}  // namespace reusecfg
