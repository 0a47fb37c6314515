#include <reusecfg/detectors.hpp>
#include <reusecfg/metrics.hpp>

#include <boost/dynamic_bitset.hpp>
#include <json.hpp>

#include <algorithm>
#include <map>
#include <optional>
#include <sstream>

namespace reusecfg
{
std::string_view to_string(FindingKind k) noexcept
{
    return k == FindingKind::TxOrigin ? "tx-origin" : "reentrancy";
}

namespace
{
/// Opcodes a guard condition is typically built from.
bool is_condition_op(uint8_t opcode)
{
    switch (opcode)
    {
    case op::EQ:
    case op::ISZERO:
    case op::AND:
    case op::OR:
    case op::XOR:
    case op::NOT:
    case op::LT:
    case op::GT:
    case op::SLT:
    case op::SGT:
    case op::SUB:
        return true;
    default:
        return false;
    }
}

bool is_comparison(uint8_t opcode)
{
    return opcode == op::EQ || opcode == op::LT || opcode == op::GT || opcode == op::SLT ||
           opcode == op::SGT || opcode == op::SUB || opcode == op::XOR;
}

bool is_call(uint8_t opcode)
{
    return opcode == op::CALL || opcode == op::CALLCODE || opcode == op::DELEGATECALL;
}

/// Values with opcode `source` reachable from `v` backwards. With
/// `conditions_only`, only condition-building operations are crossed.
std::set<ValueId> sources_of(ValueId v, uint8_t source, const ValueTable& table, bool conditions_only)
{
    std::set<ValueId> out, seen;
    std::vector<ValueId> work{v};
    while (!work.empty())
    {
        const auto id = work.back();
        work.pop_back();
        if (!seen.insert(id).second)
            continue;
        const auto& val = table[id];
        if (val.kind == ValueKind::Sym && val.opcode == source)
        {
            out.insert(id);
            continue;
        }
        if (val.kind == ValueKind::Phi)
            work.insert(work.end(), val.members.begin(), val.members.end());
        else if (val.kind == ValueKind::Sym && (!conditions_only || is_condition_op(val.opcode)))
            work.insert(work.end(), val.operands.begin(), val.operands.end());
    }
    return out;
}

bool same_expression_rec(ValueId a, ValueId b, const ValueTable& table, unsigned budget)
{
    if (a == b)
        return true;
    if (budget == 0)
        return false;
    const auto& x = table[a];
    const auto& y = table[b];
    if (x.is_const() && y.is_const())
        return x.constant == y.constant;
    if (x.kind != ValueKind::Sym || y.kind != ValueKind::Sym)
        return false;
    if (x.opcode != y.opcode || x.operands.size() != y.operands.size())
        return false;
    for (size_t i = 0; i < x.operands.size(); ++i)
    {
        if (!same_expression_rec(x.operands[i], y.operands[i], table, budget - 1))
            return false;
    }
    return true;
}

/// Instruction located in a node.
struct Site
{
    size_t node;
    const TacEntry* tac;
};

std::vector<Site> sites_with(const Cfg& cfg, bool (*pred)(uint8_t))
{
    std::vector<Site> out;
    for (size_t n = 0; n < cfg.nodes().size(); ++n)
    {
        for (const auto& e : cfg.node(n).tac)
        {
            if (pred(e.opcode))
                out.push_back({n, &e});
        }
    }
    return out;
}

/// Reachability over the back-edge-free view: reach[u][v] iff a non-empty
/// path u -> v exists.
class Reach
{
public:
    explicit Reach(const Cfg& cfg) : rows_(cfg.nodes().size(), boost::dynamic_bitset<>(cfg.nodes().size()))
    {
        const auto view = acyclic_view(cfg);
        for (auto it = view.topo_order.rbegin(); it != view.topo_order.rend(); ++it)
        {
            const auto u = *it;
            for (const auto& [w, kind] : cfg.node(u).succs)
            {
                if (view.back_edges.contains({u, w}))
                    continue;
                rows_[u].set(w);
                rows_[u] |= rows_[w];
            }
        }
    }
    bool operator()(size_t u, size_t v) const { return rows_[u].test(v); }

private:
    std::vector<boost::dynamic_bitset<>> rows_;
};

/// True if `b` executes after `a` on some acyclic path.
bool ordered(const Reach& reach, const Site& a, const Site& b)
{
    if (a.node == b.node)
        return a.tac->pc < b.tac->pc;
    return reach(a.node, b.node);
}

void sort_unique(std::vector<Finding>& v)
{
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}
}  // namespace

bool same_expression(ValueId a, ValueId b, const ValueTable& table)
{
    return same_expression_rec(a, b, table, 64);
}

std::vector<Finding> detect_tx_origin(const Cfg& cfg)
{
    const auto& table = cfg.values();

    // Origin instruction offset -> (role, site) candidates.
    std::map<uint64_t, std::pair<std::string, uint64_t>> compare_site, check_site;

    for (const auto& s : sites_with(cfg, is_comparison))
    {
        if (s.tac->args.size() != 2)
            continue;
        for (int side = 0; side < 2; ++side)
        {
            const auto origins = sources_of(s.tac->args[side], op::ORIGIN, table, true);
            const auto callers = sources_of(s.tac->args[1 - side], op::CALLER, table, true);
            if (origins.empty() || callers.empty())
                continue;
            for (const auto o : origins)
            {
                const auto pc = table[o].pc;
                auto [it, inserted] = compare_site.emplace(pc, std::pair{"compare", s.tac->pc});
                if (!inserted && s.tac->pc < it->second.second)
                    it->second.second = s.tac->pc;
            }
        }
    }

    for (const auto& s : sites_with(cfg, [](uint8_t o) { return o == op::JUMPI; }))
    {
        for (const auto o : sources_of(s.tac->args[1], op::ORIGIN, table, true))
        {
            const auto pc = table[o].pc;
            auto [it, inserted] = check_site.emplace(pc, std::pair{"check", s.tac->pc});
            if (!inserted && s.tac->pc < it->second.second)
                it->second.second = s.tac->pc;
        }
    }

    std::vector<Finding> out;
    for (const auto* sites : {&compare_site, &check_site})
    {
        for (const auto& [origin_pc, site] : *sites)
        {
            if (sites == &check_site && compare_site.contains(origin_pc))
                continue;
            out.push_back({FindingKind::TxOrigin, site.second,
                {{"origin", origin_pc}, {site.first, site.second}}});
        }
    }
    sort_unique(out);
    return out;
}

std::vector<Finding> detect_reentrancy(const Cfg& cfg)
{
    const auto& table = cfg.values();
    const auto checks = sites_with(cfg, [](uint8_t o) { return o == op::JUMPI; });
    const auto calls = sites_with(cfg, is_call);
    const auto stores = sites_with(cfg, [](uint8_t o) { return o == op::SSTORE; });
    if (checks.empty() || calls.empty() || stores.empty())
        return {};

    const Reach reach{cfg};
    std::vector<Finding> out;
    for (const auto& check : checks)
    {
        const auto loads = sources_of(check.tac->args[1], op::SLOAD, table, false);
        if (loads.empty())
            continue;
        for (const auto& call : calls)
        {
            if (!ordered(reach, check, call))
                continue;
            for (const auto& store : stores)
            {
                if (!ordered(reach, call, store))
                    continue;
                for (const auto load : loads)
                {
                    const auto& lv = table[load];
                    if (lv.operands.empty() || !same_expression(lv.operands[0], store.tac->args[0], table))
                        continue;
                    out.push_back({FindingKind::Reentrancy, call.tac->pc,
                        {{"sload", lv.pc}, {"check", check.tac->pc}, {"call", call.tac->pc},
                            {"store", store.tac->pc}}});
                }
            }
        }
    }
    sort_unique(out);
    return out;
}

std::vector<Finding> detect_all(const Cfg& cfg)
{
    auto out = detect_tx_origin(cfg);
    auto re = detect_reentrancy(cfg);
    out.insert(out.end(), re.begin(), re.end());
    return out;
}

std::string findings_json(const std::vector<Finding>& findings)
{
    auto arr = nlohmann::ordered_json::array();
    for (const auto& f : findings)
    {
        nlohmann::ordered_json j;
        j["kind"] = std::string{to_string(f.kind)};
        j["site_offset"] = f.site_offset;
        auto ev = nlohmann::ordered_json::array();
        for (const auto& e : f.evidence)
            ev.push_back({{"role", e.role}, {"offset", e.offset}});
        j["evidence"] = std::move(ev);
        arr.push_back(std::move(j));
    }
    return arr.dump(2) + "\n";
}

std::string findings_text(const std::vector<Finding>& findings)
{
    std::ostringstream out;
    for (const auto& f : findings)
    {
        out << to_string(f.kind) << " at " << to_hex(f.site_offset) << ":";
        for (const auto& e : f.evidence)
            out << ' ' << e.role << '=' << to_hex(e.offset);
        out << '\n';
    }
    out << findings.size() << (findings.size() == 1 ? " finding\n" : " findings\n");
    return out.str();
}

}  // namespace reusecfg
