#include <reusecfg/metrics.hpp>

#include <algorithm>
#include <charconv>
#include <map>
#include <stdexcept>

namespace reusecfg
{
Adjacency adjacency(const Cfg& cfg)
{
    Adjacency adj(cfg.nodes().size());
    for (size_t i = 0; i < adj.size(); ++i)
    {
        for (const auto& [to, kind] : cfg.node(i).succs)
            adj[i].push_back(to);
        std::sort(adj[i].begin(), adj[i].end());
        adj[i].erase(std::unique(adj[i].begin(), adj[i].end()), adj[i].end());
    }
    return adj;
}

DfsForest acyclic_view(const Adjacency& adj, size_t entry)
{
    DfsForest out;
    if (entry >= adj.size())
        return out;

    enum class Color : uint8_t { White, Grey, Black };
    std::vector<Color> color(adj.size(), Color::White);
    std::vector<size_t> postorder;

    // Iterative DFS over (node, next child index).
    std::vector<std::pair<size_t, size_t>> stack{{entry, 0}};
    color[entry] = Color::Grey;
    while (!stack.empty())
    {
        auto& [v, next] = stack.back();
        if (next < adj[v].size())
        {
            const auto w = adj[v][next++];
            if (color[w] == Color::Grey)
                out.back_edges.emplace(v, w);
            else if (color[w] == Color::White)
            {
                color[w] = Color::Grey;
                stack.emplace_back(w, 0);
            }
            continue;
        }
        color[v] = Color::Black;
        postorder.push_back(v);
        stack.pop_back();
    }
    out.topo_order.assign(postorder.rbegin(), postorder.rend());
    return out;
}

DfsForest acyclic_view(const Cfg& cfg)
{
    return acyclic_view(adjacency(cfg), cfg.entry());
}

PathReport count_paths(const Adjacency& adj, size_t entry)
{
    if (entry >= adj.size())
        throw AnalysisError("count_paths: entry node is missing");
    const auto view = acyclic_view(adj, entry);

    // paths[v]: paths from v to a sink once back edges are gone.
    std::vector<bigint> paths(adj.size(), 0);
    for (auto it = view.topo_order.rbegin(); it != view.topo_order.rend(); ++it)
    {
        const auto v = *it;
        bigint sum = 0;
        bool has_out = false;
        for (const auto w : adj[v])
        {
            if (view.back_edges.contains({v, w}))
                continue;
            has_out = true;
            sum += paths[w];
        }
        paths[v] = has_out ? sum : bigint{1};
    }
    return {paths[entry], static_cast<uint32_t>(view.back_edges.size())};
}

PathReport count_paths(const Cfg& cfg)
{
    if (cfg.nodes().empty())
        throw AnalysisError("count_paths: CFG has no entry");
    return count_paths(adjacency(cfg), cfg.entry());
}

std::vector<PolymorphicJump> polymorphic_jump_targets(const Cfg& cfg)
{
    std::vector<PolymorphicJump> out;
    for (const auto& n : cfg.nodes())
    {
        std::set<BlockId> targets;
        for (const auto& [to, kind] : n.succs)
        {
            if (kind == EdgeKind::Jump)
                targets.insert(cfg.node(to).id);
        }
        if (targets.size() > 1)
            out.push_back({n.id, std::move(targets)});
    }
    std::sort(out.begin(), out.end(),
        [](const PolymorphicJump& a, const PolymorphicJump& b) { return a.block < b.block; });
    return out;
}

CoverageReport trace_coverage(const Cfg& cfg, const std::vector<Trace>& traces)
{
    CoverageReport report;
    report.total = traces.size();
    if (cfg.nodes().empty())
    {
        for (const auto& t : traces)
            report.uncovered.push_back({t, 0});
        return report;
    }
    const auto adj = adjacency(cfg);
    for (const auto& t : traces)
    {
        if (t.offsets.empty() || t.offsets.front() != cfg.node(cfg.entry()).id.offset)
        {
            report.uncovered.push_back({t, 0});
            continue;
        }
        std::set<size_t> frontier{cfg.entry()};
        size_t i = 1;
        for (; i < t.offsets.size(); ++i)
        {
            std::set<size_t> next;
            for (const auto v : frontier)
            {
                for (const auto w : adj[v])
                {
                    if (cfg.node(w).id.offset == t.offsets[i])
                        next.insert(w);
                }
            }
            if (next.empty())
                break;
            frontier = std::move(next);
        }
        if (i == t.offsets.size())
            ++report.covered;
        else
            report.uncovered.push_back({t, i});
    }
    return report;
}

std::vector<Trace> parse_traces(std::string_view text)
{
    std::vector<Trace> out;
    size_t line_no = 0;
    while (!text.empty())
    {
        const auto nl = text.find('\n');
        auto line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;

        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string_view::npos || line[first] == '#')
            continue;

        Trace t;
        while (true)
        {
            const auto comma = line.find(',');
            auto field = line.substr(0, comma);
            const auto b = field.find_first_not_of(" \t\r");
            const auto e = field.find_last_not_of(" \t\r");
            field = b == std::string_view::npos ? std::string_view{} : field.substr(b, e - b + 1);
            if (field.starts_with("0x") || field.starts_with("0X"))
                field.remove_prefix(2);
            uint64_t v = 0;
            const auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), v, 16);
            if (field.empty() || ec != std::errc{} || end != field.data() + field.size())
                throw std::invalid_argument("malformed trace offset on line " + std::to_string(line_no));
            t.offsets.push_back(v);
            if (comma == std::string_view::npos)
                break;
            line.remove_prefix(comma + 1);
        }
        out.push_back(std::move(t));
    }
    return out;
}

std::string format_trace(const Trace& t)
{
    std::string out;
    for (size_t i = 0; i < t.offsets.size(); ++i)
    {
        if (i != 0)
            out += ',';
        out += to_hex(t.offsets[i]);
    }
    return out;
}

}  // namespace reusecfg
