#include <reusecfg/cfg.hpp>

#include <json.hpp>

#include <algorithm>
#include <sstream>

namespace reusecfg
{
namespace
{
using json = nlohmann::ordered_json;

/// Node indices ordered by BlockId so output does not depend on discovery order.
std::vector<size_t> sorted_nodes(const Cfg& cfg)
{
    std::vector<size_t> order(cfg.nodes().size());
    for (size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    std::sort(order.begin(), order.end(),
        [&](size_t a, size_t b) { return cfg.node(a).id < cfg.node(b).id; });
    return order;
}

json instructions_json(const BasicBlock& b)
{
    json out = json::array();
    for (const auto& ins : b.instructions)
    {
        json j;
        j["offset"] = ins.offset;
        j["mnemonic"] = ins.mnemonic();
        if (ins.push_data)
            j["push_data"] = to_hex(*ins.push_data);
        out.push_back(std::move(j));
    }
    return out;
}

std::string dot_escape(std::string_view s)
{
    std::string out;
    for (const char c : s)
    {
        if (c == '"' || c == '\\')
            out += '\\';
        out += c;
    }
    return out;
}
}  // namespace

std::string to_json(const Cfg& cfg, bool with_tac)
{
    json root;
    root["entry"] = to_string(cfg.entry_id());

    json blocks = json::array();
    std::set<uint64_t> emitted_offsets;
    for (const auto idx : sorted_nodes(cfg))
    {
        const auto& n = cfg.node(idx);
        const auto& b = cfg.block_of(idx);
        emitted_offsets.insert(n.id.offset);
        json j;
        j["id"] = to_string(n.id);
        j["offset"] = n.id.offset;
        j["clone"] = n.id.clone_index;
        j["instructions"] = instructions_json(b);
        j["terminator"] = std::string{to_string(b.terminator)};
        j["is_data"] = false;
        if (with_tac)
        {
            json tac = json::array();
            for (const auto& e : n.tac)
                tac.push_back(format_tac(e, cfg.values()));
            j["tac"] = std::move(tac);
        }
        blocks.push_back(std::move(j));
    }
    // Never-entered byte ranges are kept as data blocks.
    for (const auto& b : cfg.blocks())
    {
        if (emitted_offsets.contains(b.start_offset))
            continue;
        json j;
        j["id"] = to_string(BlockId{b.start_offset, 0});
        j["offset"] = b.start_offset;
        j["clone"] = 0;
        j["instructions"] = instructions_json(b);
        j["terminator"] = std::string{to_string(b.terminator)};
        j["is_data"] = b.is_data;
        blocks.push_back(std::move(j));
    }
    std::stable_sort(blocks.begin(), blocks.end(), [](const json& a, const json& b) {
        return std::pair{a["offset"].get<uint64_t>(), a["clone"].get<uint32_t>()} <
               std::pair{b["offset"].get<uint64_t>(), b["clone"].get<uint32_t>()};
    });
    root["blocks"] = std::move(blocks);

    json edges = json::array();
    for (const auto& e : cfg.edges())
    {
        json j;
        j["from"] = to_string(e.from);
        j["to"] = to_string(e.to);
        j["kind"] = std::string{to_string(e.kind)};
        edges.push_back(std::move(j));
    }
    root["edges"] = std::move(edges);

    json diags = json::array();
    for (const auto& d : cfg.diagnostics().items())
    {
        json j;
        j["severity"] = std::string{to_string(d.severity)};
        j["message"] = d.message;
        if (d.offset)
            j["offset"] = *d.offset;
        else
            j["offset"] = nullptr;
        diags.push_back(std::move(j));
    }
    root["diagnostics"] = std::move(diags);
    return root.dump(2) + "\n";
}

std::string to_dot(const Cfg& cfg, bool with_tac)
{
    std::ostringstream out;
    out << "digraph cfg {\n";
    out << "  node [shape=box, fontname=\"monospace\"];\n";
    for (const auto idx : sorted_nodes(cfg))
    {
        const auto& n = cfg.node(idx);
        const auto id = to_string(n.id);
        std::string label = id + "\\l";
        if (with_tac)
        {
            for (const auto& e : n.tac)
                label += dot_escape(format_tac(e, cfg.values())) + "\\l";
        }
        else
        {
            for (const auto& ins : cfg.block_of(idx).instructions)
                label += dot_escape(format_instruction(ins)) + "\\l";
        }
        out << "  \"" << id << "\" [label=\"" << label << "\"];\n";
    }
    for (const auto& e : cfg.edges())
    {
        out << "  \"" << to_string(e.from) << "\" -> \"" << to_string(e.to) << "\"";
        if (e.kind == EdgeKind::FallThrough)
            out << " [style=dashed]";
        out << ";\n";
    }
    out << "}\n";
    return out.str();
}

}  // namespace reusecfg
