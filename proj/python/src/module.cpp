#include <reusecfg/cfg.hpp>
#include <reusecfg/corpus.hpp>
#include <reusecfg/detectors.hpp>
#include <reusecfg/metrics.hpp>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace reusecfg;

namespace
{
bytes to_bytes(const py::bytes& b)
{
    const auto s = std::string{b};
    return {s.begin(), s.end()};
}

py::bytes from_bytes(const bytes& b)
{
    return py::bytes{reinterpret_cast<const char*>(b.data()), b.size()};
}

py::object to_int(const bigint& v)
{
    return py::module_::import("builtins").attr("int")(v.str());
}

std::vector<std::vector<uint64_t>> to_lists(const std::vector<Trace>& traces)
{
    std::vector<std::vector<uint64_t>> out;
    for (const auto& t : traces)
        out.push_back(t.offsets);
    return out;
}

std::vector<Trace> from_lists(const std::vector<std::vector<uint64_t>>& lists)
{
    std::vector<Trace> out;
    for (const auto& l : lists)
        out.push_back(Trace{l});
    return out;
}

py::dict finding_dict(const Finding& f)
{
    py::list evidence;
    for (const auto& e : f.evidence)
        evidence.append(py::make_tuple(e.role, e.offset));
    py::dict d;
    d["kind"] = std::string{to_string(f.kind)};
    d["site_offset"] = f.site_offset;
    d["evidence"] = evidence;
    return d;
}

Cfg analyze(const py::bytes& code, bool insensitive, uint32_t clone_budget, uint32_t block_budget)
{
    Config c;
    c.clone_budget_per_offset = clone_budget;
    c.total_block_budget = block_budget;
    const auto b = to_bytes(code);
    py::gil_scoped_release release;
    return build_cfg(b, insensitive ? Mode::ReuseInsensitive : Mode::ReuseSensitive, c);
}
}  // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Reuse-sensitive EVM control-flow recovery";

    py::register_exception<AnalysisError>(m, "AnalysisError");
    py::register_exception<InterpreterError>(m, "InterpreterError");

    m.def("parse_hex", [](const std::string& text) { return from_bytes(parse_hex(text)); }, py::arg("text"));
    m.def("assemble", [](const std::string& text) { return from_bytes(assemble(text)); }, py::arg("text"));
    m.def("disassemble", [](const py::bytes& code) { return format_listing(disassemble(to_bytes(code))); },
        py::arg("code"), "Listing text, one instruction per line.");

    py::class_<Cfg>(m, "Cfg")
        .def_property_readonly("node_count", [](const Cfg& c) { return c.nodes().size(); })
        .def_property_readonly("edge_count", &Cfg::edge_count)
        .def_property_readonly("insensitive", [](const Cfg& c) { return c.mode() == Mode::ReuseInsensitive; })
        .def("to_json", [](const Cfg& c, bool tac) { return to_json(c, tac); }, py::arg("tac") = false)
        .def("to_dot", [](const Cfg& c, bool tac) { return to_dot(c, tac); }, py::arg("tac") = false)
        .def("path_count", [](const Cfg& c) { return to_int(count_paths(c).path_count); })
        .def("back_edges", [](const Cfg& c) { return count_paths(c).back_edges_removed; })
        .def("cloned_offsets", [](const Cfg& c) { return cloned_offsets(c); })
        .def("polymorphic_jumps",
            [](const Cfg& c) {
                std::vector<std::pair<std::string, std::vector<std::string>>> out;
                for (const auto& p : polymorphic_jump_targets(c))
                {
                    std::vector<std::string> targets;
                    for (const auto& t : p.targets)
                        targets.push_back(to_string(t));
                    out.emplace_back(to_string(p.block), std::move(targets));
                }
                return out;
            })
        .def(
            "coverage",
            [](const Cfg& c, const std::vector<std::vector<uint64_t>>& traces) {
                const auto r = trace_coverage(c, from_lists(traces));
                return py::make_tuple(r.covered, r.total);
            },
            py::arg("traces"))
        .def("detect",
            [](const Cfg& c) {
                py::list out;
                for (const auto& f : detect_all(c))
                    out.append(finding_dict(f));
                return out;
            })
        .def("diagnostics", [](const Cfg& c) {
            std::vector<std::string> out;
            for (const auto& d : c.diagnostics().items())
                out.push_back(d.message);
            return out;
        });

    m.def("build_cfg", &analyze, py::arg("code"), py::arg("insensitive") = false,
        py::arg("clone_budget") = Config{}.clone_budget_per_offset,
        py::arg("block_budget") = Config{}.total_block_budget);

    m.def(
        "interpret", [](const py::bytes& code, uint32_t bound) { return to_lists(interpret(to_bytes(code), bound)); },
        py::arg("code"), py::arg("branch_bound") = 16);

    m.def("patterns", [] {
        std::vector<std::string> out;
        for (const auto p : all_patterns)
            out.emplace_back(to_string(p));
        return out;
    });

    m.def(
        "generate",
        [](const std::string& pattern, uint64_t seed, uint32_t depth) {
            const auto p = parse_pattern(pattern);
            if (!p)
                throw py::value_error("unknown pattern " + pattern);
            const auto gt = generate({*p, seed, depth});
            py::dict d;
            d["bytecode"] = from_bytes(gt.bytecode);
            d["reused_offsets"] = gt.reused_offsets;
            d["expected_sensitive_paths"] = to_int(gt.expected_sensitive_paths);
            d["expected_insensitive_paths"] = to_int(gt.expected_insensitive_paths);
            d["traces"] = to_lists(gt.traces);
            return d;
        },
        py::arg("pattern"), py::arg("seed") = 0, py::arg("depth") = 1);
}
