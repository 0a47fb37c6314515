#include <reusecfg/cfg.hpp>
#include <reusecfg/cli.hpp>
#include <reusecfg/corpus.hpp>
#include <reusecfg/detectors.hpp>
#include <reusecfg/metrics.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <sstream>

namespace reusecfg::cli
{
namespace
{
using json = nlohmann::ordered_json;

/// Input or usage problem: exit code 2.
class UsageError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

bytes read_file(const std::string& path)
{
    std::ifstream in{path, std::ios::binary};
    if (!in)
        throw UsageError("cannot read " + path);
    const bytes raw{std::istreambuf_iterator<char>{in}, std::istreambuf_iterator<char>{}};
    try
    {
        // Assembly sources (the detector fixtures) are assembled on the fly.
        auto code = std::filesystem::path{path}.extension() == ".asm" ?
                        assemble(std::string_view{reinterpret_cast<const char*>(raw.data()), raw.size()}) :
                        decode_input(raw);
        if (code.empty())
            throw UsageError(path + ": empty bytecode");
        return code;
    }
    catch (const std::invalid_argument& e)
    {
        throw UsageError(path + ": " + e.what());
    }
}

std::string read_text(const std::string& path)
{
    std::ifstream in{path};
    if (!in)
        throw UsageError("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Outcome
{
    int code = exit_ok;
    std::string out;
    std::string err;
};

/// Shared options of the analysis subcommands.
struct Options
{
    std::vector<std::string> files;
    bool insensitive = false;
    bool emit_tac = false;
    std::string format = "text";
    std::string traces;
    unsigned jobs = 1;
    Config config;
};

Mode mode_of(const Options& o)
{
    return o.insensitive ? Mode::ReuseInsensitive : Mode::ReuseSensitive;
}

void print_diagnostics(const Cfg& cfg, std::ostream& err)
{
    for (const auto& d : cfg.diagnostics().items())
    {
        err << to_string(d.severity) << ": " << d.message;
        if (d.offset)
            err << " [" << to_hex(*d.offset) << "]";
        err << '\n';
    }
}

std::string cfg_text(const Cfg& cfg, bool with_tac)
{
    std::ostringstream out;
    for (size_t i = 0; i < cfg.nodes().size(); ++i)
    {
        const auto& b = cfg.block_of(i);
        out << "node " << to_string(cfg.node(i).id) << " [0x" << std::hex << b.start_offset << ", 0x"
            << b.end_offset() << std::dec << ") " << to_string(b.terminator) << '\n';
    }
    for (const auto& e : cfg.edges())
        out << to_string(e.from) << " -> " << to_string(e.to) << " (" << to_string(e.kind) << ")\n";
    if (with_tac)
    {
        for (const auto& n : cfg.nodes())
        {
            out << to_string(n.id) << ":\n";
            for (const auto& t : n.tac)
                out << "  " << format_tac(t, cfg.values()) << '\n';
        }
    }
    return out.str();
}

using FileTask = std::function<void(const std::string&, std::ostream&, std::ostream&)>;

Outcome run_one(const FileTask& task, const std::string& file)
{
    Outcome o;
    std::ostringstream out, err;
    try
    {
        task(file, out, err);
    }
    catch (const UsageError& e)
    {
        err << "error: " << e.what() << '\n';
        o.code = exit_usage_error;
    }
    catch (const AnalysisError& e)
    {
        err << "error: " << file << ": " << e.what() << '\n';
        o.code = exit_analysis_error;
    }
    catch (const InterpreterError& e)
    {
        err << "error: " << file << ": " << e.what() << '\n';
        o.code = exit_analysis_error;
    }
    o.out = out.str();
    o.err = err.str();
    return o;
}

/// Runs `task` over every file, `jobs` at a time, printing results in input
/// order. Returns the highest exit code.
int for_each_file(const Options& opts, const FileTask& task, std::ostream& out, std::ostream& err)
{
    std::vector<Outcome> results(opts.files.size());
    const size_t jobs = std::max<size_t>(1, opts.jobs);
    for (size_t start = 0; start < opts.files.size(); start += jobs)
    {
        std::vector<std::future<Outcome>> batch;
        const auto end = std::min(opts.files.size(), start + jobs);
        for (size_t i = start; i < end; ++i)
            batch.push_back(std::async(jobs > 1 ? std::launch::async : std::launch::deferred, run_one,
                std::cref(task), std::cref(opts.files[i])));
        for (size_t i = start; i < end; ++i)
            results[i] = batch[i - start].get();
    }

    int code = exit_ok;
    for (size_t i = 0; i < results.size(); ++i)
    {
        if (results.size() > 1)
            out << "== " << opts.files[i] << '\n';
        out << results[i].out;
        err << results[i].err;
        code = std::max(code, results[i].code);
    }
    return code;
}

std::string big(const bigint& v)
{
    return v.str();
}
}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Reuse-sensitive control-flow graph recovery for EVM bytecode", "reusecfg"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "reusecfg 1.0.0");

    Options opts;
    try
    {
        apply_env_overrides(opts.config);
    }
    catch (const std::invalid_argument& e)
    {
        err << "error: " << e.what() << '\n';
        return exit_usage_error;
    }

    const auto add_limits = [&](CLI::App* sub) {
        sub->add_option("--clone-budget", opts.config.clone_budget_per_offset, "Clones per offset")
            ->check(CLI::PositiveNumber);
        sub->add_option("--block-budget", opts.config.total_block_budget, "Total CFG nodes")
            ->check(CLI::PositiveNumber);
        sub->add_option("--reemulation-cap", opts.config.reemulation_cap,
               "Re-emulations per node before widening")
            ->check(CLI::PositiveNumber);
        sub->add_option("--jobs,-j", opts.jobs, "Files analysed in parallel")->check(CLI::PositiveNumber);
    };
    const auto add_files = [&](CLI::App* sub) {
        sub->add_option("files", opts.files, "Bytecode files: hex text, raw binary or .asm source")->required();
    };
    const auto add_mode = [&](CLI::App* sub) {
        sub->add_flag("--reuse-insensitive", opts.insensitive, "Baseline recovery without cloning");
    };

    auto* disasm = app.add_subcommand("disasm", "Print the instruction listing");
    add_files(disasm);
    disasm->add_option("--jobs,-j", opts.jobs)->check(CLI::PositiveNumber);

    auto* cfg_cmd = app.add_subcommand("cfg", "Recover and export the CFG");
    add_files(cfg_cmd);
    add_mode(cfg_cmd);
    add_limits(cfg_cmd);
    cfg_cmd->add_option("--format", opts.format, "dot, json or text")
        ->check(CLI::IsMember({"dot", "json", "text"}));
    cfg_cmd->add_flag("--emit-tac", opts.emit_tac, "Include three-address code");

    auto* paths = app.add_subcommand("paths", "Count acyclic entry-to-exit paths");
    add_files(paths);
    add_mode(paths);
    add_limits(paths);
    paths->add_option("--format", opts.format, "text or json")->check(CLI::IsMember({"json", "text"}));

    auto* poly = app.add_subcommand("poly", "List polymorphic jump targets");
    add_files(poly);
    add_mode(poly);
    add_limits(poly);
    poly->add_option("--format", opts.format, "text or json")->check(CLI::IsMember({"json", "text"}));

    auto* cover = app.add_subcommand("cover", "Trace coverage of the CFG");
    add_files(cover);
    add_mode(cover);
    add_limits(cover);
    cover->add_option("--traces", opts.traces, "Trace file")->required();
    cover->add_option("--format", opts.format, "text or json")->check(CLI::IsMember({"json", "text"}));

    auto* detect = app.add_subcommand("detect", "Run the tx.origin and reentrancy detectors");
    add_files(detect);
    add_mode(detect);
    add_limits(detect);
    detect->add_option("--format", opts.format, "text or json")->check(CLI::IsMember({"json", "text"}));

    auto* interp = app.add_subcommand("interp", "Enumerate concrete execution traces");
    add_files(interp);
    interp->add_option("--branch-bound", opts.config.branch_bound, "Input-dependent decisions per run")
        ->check(CLI::PositiveNumber);
    interp->add_option("--jobs,-j", opts.jobs)->check(CLI::PositiveNumber);

    std::string pattern_name;
    uint64_t seed = 0;
    uint32_t depth = 1;
    std::string out_dir = ".";
    auto* gen = app.add_subcommand("gen", "Generate a reuse-pattern fixture and its manifest");
    gen->add_option("--pattern", pattern_name, "Pattern name")->required();
    gen->add_option("--seed", seed, "Layout seed");
    gen->add_option("--depth", depth, "Nesting depth")->check(CLI::Range(1u, 4096u));
    gen->add_option("--out-dir,-o", out_dir, "Output directory, created if missing");

    std::vector<const char*> argv;
    for (const auto& a : args)
        argv.push_back(a.c_str());
    try
    {
        app.parse(static_cast<int>(argv.size()), argv.data());
    }
    catch (const CLI::CallForHelp& e)
    {
        app.exit(e, out, err);
        return exit_ok;
    }
    catch (const CLI::CallForVersion& e)
    {
        app.exit(e, out, err);
        return exit_ok;
    }
    catch (const CLI::ParseError& e)
    {
        app.exit(e, out, err);
        return exit_usage_error;
    }

    const auto load_cfg = [&](const std::string& file, std::ostream& e) {
        const auto code = read_file(file);
        auto cfg = build_cfg(code, mode_of(opts), opts.config);
        print_diagnostics(cfg, e);
        return cfg;
    };
    const bool as_json = opts.format == "json";

    if (disasm->parsed())
    {
        return for_each_file(opts, [&](const std::string& file, std::ostream& o, std::ostream& e) {
            Diagnostics diags;
            const auto code = read_file(file);
            o << format_listing(disassemble(code, &diags));
            for (const auto& d : diags.items())
                e << to_string(d.severity) << ": " << d.message << '\n';
        }, out, err);
    }
    if (cfg_cmd->parsed())
    {
        return for_each_file(opts, [&](const std::string& file, std::ostream& o, std::ostream& e) {
            const auto cfg = load_cfg(file, e);
            if (opts.format == "json")
                o << to_json(cfg, opts.emit_tac);
            else if (opts.format == "dot")
                o << to_dot(cfg, opts.emit_tac);
            else
                o << cfg_text(cfg, opts.emit_tac);
        }, out, err);
    }
    if (paths->parsed())
    {
        return for_each_file(opts, [&](const std::string& file, std::ostream& o, std::ostream& e) {
            const auto code = read_file(file);
            const auto s = build_cfg(code, Mode::ReuseSensitive, opts.config);
            print_diagnostics(s, e);
            const auto ps = count_paths(s);
            std::optional<PathReport> pi;
            if (opts.insensitive)
                pi = count_paths(build_cfg(code, Mode::ReuseInsensitive, opts.config));
            if (as_json)
            {
                json j;
                j["sensitive"] = big(ps.path_count);
                j["sensitive_back_edges"] = ps.back_edges_removed;
                if (pi)
                {
                    j["insensitive"] = big(pi->path_count);
                    j["insensitive_back_edges"] = pi->back_edges_removed;
                }
                o << j.dump() << '\n';
                return;
            }
            o << "sensitive " << big(ps.path_count) << '\n';
            if (pi)
                o << "insensitive " << big(pi->path_count) << '\n';
        }, out, err);
    }
    if (poly->parsed())
    {
        return for_each_file(opts, [&](const std::string& file, std::ostream& o, std::ostream& e) {
            const auto cfg = load_cfg(file, e);
            const auto found = polymorphic_jump_targets(cfg);
            if (as_json)
            {
                auto arr = json::array();
                for (const auto& p : found)
                {
                    auto targets = json::array();
                    for (const auto& t : p.targets)
                        targets.push_back(to_string(t));
                    arr.push_back({{"block", to_string(p.block)}, {"targets", targets}});
                }
                o << arr.dump() << '\n';
                return;
            }
            for (const auto& p : found)
            {
                o << to_string(p.block) << ':';
                for (const auto& t : p.targets)
                    o << ' ' << to_string(t);
                o << '\n';
            }
        }, out, err);
    }
    if (cover->parsed())
    {
        std::vector<Trace> traces;
        try
        {
            traces = parse_traces(read_text(opts.traces));
        }
        catch (const std::exception& e)
        {
            err << "error: " << opts.traces << ": " << e.what() << '\n';
            return exit_usage_error;
        }
        return for_each_file(opts, [&](const std::string& file, std::ostream& o, std::ostream& e) {
            const auto cfg = load_cfg(file, e);
            const auto r = trace_coverage(cfg, traces);
            if (as_json)
            {
                json j;
                j["covered"] = r.covered;
                j["total"] = r.total;
                auto unc = json::array();
                for (const auto& u : r.uncovered)
                    unc.push_back({{"trace", format_trace(u.trace)}, {"failed_at", u.failed_at}});
                j["uncovered"] = std::move(unc);
                o << j.dump() << '\n';
                return;
            }
            o << "covered " << r.covered << '/' << r.total << '\n';
            for (const auto& u : r.uncovered)
            {
                o << "uncovered " << format_trace(u.trace) << '\n';
                e << "warning: trace leaves the CFG at index " << u.failed_at << '\n';
            }
        }, out, err);
    }
    if (detect->parsed())
    {
        return for_each_file(opts, [&](const std::string& file, std::ostream& o, std::ostream& e) {
            const auto cfg = load_cfg(file, e);
            const auto findings = detect_all(cfg);
            o << (as_json ? findings_json(findings) : findings_text(findings));
        }, out, err);
    }
    if (interp->parsed())
    {
        return for_each_file(opts, [&](const std::string& file, std::ostream& o, std::ostream&) {
            const auto code = read_file(file);
            for (const auto& t : interpret(code, opts.config.branch_bound))
                o << format_trace(t) << '\n';
        }, out, err);
    }
    if (gen->parsed())
    {
        const auto pattern = parse_pattern(pattern_name);
        if (!pattern)
        {
            err << "error: unknown pattern '" << pattern_name << "'; expected one of:";
            for (const auto p : all_patterns)
                err << ' ' << to_string(p);
            err << '\n';
            return exit_usage_error;
        }
        const PatternSpec spec{*pattern, seed, depth};
        GroundTruth gt;
        try
        {
            gt = generate(spec);
        }
        catch (const std::invalid_argument& e)
        {
            err << "error: " << e.what() << '\n';
            return exit_analysis_error;
        }
        const auto stem = std::string{to_string(*pattern)} + "_" + std::to_string(seed);
        const auto dir = std::filesystem::path{out_dir};
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        std::ofstream hex{dir / (stem + ".hex")};
        std::ofstream manifest{dir / (stem + ".json")};
        if (!hex || !manifest)
        {
            err << "error: cannot write to " << out_dir << '\n';
            return exit_usage_error;
        }
        hex << to_hex_string(gt.bytecode) << '\n';
        manifest << manifest_json(spec, gt);
        out << (dir / (stem + ".hex")).string() << '\n' << (dir / (stem + ".json")).string() << '\n';
        return exit_ok;
    }
    return exit_usage_error;
}

}  // namespace reusecfg::cli
