#include "yprov/cli.hpp"

#include "yprov/crate_pack.hpp"
#include "yprov/error.hpp"
#include "yprov/graph_tools.hpp"
#include "yprov/metric_store.hpp"
#include "yprov/prov_json.hpp"
#include "yprov/tracker.hpp"
#include "yprov/zarr_export.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <cstdlib>
#include <map>
#include <ostream>

namespace yprov {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int exit_code_for(ErrorCode code)
{
    switch (code) {
    case ErrorCode::InvalidArgument:
        return kExitUsage;
    case ErrorCode::IoError:
    case ErrorCode::CorruptFile:
    case ErrorCode::LayoutError:
    case ErrorCode::AlreadyExists:
    case ErrorCode::MalformedManifest:
        return kExitIo;
    default:
        return kExitFindings;
    }
}

/// Relative run directories that do not exist as given are looked up under $YPROV_ROOT.
fs::path resolve_run_dir(const std::string& given)
{
    const fs::path path(given);
    std::error_code ec;
    if (path.is_absolute() || fs::exists(path, ec)) {
        return path;
    }
    if (const char* root = std::getenv(std::string(kRootEnvVar).c_str()); root && *root) {
        return fs::path(root) / path;
    }
    return path;
}

struct Args
{
    std::string file;
    std::string output;
    std::string left;
    std::string right;
    std::vector<std::string> inputs;
    std::vector<std::string> labels;
    std::string run_dir;
    std::string series;
    std::string context;
    std::string format = "zarr";
    bool json_output = false;
    bool csv = false;
};

int cmd_validate(const Args& args, std::ostream& out, std::ostream& err)
{
    const auto bytes = read_file(args.file);
    ParsedDocument parsed;
    try {
        parsed = parse_unchecked(bytes);
    } catch (const Error& e) {
        err << args.file << ": " << e.what() << "\n";
        return kExitFindings;
    }
    const auto violations = parsed.document.validate();
    for (const auto& v : violations) {
        out << to_string(v.kind) << "\t" << v.subject << "\t" << v.detail << "\n";
    }
    return violations.empty() ? kExitOk : kExitFindings;
}

int cmd_graph(const Args& args, std::ostream& out, std::ostream&)
{
    const auto dot = to_dot(load_document(args.file).document);
    if (args.output.empty()) {
        out << dot.text;
    } else {
        write_file_atomic(args.output, dot.text);
    }
    return kExitOk;
}

int cmd_diff(const Args& args, std::ostream& out, std::ostream&)
{
    const auto result = diff(resolve_run_dir(args.left), resolve_run_dir(args.right));
    if (args.json_output) {
        out << canonical_dump(to_json(result)) << "\n";
    } else {
        out << render_table(result);
    }
    return result.empty() ? kExitOk : kExitFindings;
}

int cmd_merge(const Args& args, std::ostream&, std::ostream&)
{
    std::vector<ProvDocument> docs;
    for (const auto& input : args.inputs) {
        docs.push_back(load_document(input).document);
    }
    const auto merged = merge(docs, args.labels);
    save_document(args.output, merged);
    return kExitOk;
}

int cmd_metrics(const Args& args, std::ostream& out, std::ostream&)
{
    const auto store = StoreReader::open(resolve_run_dir(args.run_dir) / kStoreFile);
    const auto context = Context(args.context).tag();
    const auto samples = store.read(args.series, context);
    if (args.csv) {
        out << "step,epoch,timestamp,value\n";
        for (const auto& s : samples) {
            out << s.step << "," << s.epoch << "," << s.timestamp << "," << format_double(s.value) << "\n";
        }
    } else {
        out << "step\tepoch\ttimestamp\tvalue\n";
        for (const auto& s : samples) {
            out << s.step << "\t" << s.epoch << "\t" << format_rfc3339(s.timestamp) << "\t" << format_double(s.value)
                << "\n";
        }
    }
    return kExitOk;
}

int cmd_convert(const Args& args, std::ostream& out, std::ostream& err)
{
    if (args.format != "zarr") {
        err << "unsupported target format '" << args.format << "'\n";
        return kExitUsage;
    }
    const auto store = StoreReader::open(resolve_run_dir(args.run_dir) / kStoreFile);
    export_zarr(store, args.output);
    out << args.output << "\n";
    return kExitOk;
}

int cmd_pack(const Args& args, std::ostream& out, std::ostream&)
{
    out << pack(resolve_run_dir(args.run_dir)).string() << "\n";
    return kExitOk;
}

int cmd_verify(const Args& args, std::ostream& out, std::ostream&)
{
    const auto violations = verify(resolve_run_dir(args.run_dir));
    for (const auto& v : violations) {
        out << to_string(v.issue) << "\t" << v.path << "\t" << v.detail << "\n";
    }
    return violations.empty() ? kExitOk : kExitFindings;
}

int cmd_stats(const Args& args, std::ostream& out, std::ostream&)
{
    const auto doc = parse_unchecked(read_file(args.file)).document;
    std::map<std::string, std::size_t> records;
    for (const auto kind : {RecordKind::Entity, RecordKind::Activity, RecordKind::Agent}) {
        records[std::string(to_string(kind))] = 0;
    }
    for (const auto& record : doc.records()) {
        ++records[std::string(to_string(record.kind))];
    }
    std::map<std::string, std::size_t> relations;
    for (const auto kind : kAllRelationKinds) {
        relations[std::string(to_string(kind))] = 0;
    }
    for (const auto& relation : doc.relations()) {
        ++relations[std::string(to_string(relation.kind))];
    }
    if (args.json_output) {
        out << canonical_dump(json{{"records", records},
                                   {"relations", relations},
                                   {"total_records", doc.records().size()},
                                   {"total_relations", doc.relations().size()}})
            << "\n";
        return kExitOk;
    }
    out << "records\t" << doc.records().size() << "\n";
    for (const auto& [kind, count] : records) {
        out << "  " << kind << "\t" << count << "\n";
    }
    out << "relations\t" << doc.relations().size() << "\n";
    for (const auto& [kind, count] : relations) {
        out << "  " << kind << "\t" << count << "\n";
    }
    return kExitOk;
}

}  // namespace

int run_cli(std::span<const std::string> argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Provenance tools for tracked ML runs", "yprov"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kLibraryVersion));
    Args args;

    auto* validate = app.add_subcommand("validate", "Check a PROV-JSON document for integrity violations");
    validate->add_option("file", args.file, "provenance.json")->required();

    auto* graph = app.add_subcommand("graph", "Render a document as a Graphviz DOT digraph");
    graph->add_option("file", args.file, "provenance.json")->required();
    graph->add_option("-o,--output", args.output, "Write DOT here instead of stdout");

    auto* diff_cmd = app.add_subcommand("diff", "Compare parameters, final metric values and artifacts of two runs");
    diff_cmd->add_option("left", args.left, "Run directory")->required();
    diff_cmd->add_option("right", args.right, "Run directory")->required();
    diff_cmd->add_flag("--json", args.json_output, "Machine-readable output");

    auto* merge_cmd = app.add_subcommand("merge", "Combine per-rank documents of one experiment");
    merge_cmd->add_option("-o,--output", args.output, "Merged document")->required();
    merge_cmd->add_option("inputs", args.inputs, "Input documents")->required();
    merge_cmd->add_option("--labels", args.labels, "Rank labels, one per input")->delimiter(',');

    auto* metrics = app.add_subcommand("metrics", "Dump the samples of one metric series");
    metrics->add_option("run_dir", args.run_dir, "Run directory")->required();
    metrics->add_option("--series", args.series, "Metric name")->required();
    metrics->add_option("--context", args.context, "Context tag")->required();
    metrics->add_flag("--csv", args.csv, "CSV with epoch-millisecond timestamps");

    auto* convert = app.add_subcommand("convert", "Export the metric store to another layout");
    convert->add_option("run_dir", args.run_dir, "Run directory")->required();
    convert->add_option("--to", args.format, "Target format")->required();
    convert->add_option("-o,--output", args.output, "Output directory")->required();

    auto* pack_cmd = app.add_subcommand("pack", "Write an RO-Crate manifest for a run directory");
    pack_cmd->add_option("run_dir", args.run_dir, "Run directory")->required();

    auto* verify_cmd = app.add_subcommand("verify", "Check a run directory against its RO-Crate manifest");
    verify_cmd->add_option("run_dir", args.run_dir, "Run directory")->required();

    auto* stats = app.add_subcommand("stats", "Count records and relations by kind");
    stats->add_option("file", args.file, "provenance.json")->required();
    stats->add_flag("--json", args.json_output, "Machine-readable output");

    std::vector<std::string> reversed(argv.rbegin(), argv.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << kLibraryVersion << "\n";
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "yprov: " << e.what() << "\n";
        err << "run 'yprov --help' for usage\n";
        return kExitUsage;
    }

    const std::pair<CLI::App*, int (*)(const Args&, std::ostream&, std::ostream&)> handlers[] = {
        {validate, cmd_validate}, {graph, cmd_graph},     {diff_cmd, cmd_diff},     {merge_cmd, cmd_merge},
        {metrics, cmd_metrics},   {convert, cmd_convert}, {pack_cmd, cmd_pack},     {verify_cmd, cmd_verify},
        {stats, cmd_stats}};
    try {
        for (const auto& [sub, handler] : handlers) {
            if (sub->parsed()) {
                return handler(args, out, err);
            }
        }
    } catch (const Error& e) {
        err << "yprov: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        err << "yprov: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitUsage;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) {
        args.emplace_back(argv[i]);
    }
    return run_cli(args, out, err);
}

}  // namespace yprov
