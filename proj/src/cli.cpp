#include "sosg/cli.hpp"

#include "sosg/anomaly_detector.hpp"
#include "sosg/graph_builder.hpp"
#include "sosg/graph_io.hpp"
#include "sosg/parallel.hpp"
#include "sosg/query_engine.hpp"
#include "sosg/record_ingest.hpp"
#include "sosg/synth_workload.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace sosg {

namespace fs = std::filesystem;

namespace {

int exit_code_for(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::Input:
    case ErrorKind::Corrupt: return kExitInput;
    case ErrorKind::Config: return kExitConfig;
    case ErrorKind::Query: return kExitQuery;
    case ErrorKind::Invariant:
    case ErrorKind::Internal: return kExitInternal;
    }
    return kExitInternal;
}

enum class Format { Json, Dot, Table };

struct Options {
    std::string config, corpus, graph, report;
    std::string format = "json";
    std::optional<std::uint64_t> k;
    std::optional<double> r;
    std::optional<unsigned> max_depth;
    std::uint64_t seed = 1;
    bool fail_on_anomaly = false;
    bool force = false;
    bool timings = false;
    unsigned threads = 0;

    // gen
    FleetSpec fleet;
    std::vector<std::string> faults;

    // query
    std::string entity, dtype, from, to, to_dtype, via, at, host, vm, subnet;
    std::size_t limit = 100;
};

Format parse_format(const std::string& s) {
    if (s == "json") return Format::Json;
    if (s == "dot") return Format::Dot;
    return Format::Table;
}

std::optional<Micros> parse_at(const std::string& s) {
    if (s.empty()) return std::nullopt;
    auto t = parse_iso8601(s);
    if (!t) fail(ErrorKind::Config, "--at: not an ISO-8601 timestamp: " + s);
    return t;
}

/// Typed options accept a bare value and supply the dtype.
std::string typed(const std::string& sel, const char* dtype) {
    return sel.find('=') == std::string::npos ? std::string(dtype) + "=" + sel : sel;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f << text;
    f.close();
    if (!f) fail(ErrorKind::Input, "cannot write " + path);
}

IngestConfig load_config(const Options& o) {
    if (o.config.empty()) return IngestConfig::defaults();
    if (!fs::is_regular_file(o.config)) fail(ErrorKind::Input, "config not found: " + o.config);
    return IngestConfig::load(o.config);
}

StateGraph open_graph(const Options& o) {
    if (!fs::is_directory(o.graph)) fail(ErrorKind::Input, "graph directory not found: " + o.graph);
    return load_graph(o.graph);
}

int cmd_gen(const Options& o, std::ostream& out) {
    Corpus c = generate(o.fleet, o.seed);
    for (const auto& name : o.faults) {
        auto kind = parse_fault_kind(name);
        if (!kind) fail(ErrorKind::Config, "unknown fault kind: " + name);
        FaultInjection f;
        f.kind = *kind;
        inject(c, f, o.seed);
    }
    write_corpus(c, o.corpus, o.force);
    nlohmann::ordered_json j;
    j["corpus"] = o.corpus;
    j["seed"] = o.seed;
    j["vms"] = c.vms.size();
    nlohmann::ordered_json faults = nlohmann::ordered_json::array();
    for (const auto& f : c.injected) faults.push_back({{"kind", std::string(to_string(f.spec.kind))}, {"target_vm", f.target_vm}});
    j["injected"] = faults;
    out << j.dump(2) << "\n";
    return kExitOk;
}

int cmd_build(const Options& o, std::ostream& out, std::ostream& err) {
    if (!fs::is_directory(o.corpus)) fail(ErrorKind::Input, "corpus directory not found: " + o.corpus);
    if (fs::exists(o.graph) && !o.force) {
        fail(ErrorKind::Config, "graph directory exists: " + o.graph + " (use --force to replace it)");
    }
    IngestConfig cfg = load_config(o);
    BuildOptions bo;
    bo.registry = cfg.registry;
    if (cfg.identifiers) bo.policy = IdentifierPolicy::from_json(*cfg.identifiers);
    bo.threads = o.threads;
    IngestResult ing = ingest_corpus(o.corpus, cfg, o.threads);
    for (const auto& f : ing.unmatched_files) err << "warning: no rule for " << f << "\n";
    BuildResult br = build_graph(ing.records, bo);
    save_graph(br.graph, o.graph, o.force);

    nlohmann::ordered_json j = br.report.to_json(o.timings);
    nlohmann::ordered_json ingest;
    ingest["total"] = ing.stats.total;
    ingest["parsed"] = ing.stats.parsed;
    ingest["skipped_malformed"] = ing.stats.skipped_malformed;
    ingest["skipped_no_timestamp"] = ing.stats.skipped_no_timestamp;
    ingest["unmatched_files"] = ing.unmatched_files;
    j["ingest"] = ingest;
    std::string text = j.dump(2) + "\n";
    if (!o.report.empty()) write_text(o.report, text);
    out << text;
    return kExitOk;
}

void print_vertices(const StateGraph& g, const std::vector<Index>& vs, Format f, std::ostream& out) {
    switch (f) {
    case Format::Json: out << vertices_to_json(g, vs); break;
    case Format::Dot: out << vertices_to_dot(g, vs); break;
    case Format::Table: out << vertices_to_table(g, vs); break;
    }
}

int cmd_query(const std::string& which, const Options& o, std::ostream& out) {
    StateGraph g = open_graph(o);
    Format f = parse_format(o.format);
    auto at = parse_at(o.at);
    TypeConstraints via = parse_type_constraints(o.via);
    if (which == "latest") {
        Index e = resolve_entity(g, o.entity);
        std::vector<Index> vs;
        if (auto s = latest_state(g, e, o.dtype, at)) vs.push_back(*s);
        print_vertices(g, vs, f, out);
    } else if (which == "path") {
        PathQuery q;
        q.from = resolve_entity(g, o.from);
        if (!o.to.empty() == !o.to_dtype.empty()) fail(ErrorKind::Config, "path: give exactly one of --to, --to-dtype");
        if (!o.to.empty()) {
            q.to = resolve_entity(g, o.to);
        } else {
            q.to = TargetDtype{o.to_dtype};
        }
        if (o.max_depth) q.max_depth = *o.max_depth;
        q.type_constraints = via;
        q.at_time = at;
        q.limit = o.limit;
        PathResult r = find_paths(g, q);
        switch (f) {
        case Format::Json: out << paths_to_json(g, r); break;
        case Format::Dot: out << paths_to_dot(g, r); break;
        case Format::Table: out << paths_to_table(g, r); break;
        }
    } else if (which == "related") {
        Index e = resolve_entity(g, o.entity);
        print_vertices(g, list_related(g, e, o.dtype, o.max_depth.value_or(8), via, at), f, out);
    } else if (which == "affected-vms") {
        print_vertices(g, affected_vms(g, resolve_entity(g, typed(o.host, kHostDtype)), at), f, out);
    } else if (which == "cephfiles-for-vm") {
        print_vertices(g, list_cephfiles_for_vm(g, resolve_entity(g, typed(o.vm, kVmDtype)), at), f, out);
    } else if (which == "vms-in-subnet") {
        print_vertices(g, list_vms_in_subnet(g, resolve_entity(g, typed(o.subnet, kSubnetDtype)), at), f, out);
    }
    return kExitOk;
}

int cmd_detect(const Options& o, std::ostream& out) {
    StateGraph g = open_graph(o);
    DetectionParams p;
    p.k = o.k;
    p.r = o.r;
    if (o.max_depth) p.max_bfs_depth = *o.max_depth;
    p.threads = o.threads;
    if (p.k && *p.k == 0) fail(ErrorKind::Config, "--k must be positive");
    if (p.r && !(*p.r >= 0.0 && *p.r <= 1.0)) fail(ErrorKind::Config, "--r must lie in [0, 1]");
    AnomalyReport rep = run_detection(g, p);
    std::string text;
    switch (parse_format(o.format)) {
    case Format::Json: text = report_to_json(g, rep); break;
    case Format::Dot: text = report_to_dot(g, rep); break;
    case Format::Table: text = report_to_table(g, rep); break;
    }
    if (!o.report.empty()) write_text(o.report, text);
    out << text;
    return o.fail_on_anomaly && !rep.result.flagged().empty() ? kExitAnomaly : kExitOk;
}

}  // namespace

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"System operation state graphs over OpenStack/Ceph operations data", "sosg"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "sosg 0.1");
    app.add_option("--threads", o.threads, "Worker threads (0: all cores, capped by SOSG_THREADS)");

    auto* gen = app.add_subcommand("gen", "Generate a synthetic corpus with ground truth");
    gen->add_option("--corpus", o.corpus, "Output corpus directory")->required();
    gen->add_option("--seed", o.seed, "Generator seed");
    gen->add_option("--vms", o.fleet.n_vms, "Live VMs")->check(CLI::PositiveNumber);
    gen->add_option("--hosts", o.fleet.n_hosts, "Compute hosts")->check(CLI::PositiveNumber);
    gen->add_option("--storage-hosts", o.fleet.n_storage_hosts, "Ceph OSD hosts")->check(CLI::PositiveNumber);
    gen->add_option("--hours", o.fleet.duration_hours, "Observation window")->check(CLI::PositiveNumber);
    gen->add_option("--deleted-fraction", o.fleet.deleted_fraction, "VMs deleted before the window, per live VM");
    gen->add_option("--fault", o.faults, "OrphanOvsPorts | DbPhysicalMismatch | FailedMigration (repeatable)");
    gen->add_flag("--force", o.force, "Replace an existing corpus directory");

    auto* build = app.add_subcommand("build", "Ingest a corpus and write the state graph");
    build->add_option("--corpus", o.corpus, "Corpus directory")->required();
    build->add_option("--graph", o.graph, "Output graph directory")->required();
    build->add_option("--config", o.config, "Source mapping and identifier policy (JSON)");
    build->add_option("--report", o.report, "Also write the build report here");
    build->add_flag("--timings", o.timings, "Include per-step wall times in the report");
    build->add_flag("--force", o.force, "Replace an existing graph directory");

    const std::vector<std::string> formats{"json", "dot", "table"};
    auto* query = app.add_subcommand("query", "Query a built graph");
    query->require_subcommand(1);
    auto graph_opts = [&](CLI::App* c) {
        c->add_option("--graph", o.graph, "Graph directory")->required();
        c->add_option("--format", o.format, "Output format")->check(CLI::IsMember(formats));
        c->add_option("--at", o.at, "Only consider states at or before this ISO-8601 instant");
    };
    auto* q_latest = query->add_subcommand("latest", "Latest state of an entity from one source");
    graph_opts(q_latest);
    q_latest->add_option("--entity", o.entity, "dtype=value or value")->required();
    q_latest->add_option("--dtype", o.dtype, "Source dtype, e.g. Libvirt")->required();
    auto* q_path = query->add_subcommand("path", "Shortest entity-bridge-entity paths");
    graph_opts(q_path);
    q_path->add_option("--from", o.from, "Start entity")->required();
    q_path->add_option("--to", o.to, "Target entity");
    q_path->add_option("--to-dtype", o.to_dtype, "Every entity of this dtype is a target");
    q_path->add_option("--max-depth", o.max_depth, "Entity hops");
    q_path->add_option("--via", o.via, "Allowed bridge dtypes per hop, e.g. Cephfile|Cephimage|DB");
    q_path->add_option("--limit", o.limit, "Maximum number of paths");
    auto* q_related = query->add_subcommand("related", "Entities of a dtype reachable from an entity");
    graph_opts(q_related);
    q_related->add_option("--entity", o.entity, "Start entity")->required();
    q_related->add_option("--dtype", o.dtype, "Target entity dtype")->required();
    q_related->add_option("--max-depth", o.max_depth, "Entity hops");
    q_related->add_option("--via", o.via, "Allowed bridge dtypes per hop");
    auto* q_affected = query->add_subcommand("affected-vms", "VMs running on or stored on a host");
    graph_opts(q_affected);
    q_affected->add_option("--host", o.host, "Host name or selector")->required();
    auto* q_files = query->add_subcommand("cephfiles-for-vm", "Ceph files holding a VM's image blocks");
    graph_opts(q_files);
    q_files->add_option("--vm", o.vm, "VM uuid or selector")->required();
    auto* q_subnet = query->add_subcommand("vms-in-subnet", "VMs with a port in a subnet");
    graph_opts(q_subnet);
    q_subnet->add_option("--subnet", o.subnet, "Subnet id or selector")->required();

    auto* detect_cmd = app.add_subcommand("detect", "Flag VMs whose dependency subgraphs have few similar peers");
    detect_cmd->add_option("--graph", o.graph, "Graph directory")->required();
    detect_cmd->add_option("--format", o.format, "Output format")->check(CLI::IsMember(formats));
    detect_cmd->add_option("--k", o.k, "Minimum neighbours within r");
    detect_cmd->add_option("--r", o.r, "Distance radius");
    detect_cmd->add_option("--max-depth", o.max_depth, "Subgraph BFS depth");
    detect_cmd->add_option("--report", o.report, "Also write the report here");
    detect_cmd->add_flag("--fail-on-anomaly", o.fail_on_anomaly, "Exit 5 when anything is flagged");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e, out, err);  // --help, --version
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    }

    try {
        if (*gen) return cmd_gen(o, out);
        if (*build) return cmd_build(o, out, err);
        if (*detect_cmd) return cmd_detect(o, out);
        for (auto* sub : query->get_subcommands()) return cmd_query(sub->get_name(), o, out);
    } catch (const Error& e) {
        err << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitInternal;
}

}  // namespace sosg
