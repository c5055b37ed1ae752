// Acceptance gate: one PASS/FAIL line per criterion, exit 0 iff all pass.

#include "sosg/anomaly_detector.hpp"
#include "sosg/cli.hpp"
#include "sosg/graph_builder.hpp"
#include "sosg/graph_io.hpp"
#include "sosg/query_engine.hpp"
#include "sosg/synth_workload.hpp"

#include "oracles.hpp"
#include "support.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

using namespace sosg;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fixed(double x, int digits = 2) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

struct Outcome {
    bool pass = true;
    std::vector<std::string> notes;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            notes.push_back("FAILED " + what);
        }
    }
    void note(const std::string& s) { notes.push_back(s); }
};

std::string record_errors;

int run_cli_quiet(std::vector<std::string> args) {
    args.insert(args.begin(), "sosg");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    argv.push_back(nullptr);
    std::ostringstream out, err;
    int code = run_cli(static_cast<int>(args.size()), argv.data(), out, err);
    if (code != 0) record_errors += err.str();
    return code;
}

std::size_t count_lines(const std::string& text, const std::vector<std::string>& needles) {
    std::size_t n = 0;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) {
        bool all = true;
        for (const auto& s : needles) all = all && l.find(s) != std::string::npos;
        n += all;
    }
    return n;
}

// ------------------------------------------------------------------ 1

Outcome fig1() {
    Outcome o;
    auto t0 = Clock::now();
    fs::path dir = support::fixtures() / "fig1";
    IngestConfig cfg = IngestConfig::load(dir / "config.json");
    BuildOptions bo;
    bo.registry = cfg.registry;
    bo.policy = IdentifierPolicy::from_json(*cfg.identifiers);
    StateGraph g = build_graph(ingest_corpus(dir / "corpus", cfg, 1).records, bo).graph;
    double secs = since(t0);

    o.require(g.count(VertexCategory::Event) == 2 && g.count(VertexCategory::State) == 2 &&
                  g.count(VertexCategory::Entity) == 2,
              "vertex counts");
    o.require(g.count(EdgeKind::Spatial) == 6 && g.count(EdgeKind::Temporal) == 2, "edge counts");
    std::vector<Index> ev, st;
    for (Index v = 0; v < g.vertex_count(); ++v) {
        if (g.vertex(v).category == VertexCategory::Event) ev.push_back(v);
        if (g.vertex(v).category == VertexCategory::State) st.push_back(v);
    }
    auto by_ts = [&](Index a, Index b) { return *g.vertex(a).ts < *g.vertex(b).ts; };
    std::sort(ev.begin(), ev.end(), by_ts);
    std::sort(st.begin(), st.end(), by_ts);
    Index e3 = g.find_entity("uuid", "xxx-xx1"), e6 = g.find_entity("ip", "10.1.0.12");
    if (ev.size() == 2 && st.size() == 2 && e3 != StateGraph::npos && e6 != StateGraph::npos) {
        auto id = [&](Index i) { return g.vertex(i).id; };
        std::vector<Edge> want{
            {id(e3), id(ev[0]), EdgeKind::Spatial}, {id(e3), id(ev[1]), EdgeKind::Spatial},   // a, b
            {id(e3), id(st[0]), EdgeKind::Spatial}, {id(e3), id(st[1]), EdgeKind::Spatial},   // c, d
            {id(e6), id(ev[1]), EdgeKind::Spatial}, {id(e6), id(st[1]), EdgeKind::Spatial},   // e, f
            {id(ev[0]), id(ev[1]), EdgeKind::Temporal}, {id(st[0]), id(st[1]), EdgeKind::Temporal},  // g, h
        };
        std::sort(want.begin(), want.end());
        o.require(g.edges() == want, "labelled edge set a-h");
    } else {
        o.require(false, "labelled vertices present");
    }
    o.require(secs < 1.0, "runtime < 1 s");
    o.note("2 Event + 2 State + 2 Entity, 6 spatial + 2 temporal, " + fixed(secs, 3) + " s");
    return o;
}

// ------------------------------------------------------------------ 2

Outcome construction() {
    Outcome o;
    auto t0 = Clock::now();
    fs::path dir = support::scratch("accept_construction");
    FleetSpec spec;
    spec.duration_hours = 1.5;
    write_corpus(generate(spec, 7), dir);
    IngestResult in = ingest_corpus(dir, IngestConfig::defaults(), 4);
    const auto& records = in.records;
    BuildOptions serial_opts, parallel_opts;
    serial_opts.threads = 1;
    parallel_opts.threads = 4;
    BuildResult serial = build_graph(records, serial_opts);
    BuildResult parallel = build_graph(records, parallel_opts);
    const StateGraph& g = parallel.graph;
    o.require(records.size() >= 100000, "at least 100,000 records");

    // Record <-> vertex bijection.
    SourceRegistry reg = SourceRegistry::defaults();
    std::set<VertexId> ids;
    bool bijective = g.count(VertexCategory::State) + g.count(VertexCategory::Event) == records.size();
    for (const auto& r : records) {
        Vertex v;
        v.category = reg.category_of(r.source);
        v.dtype = r.source;
        v.ts = r.timestamp;
        v.props = r.props;
        v.id = compute_vertex_id(v, r.origin);
        Index i = g.index_of(v.id);
        bijective = bijective && ids.insert(v.id).second && i != StateGraph::npos && g.vertex(i) == v;
    }
    o.require(bijective, "record <-> vertex bijection");

    // Entity uniqueness against the accepted (key, value) pairs.
    std::set<std::string> accepted, free_text;
    for (const auto& s : parallel.report.identifiers) {
        if (s.accepted) accepted.insert(s.key);
        if (s.shape == ShapeClass::FreeText) free_text.insert(s.key);
    }
    std::set<std::pair<std::string, std::string>> want_entities, got_entities;
    for (const auto& r : records)
        for (const auto& [k, v] : r.props)
            if (accepted.count(k)) want_entities.emplace(k, v);
    bool unique = true;
    for (const auto& v : g.vertices())
        if (v.category == VertexCategory::Entity) unique = unique && got_entities.emplace(v.dtype, v.value()).second;
    o.require(unique && got_entities == want_entities, "one entity per accepted (key, value)");

    bool no_ee = true;
    for (std::size_t e = 0; e < g.edge_count(); ++e) {
        no_ee = no_ee && !(g.vertex(g.edge_src(e)).category == VertexCategory::Entity &&
                           g.vertex(g.edge_dst(e)).category == VertexCategory::Entity);
    }
    o.require(no_ee, "no Entity-Entity edges");

    std::vector<Edge> spatial, temporal;
    for (const auto& e : g.edges()) (e.kind == EdgeKind::Spatial ? spatial : temporal).push_back(e);
    std::set<Edge> want_spatial = oracle::expected_spatial_edges(g, free_text);
    o.require(spatial.size() == want_spatial.size() && std::set<Edge>(spatial.begin(), spatial.end()) == want_spatial,
              "spatial edges match value matching");
    o.require(temporal == oracle::expected_temporal_edges(g), "per-entity temporal chains");

    o.require(serialize_vertices(serial.graph) == serialize_vertices(g) &&
                  serialize_edges(serial.graph) == serialize_edges(g),
              "serial and 4-thread builds byte-identical");
    double secs = since(t0);
    o.require(secs <= 120.0, "runtime <= 120 s");
    fs::remove_all(dir);
    o.note(std::to_string(records.size()) + " records, " + std::to_string(g.vertex_count()) + " vertices, " +
           std::to_string(g.edge_count()) + " edges, " + fixed(secs, 1) + " s");
    return o;
}

// ------------------------------------------------------------- 3 and 4

struct DefaultFleet {
    Corpus corpus;
    fs::path dir;
    StateGraph graph;
};

DefaultFleet& default_fleet() {
    static DefaultFleet f = [] {
        DefaultFleet d;
        d.corpus = generate(FleetSpec{}, 7);
        d.dir = support::scratch("accept_default");
        write_corpus(d.corpus, d.dir);
        d.graph = build_graph(ingest_corpus(d.dir, IngestConfig::defaults(), 0).records).graph;
        return d;
    }();
    return f;
}

Outcome data_mix() {
    Outcome o;
    DefaultFleet& f = default_fleet();
    std::map<std::string, std::uint64_t> bytes;
    std::uint64_t total = 0;
    for (const auto& entry : fs::recursive_directory_iterator(f.dir)) {
        if (!entry.is_regular_file()) continue;
        std::string rel = fs::relative(entry.path(), f.dir).generic_string();
        if (rel.find('/') == std::string::npos) continue;  // ground_truth.json
        bytes[rel.substr(0, rel.find('/'))] += entry.file_size();
        total += entry.file_size();
    }
    auto frac = [&](std::initializer_list<const char*> srcs) {
        double n = 0;
        for (const char* s : srcs) n += static_cast<double>(bytes[s]);
        return n / static_cast<double>(total);
    };
    const MixTargets m;
    const struct {
        const char* name;
        double got, want;
    } rows[] = {{"Ovs", frac({"Ovs"}), m.ovs},
                {"logs", frac({"Log", "Cephlog"}), m.logs},
                {"Cephfile", frac({"Cephfile"}), m.cephfile},
                {"Libvirt", frac({"Libvirt"}), m.libvirt}};
    std::string mix;
    for (const auto& r : rows) {
        o.require(std::abs(r.got - r.want) <= 0.05, std::string(r.name) + " within 0.05");
        mix += std::string(mix.empty() ? "" : " ") + r.name + "=" + fixed(r.got, 3);
    }
    const StateGraph& g = f.graph;
    std::size_t events = g.count(VertexCategory::Event), states = g.count(VertexCategory::State),
                entities = g.count(VertexCategory::Entity);
    o.require(events > states && events > entities, "Event is the most numerous category");
    o.note(mix + "; Event " + std::to_string(events) + ", State " + std::to_string(states) + ", Entity " +
           std::to_string(entities));
    return o;
}

Outcome fig2_path() {
    Outcome o;
    DefaultFleet& f = default_fleet();
    const VmModel& vm = f.corpus.vms.front();
    const std::string host = f.corpus.storage_hosts[vm.images.front().objects.front().replica_hosts.front()];
    const StateGraph& g = f.graph;

    auto t0 = Clock::now();
    PathQuery q;
    q.from = resolve_entity(g, "host=" + host);
    q.to = resolve_entity(g, "uuid=" + vm.uuid);
    PathResult r = find_paths(g, q);
    double secs = since(t0);

    auto has_chain = [&](const PathResult& res) {
        for (const auto& p : res.paths) {
            std::vector<std::string> bridges;
            for (std::size_t i = 1; i < p.size(); i += 2) bridges.push_back(g.vertex(p[i]).dtype);
            if (bridges == std::vector<std::string>{"Cephfile", "Cephimage", "DB"}) return true;
        }
        return false;
    };
    o.require(has_chain(r), "a path through Cephfile -> Cephimage -> DB");
    o.require(secs <= 1.0, "query latency <= 1 s");

    // The same query through the command line, on the saved graph.
    fs::path graph_dir = support::scratch("accept_fig2_graph");
    save_graph(g, graph_dir);
    std::vector<std::string> args{"sosg", "query", "path", "--graph", graph_dir.string(), "--from", "host=" + host,
                                  "--to", "uuid=" + vm.uuid, "--format", "table"};
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    std::ostringstream out, err;
    int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    o.require(code == 0 && out.str().find("[Cephfile@") != std::string::npos &&
                  out.str().find("[Cephimage@") != std::string::npos,
              "command-line query prints the chain");
    fs::remove_all(graph_dir);
    o.note(host + " -> " + vm.uuid + ": " + std::to_string(r.paths.size()) + " path(s), find_paths " +
           fixed(secs * 1000, 1) + " ms");
    return o;
}

// ------------------------------------------------------------------ 5

Outcome traversal_oracle() {
    Outcome o;
    std::mt19937_64 rng(2016);
    std::size_t queries = 0, nonempty = 0, largest = 0;
    for (int i = 0; i < 50; ++i) {
        StateGraph g = oracle::random_graph(rng, {.max_vertices = 1000});
        largest = std::max(largest, g.vertex_count());
        std::vector<Index> ents;
        for (Index v = 0; v < g.vertex_count(); ++v)
            if (g.vertex(v).category == VertexCategory::Entity) ents.push_back(v);
        for (int j = 0; j < 8; ++j) {
            PathQuery q;
            q.from = ents[rng() % ents.size()];
            if (j % 2) {
                static const char* kinds[] = {"uuid", "host", "ip", "file"};
                q.to = TargetDtype{kinds[rng() % 4]};
            } else {
                q.to = ents[rng() % ents.size()];
            }
            q.max_depth = 1 + static_cast<unsigned>(rng() % 6);
            q.limit = 1 + rng() % 200;
            if (j % 3 == 0) q.at_time = static_cast<Micros>(rng() % 20);
            if (j % 4 == 3) q.type_constraints = {{"DB", "Ovs"}};
            PathResult got = find_paths(g, q), want = oracle::brute_force_paths(g, q);
            o.require(got.paths == want.paths && got.stats.truncated == want.stats.truncated,
                      "graph " + std::to_string(i) + " query " + std::to_string(j));
            ++queries;
            nonempty += !got.paths.empty();
        }
    }
    o.note("50 graphs up to " + std::to_string(largest) + " vertices, " + std::to_string(queries) + " queries (" +
           std::to_string(nonempty) + " with paths) identical");
    return o;
}

// ------------------------------------------------------------------ 6

Outcome metric_axioms() {
    Outcome o;
    using oracle::Rational;
    TripletMultiset a, b;
    auto code = [](const char* dst) {
        TripletCode c;
        c.src = {VertexCategory::Entity, "uuid"};
        c.dst = {VertexCategory::State, dst};
        return c;
    };
    a = {{code("x"), 2}, {code("y"), 1}};
    b = {{code("x"), 1}, {code("y"), 1}, {code("z"), 1}};
    o.require(oracle::as_rational(generalized_jaccard_exact(a, b)) == Rational(1, 2) && generalized_jaccard(a, b) == 0.5,
              "worked value 0.5");
    std::mt19937_64 rng(1707);
    const int triples = 2000;
    for (int i = 0; i < triples; ++i) {
        auto x = oracle::random_multiset(rng), y = oracle::random_multiset(rng), z = oracle::random_multiset(rng);
        Rational xy = oracle::as_rational(generalized_jaccard_exact(x, y));
        Rational yx = oracle::as_rational(generalized_jaccard_exact(y, x));
        Rational yz = oracle::as_rational(generalized_jaccard_exact(y, z));
        Rational xz = oracle::as_rational(generalized_jaccard_exact(x, z));
        bool ok = oracle::as_rational(generalized_jaccard_exact(x, x)) == 0 && (xy == 0) == (x == y) && xy == yx &&
                  xy >= 0 && xy <= 1 && xz <= xy + yz && xy == oracle::exact_jaccard(x, y);
        if (!ok) o.require(false, "triple " + std::to_string(i));
        if (!ok) break;
    }
    o.note(std::to_string(triples) + " triples, exact rational comparison; d = 1/2 on the worked pair");
    return o;
}

// ------------------------------------------------------------------ 7

Outcome detection_oracle() {
    Outcome o;
    using oracle::Rational;
    std::mt19937_64 rng(1653);
    std::size_t flagged = 0, largest = 0;
    for (int pop = 0; pop < 20; ++pop) {
        std::size_t n = pop % 4 == 0 ? 200 : 2 + rng() % 199;
        largest = std::max(largest, n);
        std::vector<TripletMultiset> f(n);
        for (auto& m : f) m = oracle::random_multiset(rng, 4, 3);
        std::vector<std::vector<Rational>> d(n, std::vector<Rational>(n));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) d[i][j] = d[j][i] = oracle::exact_jaccard(f[i], f[j]);

        for (int s = 0; s < 5; ++s) {
            DetectionParams p;
            if (s > 0) p.k = 1 + rng() % 8;
            if (s > 1) p.r = static_cast<double>(rng() % 1001) / 1000.0;
            if (s == 4) p.r = 0.0;
            DetectionResult got = detect(f, p);
            Rational r = p.r ? Rational(*p.r) : oracle::nearest_rank_radius(f, kDefaultRadiusPercentile);
            std::uint64_t k = p.k ? *p.k : default_k(n);
            std::vector<std::size_t> want;
            for (std::size_t i = 0; i < n; ++i) {
                std::uint64_t near = 0;
                for (std::size_t j = 0; j < n; ++j) near += j != i && d[i][j] <= r;
                if (near < k) want.push_back(i);
            }
            o.require(got.flagged() == want && got.k == k,
                      "population " + std::to_string(pop) + " setting " + std::to_string(s));
            flagged += want.size();
        }
    }
    o.note("20 populations up to " + std::to_string(largest) + " VMs x 5 (k, r) settings identical; " +
           std::to_string(flagged) + " flags in total");
    return o;
}

// ------------------------------------------------------------------ 8

Outcome fault_injection() {
    Outcome o;
    auto t0 = Clock::now();
    std::string summary;
    for (std::uint64_t seed : {7, 11, 13, 17, 19}) {
        FleetSpec spec;
        spec.n_vms = 203;
        Corpus c = generate(spec, seed);
        inject(c, FaultInjection{FaultKind::OrphanOvsPorts}, seed * 3 + 1);
        inject(c, FaultInjection{FaultKind::DbPhysicalMismatch}, seed * 3 + 2);
        inject(c, FaultInjection{FaultKind::FailedMigration}, seed * 3 + 3);
        fs::path dir = support::scratch("accept_faults");
        write_corpus(c, dir);

        std::set<std::string> targets;
        for (const auto& f : c.injected) {
            targets.insert(f.target_vm);
            if (f.spec.kind == FaultKind::DbPhysicalMismatch) {
                std::string db = support::slurp(dir / "DB/controller/nova_triggers.log");
                std::size_t actions = count_lines(db, {f.target_vm, "\tnova.instance_actions\t", "\"reboot\""});
                std::size_t faults = count_lines(db, {f.target_vm, "\tnova.instance_faults\t", "404"});
                o.require(actions == 1707 && faults == 1704, "1,704/1,707 failed actions, seed " + std::to_string(seed));
            }
            if (f.spec.kind == FaultKind::FailedMigration) {
                std::size_t naming = 0, skipping = 0;
                for (const auto& h : c.hosts) {
                    std::string log = support::slurp(dir / "Log" / h / "nova-compute.log");
                    naming += count_lines(log, {f.target_vm});
                    skipping += count_lines(log, {f.target_vm, "skipping migration"});
                }
                o.require(naming == 1653 && skipping == 653, "653/1,653 skip lines, seed " + std::to_string(seed));
            }
        }

        StateGraph g = build_graph(ingest_corpus(dir, IngestConfig::defaults(), 0).records).graph;
        AnomalyReport rep = run_detection(g, {});
        std::set<std::string> flagged;
        for (std::size_t i : rep.result.flagged()) flagged.insert(g.vertex(rep.roots[i]).value());
        std::size_t hits = 0;
        for (const auto& t : targets) hits += flagged.count(t);
        o.require(hits == 3, "recall 3/3, seed " + std::to_string(seed));
        o.require(flagged.size() <= 10, "at most 10 flagged, seed " + std::to_string(seed));
        summary += (summary.empty() ? "" : ", ") + std::string("seed ") + std::to_string(seed) + ": " +
                   std::to_string(hits) + "/3 of " + std::to_string(flagged.size()) + " (k=" +
                   std::to_string(rep.result.k) + ")";
        fs::remove_all(dir);
    }
    double secs = since(t0);
    o.require(secs <= 300.0, "runtime <= 5 min");
    o.note(summary + "; " + fixed(secs, 1) + " s");
    return o;
}

// ------------------------------------------------------------------ 9

Outcome determinism() {
    Outcome o;
    fs::path root = support::scratch("accept_determinism");
    fs::create_directories(root);
    for (const char* run : {"a", "b"}) {
        fs::path d = root / run;
        std::string threads = std::string(run) == "a" ? "1" : "4";
        std::vector<std::string> gen{"gen", "--corpus", (d / "corpus").string(), "--seed", "7"};
        for (const char* f : {"OrphanOvsPorts", "DbPhysicalMismatch", "FailedMigration"}) {
            gen.push_back("--fault");
            gen.push_back(f);
        }
        o.require(run_cli_quiet(gen) == 0, std::string("gen ") + run);
        o.require(run_cli_quiet({"--threads", threads, "build", "--corpus", (d / "corpus").string(), "--graph",
                                 (d / "graph").string(), "--report", (d / "build.json").string()}) == 0,
                  std::string("build ") + run);
        o.require(run_cli_quiet({"--threads", threads, "detect", "--graph", (d / "graph").string(), "--report",
                                 (d / "detect.json").string()}) == 0,
                  std::string("detect ") + run);
    }
    std::size_t compared = 0;
    for (const char* f : {"graph/manifest.json", "graph/vertices.jsonl", "graph/edges.jsonl", "build.json",
                          "detect.json", "corpus/ground_truth.json"}) {
        std::string a = support::slurp(root / "a" / f), b = support::slurp(root / "b" / f);
        o.require(!a.empty() && a == b, std::string(f) + " identical");
        compared += a.size();
    }
    fs::remove_all(root);
    o.note("two gen -> build -> detect runs (1 vs 4 threads), " + std::to_string(compared) + " bytes compared");
    return o;
}

}  // namespace

int main() {
    const std::pair<const char*, std::function<Outcome()>> criteria[] = {
        {"Fig. 1 fixture structure", fig1},
        {"construction invariants on 100k records", construction},
        {"data mix and event majority", data_mix},
        {"Fig. 2 storage-host to VM path", fig2_path},
        {"traversal equals exhaustive enumeration", traversal_oracle},
        {"generalized Jaccard metric axioms", metric_axioms},
        {"detection equals brute force", detection_oracle},
        {"fault injection end to end", fault_injection},
        {"pipeline determinism", determinism},
    };
    int passed = 0, n = 0;
    for (const auto& [name, fn] : criteria) {
        ++n;
        Outcome o;
        auto t0 = Clock::now();
        try {
            o = fn();
        } catch (const std::exception& e) {
            o.pass = false;
            o.note(std::string("exception: ") + e.what());
        }
        std::string detail;
        for (const auto& s : o.notes) detail += (detail.empty() ? "" : "; ") + s;
        std::cout << (o.pass ? "PASS" : "FAIL") << " " << n << " " << name << " [" << fixed(since(t0), 1) << " s] "
                  << detail << std::endl;
        passed += o.pass;
    }
    if (!record_errors.empty()) std::cerr << record_errors;
    fs::remove_all(default_fleet().dir);
    std::cout << passed << "/" << n << " criteria passed" << std::endl;
    return passed == n ? 0 : 1;
}
