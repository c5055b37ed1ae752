#include "sosg/graph_builder.hpp"
#include "sosg/query_engine.hpp"

#include "oracles.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace sosg;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    return ErrorKind::Internal;
}

std::vector<Index> entities_of(const StateGraph& g) {
    std::vector<Index> out;
    for (Index v = 0; v < g.vertex_count(); ++v)
        if (g.vertex(v).category == VertexCategory::Entity) out.push_back(v);
    return out;
}

// Structural validity of one returned path under a query.
void expect_valid(const StateGraph& g, const PathQuery& q, const Path& p) {
    ASSERT_EQ(p.size() % 2, 1u);
    EXPECT_EQ(p.front(), q.from);
    EXPECT_LE((p.size() - 1) / 2, q.max_depth);
    std::set<Index> seen;
    for (std::size_t i = 0; i < p.size(); i += 2) {
        EXPECT_EQ(g.vertex(p[i]).category, VertexCategory::Entity);
        EXPECT_TRUE(seen.insert(p[i]).second) << "entity repeats";
    }
    for (std::size_t i = 1; i < p.size(); i += 2) {
        const Vertex& b = g.vertex(p[i]);
        std::size_t hop = i / 2;
        auto adj = oracle::spatial_set(g, p[i]);
        EXPECT_TRUE(adj.count(p[i - 1]) && adj.count(p[i + 1]));
        if (q.at_time) EXPECT_LE(*b.ts, *q.at_time);
        if (hop < q.type_constraints.size()) EXPECT_TRUE(q.type_constraints[hop].count(b.dtype)) << b.dtype;
        // Latest surviving bridge of its dtype between the two entities.
        for (Index c : oracle::spatial_set(g, p[i - 1])) {
            const Vertex& x = g.vertex(c);
            if (c == p[i] || x.dtype != b.dtype || !oracle::spatial_set(g, c).count(p[i + 1])) continue;
            if (q.at_time && *x.ts > *q.at_time) continue;
            EXPECT_LT(std::pair(*x.ts, x.id), std::pair(*b.ts, b.id));
        }
    }
}

PathQuery random_query(std::mt19937_64& rng, const StateGraph& g, bool dtype_target) {
    auto ents = entities_of(g);
    PathQuery q;
    q.from = ents[rng() % ents.size()];
    if (dtype_target) {
        static const char* kinds[] = {"uuid", "host", "ip", "file"};
        q.to = TargetDtype{kinds[rng() % 4]};
    } else {
        q.to = ents[rng() % ents.size()];
    }
    q.max_depth = 1 + static_cast<unsigned>(rng() % 4);
    q.limit = 1 + rng() % 40;
    return q;
}

}  // namespace

TEST(FindPaths, MatchesBruteForceUnconstrained) {
    std::mt19937_64 rng(41);
    int nonempty = 0, truncated = 0;
    for (int i = 0; i < 60; ++i) {
        StateGraph g = oracle::random_graph(rng, {.max_vertices = 90});
        for (int j = 0; j < 10; ++j) {
            PathQuery q = random_query(rng, g, j % 2 == 0);
            if (j % 3 == 0) q.at_time = static_cast<Micros>(rng() % 20);
            PathResult want = oracle::brute_force_paths(g, q);
            PathResult got = find_paths(g, q);
            ASSERT_EQ(got.paths, want.paths) << "graph " << i << " query " << j;
            EXPECT_EQ(got.stats.truncated, want.stats.truncated);
            nonempty += !got.paths.empty();
            truncated += got.stats.truncated;
        }
    }
    EXPECT_GT(nonempty, 100);
    EXPECT_GT(truncated, 5);
}

TEST(FindPaths, MatchesBruteForceSingleHopConstraint) {
    std::mt19937_64 rng(43);
    for (int i = 0; i < 40; ++i) {
        StateGraph g = oracle::random_graph(rng, {.max_vertices = 90});
        for (int j = 0; j < 10; ++j) {
            PathQuery q = random_query(rng, g, j % 2 == 0);
            q.type_constraints = {{"DB", j % 3 == 0 ? "Ovs" : "DB"}};
            ASSERT_EQ(find_paths(g, q).paths, oracle::brute_force_paths(g, q).paths) << i << "/" << j;
        }
    }
}

TEST(FindPaths, MultiHopConstraintsAreSound) {
    std::mt19937_64 rng(47);
    for (int i = 0; i < 40; ++i) {
        StateGraph g = oracle::random_graph(rng, {.max_vertices = 90});
        for (int j = 0; j < 10; ++j) {
            PathQuery q = random_query(rng, g, true);
            q.type_constraints = {{"DB", "Libvirt"}, {"Ovs"}, {"Log", "DB"}};
            if (j % 2) q.at_time = static_cast<Micros>(rng() % 20);
            PathResult got = find_paths(g, q);
            PathResult all = oracle::brute_force_paths(g, {q.from, q.to, q.max_depth, q.type_constraints, q.at_time, 1u << 30});
            std::map<Index, std::size_t> shortest;
            for (const auto& p : all.paths) shortest[p.back()] = p.size();
            std::map<Index, std::size_t> lengths;
            for (const auto& p : got.paths) {
                expect_valid(g, q, p);
                EXPECT_TRUE(shortest.count(p.back()));
                EXPECT_GE(p.size(), shortest[p.back()]);
                auto [it, fresh] = lengths.emplace(p.back(), p.size());
                EXPECT_EQ(it->second, p.size()) << "mixed lengths for one target";
            }
            EXPECT_TRUE(std::is_sorted(got.paths.begin(), got.paths.end()));
            EXPECT_EQ(std::adjacent_find(got.paths.begin(), got.paths.end()), got.paths.end());
        }
    }
}

TEST(FindPaths, LargerDepthNeverLosesTargets) {
    std::mt19937_64 rng(53);
    for (int i = 0; i < 20; ++i) {
        StateGraph g = oracle::random_graph(rng, {.max_vertices = 200});
        PathQuery q = random_query(rng, g, true);
        q.limit = 1u << 30;
        std::set<Index> prev;
        for (unsigned d = 1; d <= 6; ++d) {
            q.max_depth = d;
            std::set<Index> now;
            for (const auto& p : find_paths(g, q).paths) now.insert(p.back());
            EXPECT_TRUE(std::includes(now.begin(), now.end(), prev.begin(), prev.end()));
            prev = std::move(now);
        }
    }
}

TEST(FindPaths, SelfPathAndUnreachable) {
    StateGraph g;
    VertexId a = g.add_vertex(make_entity("uuid", "a"));
    VertexId b = g.add_vertex(make_entity("uuid", "b"));
    g.seal();
    PathQuery q;
    q.from = g.index_of(a);
    q.to = g.index_of(a);
    EXPECT_EQ(find_paths(g, q).paths, std::vector<Path>{{g.index_of(a)}});
    q.to = g.index_of(b);
    EXPECT_TRUE(find_paths(g, q).paths.empty());
}

TEST(Resolve, TypedBareAmbiguousMissing) {
    StateGraph g;
    VertexId u = g.add_vertex(make_entity("uuid", "x"));
    VertexId n = g.add_vertex(make_entity("name", "x"));
    VertexId h = g.add_vertex(make_entity("host", "node-001"));
    g.seal();
    EXPECT_EQ(resolve_entity(g, "uuid=x"), g.index_of(u));
    EXPECT_EQ(resolve_entity(g, "name=x"), g.index_of(n));
    EXPECT_EQ(resolve_entity(g, "node-001"), g.index_of(h));
    EXPECT_EQ(kind_of([&] { resolve_entity(g, "x"); }), ErrorKind::Query);
    try {
        resolve_entity(g, "x");
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("uuid=x"), std::string::npos) << e.what();
        EXPECT_NE(std::string(e.what()).find("name=x"), std::string::npos) << e.what();
    }
    EXPECT_EQ(kind_of([&] { resolve_entity(g, "uuid=y"); }), ErrorKind::Query);
    EXPECT_EQ(kind_of([&] { resolve_entity(g, "nothing"); }), ErrorKind::Query);
}

TEST(LatestState, AgreesWithScan) {
    std::mt19937_64 rng(59);
    for (int i = 0; i < 20; ++i) {
        StateGraph g = oracle::random_graph(rng, {.max_vertices = 300});
        for (Index e : entities_of(g)) {
            for (const char* dt : {"DB", "Ovs"}) {
                std::optional<Micros> at;
                if (rng() % 2) at = static_cast<Micros>(rng() % 20);
                std::optional<Index> want;
                for (Index b : oracle::spatial_set(g, e)) {
                    const Vertex& v = g.vertex(b);
                    if (v.dtype != dt || (at && *v.ts > *at)) continue;
                    if (!want || std::pair(*v.ts, v.id) > std::pair(*g.vertex(*want).ts, g.vertex(*want).id)) want = b;
                }
                EXPECT_EQ(latest_state(g, e, dt, at), want);
            }
        }
    }
}

TEST(Constraints, Parse) {
    using C = TypeConstraints;
    EXPECT_EQ(parse_type_constraints("A,B|C,D"), (C{{"A"}, {"B", "C"}, {"D"}}));
    EXPECT_EQ(parse_type_constraints("DB"), (C{{"DB"}}));
    EXPECT_EQ(parse_type_constraints(""), C{});
    EXPECT_EQ(kind_of([] { parse_type_constraints("A,,B"); }), ErrorKind::Config);
}

class FleetQueries : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        auto dir = support::scratch("query_fleet");
        Corpus c = generate(support::small_fleet(), 5);
        inject(c, FaultInjection{FaultKind::FailedMigration}, 5);
        inject(c, FaultInjection{FaultKind::OrphanOvsPorts}, 6);
        write_corpus(c, dir);
        truth_ = new nlohmann::json(nlohmann::json::parse(support::slurp(dir / "ground_truth.json")));
        auto in = ingest_corpus(dir, IngestConfig::defaults(), 2);
        // Seven hosts fall under the default kind threshold.
        BuildOptions o;
        o.policy.include.insert("host");
        graph_ = new StateGraph(build_graph(in.records, o).graph);
        std::filesystem::remove_all(dir);
    }
    static void TearDownTestSuite() {
        delete graph_;
        delete truth_;
    }

    static std::set<std::string> values(const std::vector<Index>& vs) {
        std::set<std::string> out;
        for (Index v : vs) out.insert(graph_->vertex(v).value());
        return out;
    }

    static inline StateGraph* graph_ = nullptr;
    static inline nlohmann::json* truth_ = nullptr;
};

TEST_F(FleetQueries, AffectedVmsMatchPlacement) {
    const StateGraph& g = *graph_;
    for (const auto& h : (*truth_)["hosts"]) {
        std::set<std::string> want;
        for (const auto& vm : (*truth_)["vms"])
            if (vm["host"] == h) want.insert(vm["uuid"]);
        EXPECT_EQ(values(affected_vms(g, g.find_entity("host", h.get<std::string>()))), want) << h;
    }
    for (const auto& s : (*truth_)["storage_hosts"]) {
        std::set<std::string> want;
        for (const auto& vm : (*truth_)["vms"])
            for (const auto& img : vm["images"])
                for (const auto& o : img["objects"])
                    for (const auto& r : o["replicas"])
                        if (r["host"] == s) want.insert(vm["uuid"]);
        EXPECT_FALSE(want.empty());
        EXPECT_EQ(values(affected_vms(g, g.find_entity("host", s.get<std::string>()))), want) << s;
    }
}

TEST_F(FleetQueries, CephfilesAndSubnets) {
    const StateGraph& g = *graph_;
    std::map<std::string, std::set<std::string>> by_subnet;
    for (const auto& vm : (*truth_)["vms"]) {
        std::set<std::string> files;
        for (const auto& img : vm["images"])
            for (const auto& o : img["objects"]) files.insert(o["file"]);
        Index v = g.find_entity("uuid", vm["uuid"].get<std::string>());
        ASSERT_NE(v, StateGraph::npos);
        EXPECT_EQ(values(list_cephfiles_for_vm(g, v)), files) << vm["uuid"];
        by_subnet[vm["subnet_id"]].insert(vm["uuid"]);
    }
    for (const auto& [subnet, vms] : by_subnet) {
        EXPECT_EQ(values(list_vms_in_subnet(g, g.find_entity("subnet_id", subnet))), vms) << subnet;
    }
}

TEST_F(FleetQueries, StorageHostReachesVmThroughImageChain) {
    const StateGraph& g = *graph_;
    const auto& vm = (*truth_)["vms"][0];
    const std::string host = vm["images"][0]["objects"][0]["replicas"][0]["host"];
    PathQuery q;
    q.from = resolve_entity(g, "host=" + host);
    q.to = resolve_entity(g, "uuid=" + vm["uuid"].get<std::string>());
    PathResult r = find_paths(g, q);
    const std::vector<std::string> chain{"host", "Cephfile", "object_id", "Cephimage", "image_id", "DB", "uuid"};
    bool found = false;
    for (const auto& p : r.paths) {
        std::vector<std::string> dts;
        for (Index i : p) dts.push_back(g.vertex(i).dtype);
        found = found || dts == chain;
    }
    EXPECT_TRUE(found) << paths_to_table(g, r);
}

TEST_F(FleetQueries, AtTimeBeforeWindowSeesOnlyHistory) {
    const StateGraph& g = *graph_;
    const auto& vm = (*truth_)["vms"][0];
    Index v = g.find_entity("uuid", vm["uuid"].get<std::string>());
    EXPECT_TRUE(latest_state(g, v, "Libvirt").has_value());
    EXPECT_FALSE(latest_state(g, v, "Libvirt", Micros{1464739200} * 1000000 - 1).has_value());
    EXPECT_TRUE(latest_state(g, v, "DB", Micros{1464739200} * 1000000 - 1).has_value());
}

TEST(Output, FormatsCarryEveryPathVertex) {
    StateGraph g;
    VertexId a = g.add_vertex(make_entity("uuid", "a\"q"));
    VertexId b = g.add_vertex(make_entity("host", "node-001"));
    Vertex s;
    s.category = VertexCategory::State;
    s.dtype = "Libvirt";
    s.ts = 0;
    s.props = {{"state", "running"}};
    VertexId x = g.add_vertex(s, {"f", 1});
    g.add_edge({a, x, EdgeKind::Spatial});
    g.add_edge({b, x, EdgeKind::Spatial});
    g.seal();
    PathQuery q;
    q.from = g.index_of(a);
    q.to = g.index_of(b);
    PathResult r = find_paths(g, q);
    ASSERT_EQ(r.paths.size(), 1u);
    auto j = nlohmann::json::parse(paths_to_json(g, r));
    EXPECT_EQ(j["paths"][0].size(), 3u);
    EXPECT_EQ(j["paths"][0][0]["value"], "a\"q");
    std::string dot = paths_to_dot(g, r);
    EXPECT_EQ(dot.rfind("digraph", 0), 0u);
    EXPECT_NE(dot.find("a\\\"q"), std::string::npos);
    EXPECT_NE(paths_to_table(g, r).find("[Libvirt@1970-01-01T00:00:00.000000Z]"), std::string::npos);
}
