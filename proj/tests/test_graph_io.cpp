#include "sosg/graph_io.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace sosg;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("sosg_io_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void spit(const fs::path& p, const std::string& s) { std::ofstream(p, std::ios::binary | std::ios::trunc) << s; }

// Fig. 1 shape: events 1, 2; entities 3, 6; states 4, 5.
StateGraph fig1_graph() {
    StateGraph g;
    auto ev = [&](Micros t, const std::string& msg, std::uint64_t line) {
        Vertex v;
        v.category = VertexCategory::Event;
        v.dtype = "Log";
        v.ts = t;
        v.props = {{"message", msg}};
        return g.add_vertex(v, {"log", line});
    };
    auto st = [&](Micros t, Props p, std::uint64_t line) {
        Vertex v;
        v.category = VertexCategory::State;
        v.dtype = "DB";
        v.ts = t;
        v.props = std::move(p);
        return g.add_vertex(v, {"db", line});
    };
    VertexId v1 = ev(1, "start xxx-xx1", 1);
    VertexId v2 = ev(2, "xxx-xx1 got 10.1.0.12", 2);
    VertexId v3 = g.add_vertex(make_entity("uuid", "xxx-xx1"));
    VertexId v4 = st(3, {{"uuid", "xxx-xx1"}}, 1);
    VertexId v5 = st(4, {{"uuid", "xxx-xx1"}, {"ip", "10.1.0.12"}}, 2);
    VertexId v6 = g.add_vertex(make_entity("ip", "10.1.0.12"));
    for (VertexId x : {v1, v2, v4, v5}) g.add_edge({v3, x, EdgeKind::Spatial});
    g.add_edge({v6, v5, EdgeKind::Spatial});
    g.add_edge({v6, v2, EdgeKind::Spatial});
    g.add_edge({v1, v2, EdgeKind::Temporal});
    g.add_edge({v4, v5, EdgeKind::Temporal});
    g.seal();
    return g;
}

}  // namespace

TEST(GraphIo, Fig1RoundTrip) {
    StateGraph g = fig1_graph();
    fs::path dir = scratch("fig1");
    save_graph(g, dir);
    StateGraph h = load_graph(dir);
    EXPECT_EQ(h.vertices(), g.vertices());
    EXPECT_EQ(h.edges(), g.edges());
    EXPECT_EQ(h.vertex_count(), 6u);
    EXPECT_EQ(h.edge_count(), 8u);
    EXPECT_EQ(serialize_vertices(h), slurp(dir / "vertices.jsonl"));
    EXPECT_EQ(serialize_edges(h), slurp(dir / "edges.jsonl"));
    fs::remove_all(dir);
}

TEST(GraphIo, RandomRoundTripsAreByteStable) {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 5; ++i) {
        StateGraph g = oracle::random_graph(rng, {.max_vertices = 400});
        fs::path a = scratch("ra"), b = scratch("rb");
        save_graph(g, a);
        save_graph(load_graph(a), b);
        for (const char* f : {"manifest.json", "vertices.jsonl", "edges.jsonl"}) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
        fs::remove_all(a);
        fs::remove_all(b);
    }
}

TEST(GraphIo, ExistingDirectoryNeedsOverwrite) {
    StateGraph g = fig1_graph();
    fs::path dir = scratch("exists");
    save_graph(g, dir);
    EXPECT_THROW(save_graph(g, dir), Error);
    EXPECT_NO_THROW(save_graph(g, dir, true));
    for (const auto& entry : fs::directory_iterator(dir.parent_path())) {
        EXPECT_EQ(entry.path().filename().string().find(dir.filename().string() + ".tmp"), std::string::npos);
    }
    fs::remove_all(dir);
}

TEST(GraphIo, CorruptionNamesSectionAndOffset) {
    StateGraph g = fig1_graph();
    fs::path dir = scratch("corrupt");
    save_graph(g, dir);
    const std::string vertices = slurp(dir / "vertices.jsonl");
    const std::string edges = slurp(dir / "edges.jsonl");

    auto expect_corrupt = [&](const std::string& section) {
        try {
            load_graph(dir);
            ADD_FAILURE() << "loaded a corrupt graph";
        } catch (const CorruptGraphError& e) {
            EXPECT_EQ(e.section(), section);
            return e.offset();
        }
        return std::uint64_t(-1);
    };

    // Broken JSON on the second line.
    std::size_t second = vertices.find('\n') + 1;
    std::string bad = vertices;
    bad[second] = 'X';
    spit(dir / "vertices.jsonl", bad);
    EXPECT_EQ(expect_corrupt("vertices.jsonl"), second);

    // Lines swapped: sorted order violated.
    std::size_t third = vertices.find('\n', second) + 1;
    std::string swapped = vertices.substr(second, third - second) + vertices.substr(0, second) + vertices.substr(third);
    spit(dir / "vertices.jsonl", swapped);
    EXPECT_EQ(expect_corrupt("vertices.jsonl"), third - second);
    spit(dir / "vertices.jsonl", vertices);

    // A valid-looking edge whose endpoint is unknown.
    spit(dir / "edges.jsonl", edges + R"({"src":1,"dst":2,"kind":"spatial"})" + "\n");
    EXPECT_NE(expect_corrupt("edges.jsonl"), std::uint64_t(-1));

    // Well-formed files that disagree with the recorded digest.
    spit(dir / "edges.jsonl", edges);
    const std::string manifest = slurp(dir / "manifest.json");
    for (const char* section : {"vertices.jsonl", "edges.jsonl"}) {
        std::string m = manifest;
        std::size_t at = m.find(": \"", m.find(std::string("\"") + section + "\"")) + 3;
        m[at] = m[at] == '0' ? '1' : '0';
        spit(dir / "manifest.json", m);
        EXPECT_EQ(expect_corrupt(section), 0u);
    }
    spit(dir / "manifest.json", manifest);
    EXPECT_NO_THROW(load_graph(dir));

    fs::remove(dir / "edges.jsonl");
    try {
        load_graph(dir);
        ADD_FAILURE();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Input);
    }
    fs::remove_all(dir);
}

TEST(GraphIo, JsonQuoteReplacesInvalidUtf8) {
    EXPECT_EQ(json_quote("a\"b"), "\"a\\\"b\"");
    EXPECT_EQ(json_quote("\xff"), "\"\xef\xbf\xbd\"");
}
