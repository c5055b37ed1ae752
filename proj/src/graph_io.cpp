#include "sosg/graph_io.hpp"

#include "sosg/sha256.hpp"

#include "json.hpp"

#include <unistd.h>

#include <fstream>
#include <sstream>

namespace sosg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kManifest = "manifest.json";
constexpr const char* kVertices = "vertices.jsonl";
constexpr const char* kEdges = "edges.jsonl";

char category_code(VertexCategory c) {
    switch (c) {
    case VertexCategory::Entity: return 'E';
    case VertexCategory::State: return 'S';
    case VertexCategory::Event: return 'V';
    }
    return 'S';
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) fail(ErrorKind::Input, "cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, std::string_view bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.close();
    if (!out) fail(ErrorKind::Input, "cannot write " + p.string());
}

template <typename Fn>
void for_each_line(const std::string& section, const std::string& text, Fn&& fn) {
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string::npos) throw CorruptGraphError(section, pos, "missing final newline");
        fn(std::string_view(text).substr(pos, nl - pos), pos);
        pos = nl + 1;
    }
}

json parse_line(const std::string& section, std::string_view line, std::uint64_t offset) {
    try {
        json j = json::parse(line);
        if (!j.is_object()) throw CorruptGraphError(section, offset, "line is not an object");
        return j;
    } catch (const json::parse_error& e) {
        throw CorruptGraphError(section, offset + (e.byte > 0 ? e.byte - 1 : 0), e.what());
    }
}

std::uint64_t read_id(const std::string& section, const json& j, const char* key, std::uint64_t offset) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_number_unsigned()) {
        throw CorruptGraphError(section, offset, std::string("field '") + key + "' missing or not an id");
    }
    return it->get<std::uint64_t>();
}

}  // namespace

std::string json_quote(std::string_view s) {
    return json(std::string(s)).dump(-1, ' ', false, json::error_handler_t::replace);
}

std::string vertex_line(const Vertex& v) {
    std::string out = "{\"id\":" + std::to_string(v.id) + ",\"cat\":\"";
    out.push_back(category_code(v.category));
    out += "\",\"dtype\":" + json_quote(v.dtype) + ",\"ts\":";
    out += v.ts ? std::to_string(*v.ts) : "null";
    out += ",\"props\":{";
    bool first = true;
    for (const auto& [k, val] : v.props) {
        if (!first) out.push_back(',');
        first = false;
        out += json_quote(k);
        out.push_back(':');
        out += json_quote(val);
    }
    out += "}}";
    return out;
}

std::string edge_line(const Edge& e) {
    return "{\"src\":" + std::to_string(e.src) + ",\"dst\":" + std::to_string(e.dst) + ",\"kind\":\"" +
           std::string(to_string(e.kind)) + "\"}";
}

std::string serialize_vertices(const StateGraph& g) {
    std::string out;
    for (const auto& v : g.vertices()) {
        out += vertex_line(v);
        out.push_back('\n');
    }
    return out;
}

std::string serialize_edges(const StateGraph& g) {
    std::string out;
    for (const auto& e : g.edges()) {
        out += edge_line(e);
        out.push_back('\n');
    }
    return out;
}

void save_graph(const StateGraph& g, const fs::path& dir, bool overwrite) {
    if (!g.sealed()) fail(ErrorKind::Internal, "save_graph: graph not sealed");
    g.check_invariants();
    std::error_code ec;
    bool exists = fs::exists(dir, ec);
    if (exists && !overwrite) fail(ErrorKind::Config, "graph directory exists: " + dir.string() + " (use --force)");

    std::string vertices = serialize_vertices(g);
    std::string edges = serialize_edges(g);
    std::string manifest = "{\n  \"version\": " + std::to_string(kGraphFormatVersion) +
                           ",\n  \"vertex_count\": " + std::to_string(g.vertex_count()) +
                           ",\n  \"edge_count\": " + std::to_string(g.edge_count()) + ",\n  \"sha256\": {\n    \"" +
                           kVertices + "\": \"" + sha256_hex(vertices) + "\",\n    \"" + kEdges + "\": \"" +
                           sha256_hex(edges) + "\"\n  }\n}\n";

    fs::path target = fs::absolute(dir).lexically_normal();
    if (target.filename().empty()) target = target.parent_path();
    fs::path tmp = target.parent_path() / (target.filename().string() + ".tmp-" + std::to_string(::getpid()));
    fs::remove_all(tmp, ec);
    if (!fs::create_directories(tmp, ec) || ec) fail(ErrorKind::Input, "cannot create " + tmp.string());
    try {
        write_file(tmp / kVertices, vertices);
        write_file(tmp / kEdges, edges);
        write_file(tmp / kManifest, manifest);
        if (exists) fs::remove_all(target);
        fs::rename(tmp, target);
    } catch (...) {
        fs::remove_all(tmp, ec);
        throw;
    }
}

StateGraph load_graph(const fs::path& dir) {
    if (!fs::is_directory(dir)) fail(ErrorKind::Input, "graph directory not found: " + dir.string());
    std::string manifest_text = read_file(dir / kManifest);
    json manifest;
    try {
        manifest = json::parse(manifest_text);
    } catch (const json::parse_error& e) {
        throw CorruptGraphError(kManifest, e.byte > 0 ? e.byte - 1 : 0, e.what());
    }
    std::uint64_t vcount = 0, ecount = 0;
    std::string vsum, esum;
    try {
        if (manifest.at("version").get<int>() != kGraphFormatVersion) {
            throw CorruptGraphError(kManifest, 0, "unsupported version");
        }
        vcount = manifest.at("vertex_count").get<std::uint64_t>();
        ecount = manifest.at("edge_count").get<std::uint64_t>();
        vsum = manifest.at("sha256").at(kVertices).get<std::string>();
        esum = manifest.at("sha256").at(kEdges).get<std::string>();
    } catch (const json::exception& e) {
        throw CorruptGraphError(kManifest, 0, e.what());
    }

    std::string vtext = read_file(dir / kVertices);
    std::string etext = read_file(dir / kEdges);

    StateGraph g;
    g.reserve(vcount, ecount);
    std::uint64_t seen = 0;
    VertexId prev = 0;
    for_each_line(kVertices, vtext, [&](std::string_view line, std::uint64_t off) {
        json j = parse_line(kVertices, line, off);
        Vertex v;
        v.id = read_id(kVertices, j, "id", off);
        if (seen > 0 && v.id <= prev) throw CorruptGraphError(kVertices, off, "vertex ids not strictly increasing");
        prev = v.id;
        try {
            std::string cat = j.at("cat").get<std::string>();
            if (cat == "E") {
                v.category = VertexCategory::Entity;
            } else if (cat == "S") {
                v.category = VertexCategory::State;
            } else if (cat == "V") {
                v.category = VertexCategory::Event;
            } else {
                throw CorruptGraphError(kVertices, off, "unknown category '" + cat + "'");
            }
            v.dtype = j.at("dtype").get<std::string>();
            const json& ts = j.at("ts");
            if (!ts.is_null()) v.ts = ts.get<Micros>();
            for (auto it = j.at("props").begin(); it != j.at("props").end(); ++it) {
                v.props.emplace(it.key(), it.value().get<std::string>());
            }
        } catch (const json::exception& e) {
            throw CorruptGraphError(kVertices, off, e.what());
        }
        if (vertex_line(v) != line) throw CorruptGraphError(kVertices, off, "record is not in canonical form");
        try {
            g.restore_vertex(std::move(v));
        } catch (const Error& e) {
            throw CorruptGraphError(kVertices, off, e.what());
        }
        ++seen;
    });
    if (seen != vcount) throw CorruptGraphError(kVertices, vtext.size(), "vertex count disagrees with manifest");
    if (sha256_hex(vtext) != vsum) throw CorruptGraphError(kVertices, 0, "sha256 mismatch");

    seen = 0;
    Edge prev_edge;
    for_each_line(kEdges, etext, [&](std::string_view line, std::uint64_t off) {
        json j = parse_line(kEdges, line, off);
        Edge e;
        e.src = read_id(kEdges, j, "src", off);
        e.dst = read_id(kEdges, j, "dst", off);
        auto kind = j.find("kind");
        if (kind == j.end() || !kind->is_string()) throw CorruptGraphError(kEdges, off, "field 'kind' missing");
        if (*kind == "spatial") {
            e.kind = EdgeKind::Spatial;
        } else if (*kind == "temporal") {
            e.kind = EdgeKind::Temporal;
        } else {
            throw CorruptGraphError(kEdges, off, "unknown edge kind");
        }
        if (seen > 0 && e < prev_edge) throw CorruptGraphError(kEdges, off, "edges not sorted");
        prev_edge = e;
        if (edge_line(e) != line) throw CorruptGraphError(kEdges, off, "record is not in canonical form");
        try {
            g.add_edge(e);
        } catch (const Error& err) {
            throw CorruptGraphError(kEdges, off, err.what());
        }
        ++seen;
    });
    if (seen != ecount) throw CorruptGraphError(kEdges, etext.size(), "edge count disagrees with manifest");
    if (sha256_hex(etext) != esum) throw CorruptGraphError(kEdges, 0, "sha256 mismatch");

    g.seal();
    return g;
}

}  // namespace sosg
