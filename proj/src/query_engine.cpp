#include "sosg/query_engine.hpp"

#include "sosg/time_util.hpp"

#include "json.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace sosg {

using ojson = nlohmann::ordered_json;

Index resolve_entity(const StateGraph& g, std::string_view selector) {
    if (selector.empty()) fail(ErrorKind::Query, "empty entity selector");
    if (auto eq = selector.find('='); eq != std::string_view::npos) {
        Index i = g.find_entity(selector.substr(0, eq), selector.substr(eq + 1));
        if (i != StateGraph::npos) return i;
    }
    std::vector<Index> hits = g.entities_with_value(selector);
    if (hits.empty()) fail(ErrorKind::Query, "no entity matches '" + std::string(selector) + "'");
    if (hits.size() > 1) {
        std::string msg = "ambiguous selector '" + std::string(selector) + "'; candidates:";
        for (Index h : hits) msg += " " + g.vertex(h).dtype + "=" + g.vertex(h).value();
        fail(ErrorKind::Query, msg);
    }
    return hits.front();
}

std::optional<Index> latest_state(const StateGraph& g, Index entity, std::string_view dtype,
                                  std::optional<Micros> at_time) {
    if (g.vertex(entity).category != VertexCategory::Entity) fail(ErrorKind::Query, "latest_state: not an entity");
    for (const auto& slice : g.time_slices(entity)) {
        if (slice.dtype != dtype) continue;
        auto order = g.time_order(slice);
        auto it = order.end();
        if (at_time) {
            it = std::upper_bound(order.begin(), order.end(), *at_time,
                                  [&](Micros t, Index v) { return t < *g.vertex(v).ts; });
        }
        if (it == order.begin()) return std::nullopt;
        return *(it - 1);
    }
    return std::nullopt;
}

TypeConstraints parse_type_constraints(std::string_view text) {
    TypeConstraints out;
    if (text.empty()) return out;
    std::size_t pos = 0;
    while (true) {
        std::size_t comma = text.find(',', pos);
        std::string_view hop = text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
        std::set<std::string> allowed;
        std::size_t p = 0;
        while (true) {
            std::size_t bar = hop.find('|', p);
            std::string_view t = hop.substr(p, bar == std::string_view::npos ? std::string_view::npos : bar - p);
            if (t.empty()) fail(ErrorKind::Config, "empty dtype in type constraints '" + std::string(text) + "'");
            allowed.emplace(t);
            if (bar == std::string_view::npos) break;
            p = bar + 1;
        }
        out.push_back(std::move(allowed));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

namespace {

struct DagEdge {
    Index u, b, w;
};

struct Bfs {
    std::unordered_map<Index, unsigned> dist;
    std::vector<DagEdge> dag;  // collapsed, only edges with dist[w] = dist[u] + 1
    SearchStats stats;
};

bool bridge_later(const StateGraph& g, Index a, Index b) {
    const Vertex& va = g.vertex(a);
    const Vertex& vb = g.vertex(b);
    if (*va.ts != *vb.ts) return *va.ts > *vb.ts;
    return va.id > vb.id;
}

/// Layered BFS over entities. Stops after the layer containing `stop_at`
/// when given, else runs to max_depth.
Bfs run_bfs(const StateGraph& g, Index from, unsigned max_depth, const TypeConstraints& tc,
            std::optional<Micros> at_time, Index stop_at, bool want_dag) {
    Bfs r;
    r.dist.emplace(from, 0);
    r.stats.entities_visited = 1;
    std::vector<Index> frontier{from};
    std::vector<DagEdge> layer;
    for (unsigned d = 0; d < max_depth && !frontier.empty(); ++d) {
        layer.clear();
        std::vector<Index> next;
        for (Index u : frontier) {
            for (Index b : g.spatial_neighbors(u)) {
                const Vertex& bv = g.vertex(b);
                if (at_time && *bv.ts > *at_time) continue;
                if (d < tc.size() && !tc[d].count(bv.dtype)) continue;
                ++r.stats.bridges_scanned;
                for (Index w : g.spatial_neighbors(b)) {
                    if (w == u) continue;
                    auto [it, fresh] = r.dist.emplace(w, d + 1);
                    if (fresh) {
                        next.push_back(w);
                        ++r.stats.entities_visited;
                    }
                    if (want_dag && it->second == d + 1) layer.push_back({u, b, w});
                }
            }
        }
        if (!next.empty()) r.stats.depth_reached = d + 1;
        if (want_dag) {
            // Keep one bridge per (u, w, bridge dtype): the latest.
            std::sort(layer.begin(), layer.end(), [&](const DagEdge& x, const DagEdge& y) {
                if (x.u != y.u) return x.u < y.u;
                if (x.w != y.w) return x.w < y.w;
                const auto& dx = g.vertex(x.b).dtype;
                const auto& dy = g.vertex(y.b).dtype;
                if (dx != dy) return dx < dy;
                return bridge_later(g, x.b, y.b);
            });
            for (std::size_t i = 0; i < layer.size(); ++i) {
                if (i > 0 && layer[i].u == layer[i - 1].u && layer[i].w == layer[i - 1].w &&
                    g.vertex(layer[i].b).dtype == g.vertex(layer[i - 1].b).dtype) {
                    continue;
                }
                r.dag.push_back(layer[i]);
            }
        }
        frontier = std::move(next);
        std::sort(frontier.begin(), frontier.end());
        if (stop_at != StateGraph::npos && r.dist.count(stop_at)) break;
    }
    return r;
}

}  // namespace

PathResult find_paths(const StateGraph& g, const PathQuery& q) {
    if (q.max_depth < 1) fail(ErrorKind::Config, "max_depth must be at least 1");
    if (q.from >= g.vertex_count() || g.vertex(q.from).category != VertexCategory::Entity) {
        fail(ErrorKind::Query, "path source is not an entity");
    }
    PathResult result;
    const Index* to_entity = std::get_if<Index>(&q.to);
    const TargetDtype* to_dtype = std::get_if<TargetDtype>(&q.to);
    if (to_entity) {
        if (*to_entity >= g.vertex_count() || g.vertex(*to_entity).category != VertexCategory::Entity) {
            fail(ErrorKind::Query, "path target is not an entity");
        }
        if (*to_entity == q.from) {
            result.paths.push_back({q.from});
            result.stats.entities_visited = 1;
            return result;
        }
    }
    auto is_target = [&](Index w) {
        return to_entity ? w == *to_entity : (w != q.from && g.vertex(w).dtype == to_dtype->dtype);
    };

    Bfs bfs = run_bfs(g, q.from, q.max_depth, q.type_constraints, q.at_time,
                      to_entity ? *to_entity : StateGraph::npos, true);
    result.stats = bfs.stats;

    // Keep DAG edges that lead to some target, processing deeper layers first.
    std::unordered_set<Index> useful;
    for (const auto& [v, _] : bfs.dist) {
        if (is_target(v)) useful.insert(v);
    }
    if (useful.empty()) return result;
    std::vector<DagEdge> dag = std::move(bfs.dag);
    std::stable_sort(dag.begin(), dag.end(),
                     [&](const DagEdge& a, const DagEdge& b) { return bfs.dist.at(a.u) > bfs.dist.at(b.u); });
    std::unordered_map<Index, std::vector<std::pair<Index, Index>>> succ;  // u -> (bridge, w)
    for (const auto& e : dag) {
        if (useful.count(e.w)) {
            useful.insert(e.u);
            succ[e.u].emplace_back(e.b, e.w);
        }
    }
    for (auto& [_, s] : succ) std::sort(s.begin(), s.end());

    // Depth-first over the shortest-path DAG in vertex-id order; pre-order
    // emission yields lexicographic order.
    Path cur{q.from};
    const std::size_t cap = q.limit;
    auto dfs = [&](auto&& self, Index u) -> void {
        if (u != q.from && is_target(u)) {
            if (result.paths.size() == cap) {
                result.stats.truncated = true;
                return;
            }
            result.paths.push_back(cur);
        }
        auto it = succ.find(u);
        if (it == succ.end()) return;
        for (const auto& [b, w] : it->second) {
            if (result.stats.truncated) return;
            cur.push_back(b);
            cur.push_back(w);
            self(self, w);
            cur.pop_back();
            cur.pop_back();
        }
    };
    if (cap > 0) dfs(dfs, q.from);
    return result;
}

std::vector<Index> list_related(const StateGraph& g, Index entity, std::string_view target_dtype, unsigned max_depth,
                                const TypeConstraints& constraints, std::optional<Micros> at_time) {
    if (max_depth < 1) fail(ErrorKind::Config, "max_depth must be at least 1");
    if (entity >= g.vertex_count() || g.vertex(entity).category != VertexCategory::Entity) {
        fail(ErrorKind::Query, "list_related: not an entity");
    }
    Bfs bfs = run_bfs(g, entity, max_depth, constraints, at_time, StateGraph::npos, false);
    std::vector<Index> out;
    for (const auto& [v, _] : bfs.dist) {
        if (v != entity && g.vertex(v).dtype == target_dtype) out.push_back(v);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<Index> affected_vms(const StateGraph& g, Index host, std::optional<Micros> at_time) {
    std::vector<Index> local = list_related(g, host, kVmDtype, 1, {{"Libvirt"}}, at_time);
    std::vector<Index> remote = list_related(g, host, kVmDtype, 3, {{"Cephfile"}, {"Cephimage"}, {"DB"}}, at_time);
    std::vector<Index> out;
    std::set_union(local.begin(), local.end(), remote.begin(), remote.end(), std::back_inserter(out));
    return out;
}

std::vector<Index> list_cephfiles_for_vm(const StateGraph& g, Index vm, std::optional<Micros> at_time) {
    return list_related(g, vm, kFileDtype, 3, {{"DB"}, {"Cephimage"}, {"Cephfile"}}, at_time);
}

std::vector<Index> list_vms_in_subnet(const StateGraph& g, Index subnet, std::optional<Micros> at_time) {
    return list_related(g, subnet, kVmDtype, 1, {{"DB"}}, at_time);
}

namespace {

ojson vertex_json(const Vertex& v) {
    ojson j;
    j["id"] = v.id;
    j["cat"] = std::string(to_string(v.category));
    j["dtype"] = v.dtype;
    if (v.category == VertexCategory::Entity) {
        j["value"] = v.value();
    } else {
        j["ts"] = format_iso8601(*v.ts);
        j["props"] = v.props;
    }
    return j;
}

std::string dump(const ojson& j) { return j.dump(2, ' ', false, ojson::error_handler_t::replace) + "\n"; }

std::string dot_node(const Vertex& v) {
    const char* shape = v.category == VertexCategory::Entity ? "ellipse"
                        : v.category == VertexCategory::State ? "box"
                                                               : "diamond";
    std::string label = vertex_label(v);
    std::string escaped;
    for (char c : label) {
        if (c == '"' || c == '\\') escaped.push_back('\\');
        escaped.push_back(c);
    }
    return "  v" + std::to_string(v.id) + " [shape=" + shape + ", label=\"" + escaped + "\"];\n";
}

}  // namespace

std::string vertex_label(const Vertex& v) {
    if (v.category == VertexCategory::Entity) return v.dtype + "=" + v.value();
    return v.dtype + "@" + format_iso8601(*v.ts);
}

std::string paths_to_json(const StateGraph& g, const PathResult& r) {
    ojson j;
    auto& paths = j["paths"] = ojson::array();
    for (const auto& p : r.paths) {
        ojson path = ojson::array();
        for (Index i : p) path.push_back(vertex_json(g.vertex(i)));
        paths.push_back(std::move(path));
    }
    j["stats"] = {{"entities_visited", r.stats.entities_visited},
                  {"bridges_scanned", r.stats.bridges_scanned},
                  {"depth_reached", r.stats.depth_reached},
                  {"truncated", r.stats.truncated}};
    return dump(j);
}

std::string paths_to_dot(const StateGraph& g, const PathResult& r) {
    std::set<Index> nodes;
    std::set<std::pair<Index, Index>> edges;
    for (const auto& p : r.paths) {
        for (std::size_t i = 0; i < p.size(); ++i) {
            nodes.insert(p[i]);
            if (i + 1 < p.size()) edges.emplace(p[i], p[i + 1]);
        }
    }
    std::string out = "digraph sosg {\n";
    for (Index n : nodes) out += dot_node(g.vertex(n));
    for (const auto& [a, b] : edges) {
        out += "  v" + std::to_string(g.vertex(a).id) + " -> v" + std::to_string(g.vertex(b).id) + ";\n";
    }
    out += "}\n";
    return out;
}

std::string paths_to_table(const StateGraph& g, const PathResult& r) {
    std::ostringstream os;
    for (const auto& p : r.paths) {
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (i) os << " -> ";
            const Vertex& v = g.vertex(p[i]);
            os << (v.category == VertexCategory::Entity ? vertex_label(v) : "[" + vertex_label(v) + "]");
        }
        os << '\n';
    }
    os << r.paths.size() << " path(s)" << (r.stats.truncated ? " (truncated)" : "") << '\n';
    return os.str();
}

std::string vertices_to_json(const StateGraph& g, const std::vector<Index>& vs) {
    ojson j = ojson::array();
    for (Index i : vs) j.push_back(vertex_json(g.vertex(i)));
    return dump(j);
}

std::string vertices_to_dot(const StateGraph& g, const std::vector<Index>& vs) {
    std::string out = "digraph sosg {\n";
    for (Index i : vs) out += dot_node(g.vertex(i));
    out += "}\n";
    return out;
}

std::string vertices_to_table(const StateGraph& g, const std::vector<Index>& vs) {
    std::ostringstream os;
    for (Index i : vs) {
        const Vertex& v = g.vertex(i);
        os << v.id << '\t' << vertex_label(v);
        if (v.category != VertexCategory::Entity) {
            for (const auto& [k, val] : v.props) os << '\t' << k << '=' << val;
        }
        os << '\n';
    }
    return os.str();
}

}  // namespace sosg
