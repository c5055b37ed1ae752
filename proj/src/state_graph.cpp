#include "sosg/state_graph.hpp"

#include <algorithm>
#include <numeric>

namespace sosg {

namespace {

std::string entity_key(std::string_view dtype, std::string_view value) {
    std::string k;
    k.reserve(dtype.size() + value.size() + 1);
    k.append(dtype).push_back('\x1f');
    k.append(value);
    return k;
}

const std::string kEmpty;

}  // namespace

const std::string& Vertex::value() const {
    auto it = props.find("value");
    return it == props.end() ? kEmpty : it->second;
}

std::string_view to_string(EdgeKind kind) { return kind == EdgeKind::Spatial ? "spatial" : "temporal"; }

VertexId compute_vertex_id(const Vertex& v, const Origin& origin) {
    std::string buf;
    buf.push_back(static_cast<char>('0' + static_cast<int>(v.category)));
    buf.push_back('\x1f');
    buf += v.dtype;
    buf.push_back('\x1f');
    if (v.category == VertexCategory::Entity) {
        buf += v.value();
    } else {
        for (const auto& [k, val] : v.props) {
            buf += k;
            buf.push_back('\x1e');
            buf += val;
            buf.push_back('\x1d');
        }
        buf.push_back('\x1f');
        buf += std::to_string(v.ts.value_or(0));
        buf.push_back('\x1f');
        buf += origin.file;
        buf.push_back('\x1f');
        buf += std::to_string(origin.line);
    }
    return mix64(fnv1a64(buf)) & kVertexIdMask;
}

Vertex make_entity(std::string dtype, std::string value) {
    Vertex v;
    v.category = VertexCategory::Entity;
    v.dtype = std::move(dtype);
    v.props.emplace("value", std::move(value));
    return v;
}

void validate_vertex(const Vertex& v) {
    if (v.dtype.empty()) fail(ErrorKind::Invariant, "vertex has an empty dtype");
    if (v.category == VertexCategory::Entity) {
        if (v.ts) fail(ErrorKind::Invariant, "entity vertex " + v.dtype + " carries a timestamp");
        if (v.props.size() != 1 || !v.props.count("value")) {
            fail(ErrorKind::Invariant, "entity vertex " + v.dtype + " must hold exactly one 'value' property");
        }
    } else {
        if (!v.ts) fail(ErrorKind::Invariant, std::string(to_string(v.category)) + " vertex without timestamp");
        if (v.props.empty()) fail(ErrorKind::Invariant, "state/event vertex with no properties");
        for (const auto& [k, _] : v.props) {
            if (k.empty()) fail(ErrorKind::Invariant, "vertex property with empty key");
        }
    }
}

void StateGraph::require_unsealed() const {
    if (sealed_) fail(ErrorKind::Internal, "graph is sealed");
}

void StateGraph::require_sealed() const {
    if (!sealed_) fail(ErrorKind::Internal, "graph is not sealed");
}

void StateGraph::reserve(std::size_t vertices, std::size_t edges) {
    vertices_.reserve(vertices);
    edges_.reserve(edges);
    id_index_.reserve(vertices);
}

VertexId StateGraph::add_vertex(Vertex v, const Origin& origin) {
    require_unsealed();
    validate_vertex(v);
    if (v.category == VertexCategory::Entity) {
        std::string key = entity_key(v.dtype, v.value());
        if (auto it = entity_keys_.find(key); it != entity_keys_.end()) return it->second;
        v.id = compute_vertex_id(v, origin);
        if (id_index_.count(v.id)) fail(ErrorKind::Invariant, "vertex id collision for entity " + v.dtype);
        entity_keys_.emplace(std::move(key), v.id);
    } else {
        v.id = compute_vertex_id(v, origin);
        if (auto it = id_index_.find(v.id); it != id_index_.end()) {
            if (vertices_[it->second] == v) return v.id;
            fail(ErrorKind::Invariant, "vertex id collision for " + v.dtype + " record at " + origin.file + ":" +
                                           std::to_string(origin.line));
        }
    }
    id_index_.emplace(v.id, static_cast<Index>(vertices_.size()));
    VertexId id = v.id;
    vertices_.push_back(std::move(v));
    return id;
}

void StateGraph::restore_vertex(Vertex v) {
    require_unsealed();
    validate_vertex(v);
    if (v.id > kVertexIdMask) fail(ErrorKind::Invariant, "vertex id out of range: " + std::to_string(v.id));
    if (id_index_.count(v.id)) fail(ErrorKind::Invariant, "duplicate vertex id " + std::to_string(v.id));
    if (v.category == VertexCategory::Entity) {
        if (!entity_keys_.emplace(entity_key(v.dtype, v.value()), v.id).second) {
            fail(ErrorKind::Invariant, "duplicate entity " + v.dtype + "=" + v.value());
        }
    }
    id_index_.emplace(v.id, static_cast<Index>(vertices_.size()));
    vertices_.push_back(std::move(v));
}

void StateGraph::add_edge(const Edge& e) {
    require_unsealed();
    auto s = id_index_.find(e.src);
    auto d = id_index_.find(e.dst);
    if (s == id_index_.end() || d == id_index_.end()) {
        fail(ErrorKind::Invariant, "edge endpoint missing: " + std::to_string(e.src) + " -> " + std::to_string(e.dst));
    }
    const Vertex& a = vertices_[s->second];
    const Vertex& b = vertices_[d->second];
    if (e.kind == EdgeKind::Spatial) {
        if (a.category != VertexCategory::Entity || b.category == VertexCategory::Entity) {
            fail(ErrorKind::Invariant, "spatial edge must run from an entity to a state/event");
        }
    } else {
        if (a.category == VertexCategory::Entity || b.category == VertexCategory::Entity) {
            fail(ErrorKind::Invariant, "temporal edge touches an entity");
        }
        if (*b.ts < *a.ts) fail(ErrorKind::Invariant, "temporal edge points backwards in time");
    }
    edges_.push_back(e);
}

void StateGraph::seal() {
    require_unsealed();
    std::sort(vertices_.begin(), vertices_.end(), [](const Vertex& a, const Vertex& b) { return a.id < b.id; });
    for (Index i = 0; i < vertices_.size(); ++i) id_index_[vertices_[i].id] = i;
    std::sort(edges_.begin(), edges_.end());

    const std::size_t n = vertices_.size();
    const std::size_t m = edges_.size();
    edge_src_.resize(m);
    edge_dst_.resize(m);
    out_offsets_.assign(n + 1, 0);
    in_offsets_.assign(n + 1, 0);
    spatial_offsets_.assign(n + 1, 0);
    for (std::size_t e = 0; e < m; ++e) {
        edge_src_[e] = id_index_.at(edges_[e].src);
        edge_dst_[e] = id_index_.at(edges_[e].dst);
        ++out_offsets_[edge_src_[e] + 1];
        ++in_offsets_[edge_dst_[e] + 1];
        if (edges_[e].kind == EdgeKind::Spatial) {
            ++spatial_offsets_[edge_src_[e] + 1];
            ++spatial_offsets_[edge_dst_[e] + 1];
        }
    }
    std::partial_sum(out_offsets_.begin(), out_offsets_.end(), out_offsets_.begin());
    std::partial_sum(in_offsets_.begin(), in_offsets_.end(), in_offsets_.begin());
    std::partial_sum(spatial_offsets_.begin(), spatial_offsets_.end(), spatial_offsets_.begin());

    in_edges_.resize(m);
    spatial_adj_.resize(spatial_offsets_[n]);
    {
        std::vector<Index> in_fill(in_offsets_.begin(), in_offsets_.end() - 1);
        std::vector<Index> sp_fill(spatial_offsets_.begin(), spatial_offsets_.end() - 1);
        for (std::size_t e = 0; e < m; ++e) {
            in_edges_[in_fill[edge_dst_[e]]++] = static_cast<Index>(e);
            if (edges_[e].kind == EdgeKind::Spatial) {
                spatial_adj_[sp_fill[edge_src_[e]]++] = edge_dst_[e];
                spatial_adj_[sp_fill[edge_dst_[e]]++] = edge_src_[e];
            }
        }
    }
    // Index order equals id order, so sorting indices sorts by id.
    for (std::size_t v = 0; v < n; ++v) {
        auto first = spatial_adj_.begin() + spatial_offsets_[v];
        auto last = spatial_adj_.begin() + spatial_offsets_[v + 1];
        std::sort(first, last);
    }

    value_index_.clear();
    max_time_.reset();
    for (Index i = 0; i < n; ++i) {
        const Vertex& v = vertices_[i];
        if (v.category == VertexCategory::Entity) {
            value_index_[v.value()].push_back(i);
        } else if (!max_time_ || *v.ts > *max_time_) {
            max_time_ = v.ts;
        }
    }

    time_order_.clear();
    time_slices_.assign(n, {});
    for (Index i = 0; i < n; ++i) {
        if (vertices_[i].category != VertexCategory::Entity) continue;
        std::vector<Index> assoc;
        for (Index e = out_offsets_[i]; e < out_offsets_[i + 1]; ++e) {
            if (edges_[e].kind == EdgeKind::Spatial) assoc.push_back(edge_dst_[e]);
        }
        std::sort(assoc.begin(), assoc.end(), [&](Index a, Index b) {
            const Vertex& va = vertices_[a];
            const Vertex& vb = vertices_[b];
            if (va.dtype != vb.dtype) return va.dtype < vb.dtype;
            if (*va.ts != *vb.ts) return *va.ts < *vb.ts;
            return a < b;
        });
        assoc.erase(std::unique(assoc.begin(), assoc.end()), assoc.end());
        for (std::size_t j = 0; j < assoc.size();) {
            std::size_t k = j;
            while (k < assoc.size() && vertices_[assoc[k]].dtype == vertices_[assoc[j]].dtype) ++k;
            TimeSlice s;
            s.dtype = vertices_[assoc[j]].dtype;
            s.begin = static_cast<Index>(time_order_.size());
            time_order_.insert(time_order_.end(), assoc.begin() + j, assoc.begin() + k);
            s.end = static_cast<Index>(time_order_.size());
            time_slices_[i].push_back(std::move(s));
            j = k;
        }
    }
    sealed_ = true;
}

StateGraph::Index StateGraph::index_of(VertexId id) const {
    auto it = id_index_.find(id);
    return it == id_index_.end() ? npos : it->second;
}

std::pair<StateGraph::Index, StateGraph::Index> StateGraph::out_range(Index v) const {
    require_sealed();
    return {out_offsets_[v], out_offsets_[v + 1]};
}

std::span<const StateGraph::Index> StateGraph::in_edges(Index v) const {
    require_sealed();
    return {in_edges_.data() + in_offsets_[v], in_offsets_[v + 1] - in_offsets_[v]};
}

std::span<const StateGraph::Index> StateGraph::spatial_neighbors(Index v) const {
    require_sealed();
    return {spatial_adj_.data() + spatial_offsets_[v], spatial_offsets_[v + 1] - spatial_offsets_[v]};
}

StateGraph::Index StateGraph::find_entity(std::string_view dtype, std::string_view value) const {
    auto it = entity_keys_.find(entity_key(dtype, value));
    return it == entity_keys_.end() ? npos : index_of(it->second);
}

std::vector<StateGraph::Index> StateGraph::entities_with_value(std::string_view value) const {
    require_sealed();
    auto it = value_index_.find(std::string(value));
    return it == value_index_.end() ? std::vector<Index>{} : it->second;
}

std::vector<StateGraph::Index> StateGraph::entities_of_dtype(std::string_view dtype) const {
    std::vector<Index> out;
    for (Index i = 0; i < vertices_.size(); ++i) {
        if (vertices_[i].category == VertexCategory::Entity && vertices_[i].dtype == dtype) out.push_back(i);
    }
    return out;
}

const std::vector<StateGraph::TimeSlice>& StateGraph::time_slices(Index entity) const {
    require_sealed();
    return time_slices_[entity];
}

std::span<const StateGraph::Index> StateGraph::time_order(const TimeSlice& s) const {
    return {time_order_.data() + s.begin, s.end - s.begin};
}

std::size_t StateGraph::count(VertexCategory c) const {
    return std::count_if(vertices_.begin(), vertices_.end(), [c](const Vertex& v) { return v.category == c; });
}

std::size_t StateGraph::count(EdgeKind k) const {
    return std::count_if(edges_.begin(), edges_.end(), [k](const Edge& e) { return e.kind == k; });
}

void StateGraph::check_invariants() const {
    require_sealed();
    std::size_t entities = 0;
    for (std::size_t i = 0; i < vertices_.size(); ++i) {
        const Vertex& v = vertices_[i];
        validate_vertex(v);
        if (i > 0 && vertices_[i - 1].id >= v.id) fail(ErrorKind::Invariant, "vertex ids not strictly increasing");
        if (v.category == VertexCategory::Entity) {
            ++entities;
            if (find_entity(v.dtype, v.value()) != i) {
                fail(ErrorKind::Invariant, "entity index disagrees for " + v.dtype + "=" + v.value());
            }
        }
    }
    if (entities != entity_keys_.size()) fail(ErrorKind::Invariant, "entity index is not a bijection");
    for (std::size_t e = 0; e < edges_.size(); ++e) {
        const Vertex& a = vertices_[edge_src_[e]];
        const Vertex& b = vertices_[edge_dst_[e]];
        if (a.category == VertexCategory::Entity && b.category == VertexCategory::Entity) {
            fail(ErrorKind::Invariant, "entity-entity edge");
        }
        if (edges_[e].kind == EdgeKind::Spatial) {
            if (a.category != VertexCategory::Entity || b.category == VertexCategory::Entity) {
                fail(ErrorKind::Invariant, "spatial edge without entity source");
            }
        } else {
            if (a.category == VertexCategory::Entity || b.category == VertexCategory::Entity) {
                fail(ErrorKind::Invariant, "temporal edge touches an entity");
            }
            if (*b.ts < *a.ts) fail(ErrorKind::Invariant, "temporal edge points backwards in time");
        }
    }
}

}  // namespace sosg
