#include "sosg/graph_builder.hpp"

#include "sosg/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <unordered_map>
#include <unordered_set>

namespace sosg {

namespace {

class StepTimer {
public:
    StepTimer(BuildReport& report, std::string name)
        : report_(report), name_(std::move(name)), start_(std::chrono::steady_clock::now()) {}
    ~StepTimer() {
        auto d = std::chrono::steady_clock::now() - start_;
        report_.step_ms[name_] = std::chrono::duration<double, std::milli>(d).count();
    }

private:
    BuildReport& report_;
    std::string name_;
    std::chrono::steady_clock::time_point start_;
};

}  // namespace

nlohmann::ordered_json BuildReport::to_json(bool with_timings) const {
    nlohmann::ordered_json j;
    j["records"] = records;
    j["vertices"] = vertices_by_category;
    j["edges"] = edges_by_kind;
    if (with_timings) j["timings_ms"] = step_ms;
    auto& ids = j["identifiers"] = nlohmann::ordered_json::array();
    for (const auto& s : identifiers) {
        nlohmann::ordered_json e;
        e["key"] = s.key;
        e["accepted"] = s.accepted;
        e["reason"] = s.reason;
        e["kind_count"] = s.kind_count;
        e["occurrence_count"] = s.occurrence_count;
        e["mean_repetition"] = s.mean_repetition;
        e["shape"] = std::string(to_string(s.shape));
        ids.push_back(std::move(e));
    }
    return j;
}

GraphBuilder::GraphBuilder(BuildOptions options)
    : options_(std::move(options)), threads_(resolve_threads(options_.threads)) {
    options_.policy.validate();
}

void GraphBuilder::build_state_event_vertices(const std::vector<Record>& records) {
    if (stage_ != 0) fail(ErrorKind::Internal, "builder: step 1 already ran");
    StepTimer t(report_, "step1_vertices");
    for (const auto& r : records) options_.registry.category_of(r.source);
    vertices_.resize(records.size());
    parallel_for(records.size(), threads_, [&](std::size_t i) {
        const Record& r = records[i];
        Vertex& v = vertices_[i];
        v.category = options_.registry.category_of(r.source);
        v.dtype = r.source;
        v.ts = r.timestamp;
        v.props = r.props;
        validate_vertex(v);
        v.id = compute_vertex_id(v, r.origin);
    });
    report_.records = records.size();
    stage_ = 1;
}

const std::vector<IdentifierStats>& GraphBuilder::discover_identifiers() {
    if (stage_ != 1) fail(ErrorKind::Internal, "builder: step 2 needs step 1");
    StepTimer t(report_, "step2_identifiers");
    std::vector<KeyStatsAccumulator> partial(chunk_count(vertices_.size(), threads_));
    parallel_chunks(vertices_.size(), threads_, [&](std::size_t begin, std::size_t end, std::size_t c) {
        for (std::size_t i = begin; i < end; ++i) {
            for (const auto& [k, v] : vertices_[i].props) partial[c].add(k, v);
        }
    });
    KeyStatsAccumulator all;
    for (auto& p : partial) all.merge(std::move(p));
    stats_ = all.finish(options_.policy);
    report_.identifiers = stats_;
    stage_ = 2;
    return stats_;
}

void GraphBuilder::materialize_entities_and_spatial_edges() {
    if (stage_ != 2) fail(ErrorKind::Internal, "builder: step 3 needs step 2");
    StepTimer t(report_, "step3_spatial");

    std::unordered_set<std::string> accepted, free_text;
    for (const auto& s : stats_) {
        if (s.accepted) accepted.insert(s.key);
        if (s.shape == ShapeClass::FreeText) free_text.insert(s.key);
    }

    // Distinct (key, value) pairs of accepted keys, in sorted order.
    std::vector<std::pair<std::string, std::string>> pairs;
    {
        std::vector<std::vector<std::pair<std::string, std::string>>> partial(chunk_count(vertices_.size(), threads_));
        parallel_chunks(vertices_.size(), threads_, [&](std::size_t begin, std::size_t end, std::size_t c) {
            for (std::size_t i = begin; i < end; ++i) {
                for (const auto& [k, v] : vertices_[i].props) {
                    if (accepted.count(k)) partial[c].emplace_back(k, v);
                }
            }
            std::sort(partial[c].begin(), partial[c].end());
            partial[c].erase(std::unique(partial[c].begin(), partial[c].end()), partial[c].end());
        });
        for (auto& p : partial) pairs.insert(pairs.end(), p.begin(), p.end());
        std::sort(pairs.begin(), pairs.end());
        pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    }

    entities_.clear();
    entities_.reserve(pairs.size());
    std::unordered_map<std::string, std::vector<std::uint32_t>> by_value;
    for (auto& [k, v] : pairs) {
        Vertex e = make_entity(k, v);
        e.id = compute_vertex_id(e);
        by_value[v].push_back(static_cast<std::uint32_t>(entities_.size()));
        entities_.push_back(std::move(e));
    }

    std::vector<std::vector<Edge>> partial(chunk_count(vertices_.size(), threads_));
    parallel_chunks(vertices_.size(), threads_, [&](std::size_t begin, std::size_t end, std::size_t c) {
        std::vector<std::uint32_t> hits;
        auto lookup = [&](std::string_view value) {
            auto it = by_value.find(std::string(value));
            if (it != by_value.end()) hits.insert(hits.end(), it->second.begin(), it->second.end());
        };
        for (std::size_t i = begin; i < end; ++i) {
            hits.clear();
            for (const auto& [k, v] : vertices_[i].props) {
                lookup(v);
                if (free_text.count(k)) {
                    for (std::string_view tok : tokenize_free_text(v)) lookup(tok);
                }
            }
            std::sort(hits.begin(), hits.end());
            hits.erase(std::unique(hits.begin(), hits.end()), hits.end());
            for (std::uint32_t e : hits) partial[c].push_back(Edge{entities_[e].id, vertices_[i].id, EdgeKind::Spatial});
        }
    });
    spatial_.clear();
    for (auto& p : partial) spatial_.insert(spatial_.end(), p.begin(), p.end());
    stage_ = 3;
}

void GraphBuilder::link_temporal() {
    if (stage_ != 3) fail(ErrorKind::Internal, "builder: step 4 needs step 3");
    StepTimer t(report_, "step4_temporal");

    std::unordered_map<VertexId, std::uint32_t> vindex;
    vindex.reserve(vertices_.size());
    for (std::uint32_t i = 0; i < vertices_.size(); ++i) vindex.emplace(vertices_[i].id, i);

    // Incidences grouped by entity id.
    std::vector<std::pair<VertexId, std::uint32_t>> inc;
    inc.reserve(spatial_.size());
    for (const auto& e : spatial_) inc.emplace_back(e.src, vindex.at(e.dst));
    std::sort(inc.begin(), inc.end());
    std::vector<std::size_t> group_start;
    for (std::size_t i = 0; i < inc.size(); ++i) {
        if (i == 0 || inc[i].first != inc[i - 1].first) group_start.push_back(i);
    }
    group_start.push_back(inc.size());
    const std::size_t groups = group_start.size() - 1;

    std::vector<std::vector<Edge>> partial(chunk_count(groups, threads_));
    parallel_chunks(groups, threads_, [&](std::size_t begin, std::size_t end, std::size_t c) {
        std::vector<std::uint32_t> members;
        for (std::size_t g = begin; g < end; ++g) {
            members.clear();
            for (std::size_t i = group_start[g]; i < group_start[g + 1]; ++i) members.push_back(inc[i].second);
            std::sort(members.begin(), members.end(), [&](std::uint32_t a, std::uint32_t b) {
                const Vertex& va = vertices_[a];
                const Vertex& vb = vertices_[b];
                if (va.dtype != vb.dtype) return va.dtype < vb.dtype;
                if (*va.ts != *vb.ts) return *va.ts < *vb.ts;
                return va.id < vb.id;
            });
            for (std::size_t j = 1; j < members.size(); ++j) {
                const Vertex& prev = vertices_[members[j - 1]];
                const Vertex& cur = vertices_[members[j]];
                if (prev.dtype == cur.dtype) partial[c].push_back(Edge{prev.id, cur.id, EdgeKind::Temporal});
            }
        }
    });
    temporal_.clear();
    for (auto& p : partial) temporal_.insert(temporal_.end(), p.begin(), p.end());
    stage_ = 4;
}

StateGraph GraphBuilder::finish() {
    if (stage_ != 4) fail(ErrorKind::Internal, "builder: finish needs all four steps");
    StepTimer t(report_, "seal");
    StateGraph g;
    g.reserve(vertices_.size() + entities_.size(), spatial_.size() + temporal_.size());
    for (auto& v : vertices_) g.restore_vertex(std::move(v));
    for (auto& e : entities_) g.restore_vertex(std::move(e));
    for (const auto& e : spatial_) g.add_edge(e);
    for (const auto& e : temporal_) g.add_edge(e);
    g.seal();
    vertices_.clear();
    entities_.clear();
    stage_ = 5;

    report_.vertices_by_category = {{"Entity", g.count(VertexCategory::Entity)},
                                    {"Event", g.count(VertexCategory::Event)},
                                    {"State", g.count(VertexCategory::State)}};
    report_.edges_by_kind = {{"spatial", spatial_.size()}, {"temporal", temporal_.size()}};
    return g;
}

BuildResult build_graph(const std::vector<Record>& records, const BuildOptions& options) {
    GraphBuilder b(options);
    b.build_state_event_vertices(records);
    b.discover_identifiers();
    b.materialize_entities_and_spatial_edges();
    b.link_temporal();
    BuildResult r;
    r.graph = b.finish();
    r.report = b.report();
    return r;
}

}  // namespace sosg
