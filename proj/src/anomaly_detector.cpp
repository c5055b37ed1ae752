#include "sosg/anomaly_detector.hpp"

#include "sosg/parallel.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sosg {

using ojson = nlohmann::ordered_json;

unsigned VmSubgraph::depth_of(Index v) const {
    if (auto it = members.find(v); it != members.end()) return it->second;
    if (auto it = shared_frontier.find(v); it != shared_frontier.end()) return it->second;
    fail(ErrorKind::Internal, "vertex not in subgraph");
}

std::vector<VmSubgraph> extract_subgraphs(const StateGraph& g, const std::vector<Index>& roots, unsigned max_depth,
                                          unsigned threads) {
    if (max_depth < 1) fail(ErrorKind::Config, "max_bfs_depth must be at least 1");
    constexpr std::int32_t kNone = -1;
    constexpr std::int32_t kShared = -2;
    const unsigned workers = resolve_threads(threads);
    std::vector<std::int32_t> owner(g.vertex_count(), kNone);
    std::vector<VmSubgraph> subs(roots.size());
    std::vector<std::vector<Index>> expand(roots.size());
    for (std::size_t i = 0; i < roots.size(); ++i) {
        Index r = roots[i];
        if (r >= g.vertex_count() || g.vertex(r).category != VertexCategory::Entity) {
            fail(ErrorKind::Query, "subgraph root is not an entity vertex");
        }
        if (owner[r] != kNone) fail(ErrorKind::Query, "duplicate subgraph root " + g.vertex(r).value());
        owner[r] = static_cast<std::int32_t>(i);
        subs[i].root = r;
        subs[i].members.emplace(r, 0);
        expand[i].push_back(r);
    }

    for (unsigned d = 0; d < max_depth; ++d) {
        std::vector<std::vector<Index>> reached(roots.size());
        parallel_for(roots.size(), workers, [&](std::size_t i) {
            auto& out = reached[i];
            for (Index v : expand[i]) {
                for (Index w : g.spatial_neighbors(v)) out.push_back(w);
            }
            std::sort(out.begin(), out.end());
            out.erase(std::unique(out.begin(), out.end()), out.end());
        });
        std::vector<std::pair<Index, std::uint32_t>> arrivals;
        for (std::size_t i = 0; i < roots.size(); ++i) {
            for (Index w : reached[i]) arrivals.emplace_back(w, static_cast<std::uint32_t>(i));
        }
        std::sort(arrivals.begin(), arrivals.end());

        std::vector<std::vector<Index>> next(roots.size());
        for (std::size_t a = 0; a < arrivals.size();) {
            std::size_t b = a;
            while (b < arrivals.size() && arrivals[b].first == arrivals[a].first) ++b;
            Index w = arrivals[a].first;
            if (owner[w] == kNone) {
                if (b - a == 1) {
                    std::uint32_t r = arrivals[a].second;
                    owner[w] = static_cast<std::int32_t>(r);
                    subs[r].members.emplace(w, d + 1);
                    next[r].push_back(w);
                } else {
                    owner[w] = kShared;
                    for (std::size_t x = a; x < b; ++x) subs[arrivals[x].second].shared_frontier.emplace(w, d + 1);
                }
            } else {
                for (std::size_t x = a; x < b; ++x) {
                    std::uint32_t r = arrivals[x].second;
                    if (owner[w] != static_cast<std::int32_t>(r)) subs[r].shared_frontier.emplace(w, d + 1);
                }
            }
            a = b;
        }
        expand = std::move(next);
    }

    parallel_for(subs.size(), workers, [&](std::size_t i) {
        VmSubgraph& s = subs[i];
        auto inside = [&](Index x) { return s.members.count(x) || s.shared_frontier.count(x); };
        for (const auto& [v, _] : s.members) {
            auto [first, last] = g.out_range(v);
            for (Index e = first; e < last; ++e) {
                if (inside(g.edge_dst(e))) s.edges.push_back(e);
            }
            for (Index e : g.in_edges(v)) {
                if (inside(g.edge_src(e))) s.edges.push_back(e);
            }
        }
        std::sort(s.edges.begin(), s.edges.end());
        s.edges.erase(std::unique(s.edges.begin(), s.edges.end()), s.edges.end());
    });
    return subs;
}

std::string TripletCode::str() const {
    auto sig = [](const Signature& s) { return std::string(to_string(s.category)) + ":" + s.dtype; };
    return "d" + std::to_string(depth) + "|" + sig(src) + "|" + std::string(to_string(kind)) + "|" + sig(dst);
}

TripletMultiset featurize(const StateGraph& g, const VmSubgraph& sub, bool collapse_events) {
    auto sig = [&](Index v) {
        const Vertex& x = g.vertex(v);
        Signature s{x.category, x.dtype};
        if (collapse_events && x.category == VertexCategory::Event) s.dtype = "*";
        return s;
    };
    TripletMultiset out;
    for (std::size_t e : sub.edges) {
        Index s = g.edge_src(e);
        Index d = g.edge_dst(e);
        ++out[TripletCode{sub.depth_of(s), sig(s), g.edges()[e].kind, sig(d)}];
    }
    return out;
}

std::strong_ordering JaccardDistance::operator<=>(const JaccardDistance& o) const {
    using u128 = unsigned __int128;
    u128 l = static_cast<u128>(num) * (o.den == 0 ? 1 : o.den);
    u128 r = static_cast<u128>(o.num) * (den == 0 ? 1 : den);
    return l <=> r;
}

JaccardDistance generalized_jaccard_exact(const TripletMultiset& a, const TripletMultiset& b) {
    std::uint64_t smin = 0, smax = 0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() || ib != b.end()) {
        if (ib == b.end() || (ia != a.end() && ia->first < ib->first)) {
            smax += ia->second;
            ++ia;
        } else if (ia == a.end() || ib->first < ia->first) {
            smax += ib->second;
            ++ib;
        } else {
            smin += std::min(ia->second, ib->second);
            smax += std::max(ia->second, ib->second);
            ++ia;
            ++ib;
        }
    }
    if (smax == 0) return {0, 1};
    return {smax - smin, smax};
}

double generalized_jaccard(const TripletMultiset& a, const TripletMultiset& b) {
    return generalized_jaccard_exact(a, b).value();
}

bool distance_within(const JaccardDistance& d, double r) {
    if (std::isnan(r) || r < 0) return false;
    if (d.num == 0) return true;
    if (r >= 1.0) return true;
    if (r == 0.0) return false;
    // r = m / 2^s exactly, with m < 2^53.
    int e = 0;
    double f = std::frexp(r, &e);
    auto m = static_cast<std::uint64_t>(std::ldexp(f, 53));
    int s = 53 - e;
    using u128 = unsigned __int128;
    if (s >= 128) return false;
    if (s > 64 && (d.num >> (128 - s)) != 0) return false;
    u128 lhs = static_cast<u128>(d.num) << s;
    u128 rhs = static_cast<u128>(m) * d.den;
    return lhs <= rhs;
}

std::uint64_t default_k(std::size_t n) {
    std::uint64_t k = std::max<std::uint64_t>(2, (2 * static_cast<std::uint64_t>(n) + 99) / 100);
    return n >= 2 ? std::min<std::uint64_t>(k, n - 1) : k;
}

JaccardDistance percentile_radius(const std::vector<TripletMultiset>& features, double p, unsigned threads) {
    const std::size_t n = features.size();
    if (n < 2) fail(ErrorKind::Config, "percentile radius needs at least two subgraphs");
    if (!(p > 0.0 && p <= 1.0)) fail(ErrorKind::Config, "radius percentile must be in (0, 1]");
    std::vector<std::vector<JaccardDistance>> rows(n);
    parallel_for(n, resolve_threads(threads), [&](std::size_t i) {
        for (std::size_t j = i + 1; j < n; ++j) rows[i].push_back(generalized_jaccard_exact(features[i], features[j]));
    });
    std::vector<JaccardDistance> all;
    all.reserve(n * (n - 1) / 2);
    for (auto& r : rows) all.insert(all.end(), r.begin(), r.end());
    auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(all.size())));
    rank = std::clamp<std::size_t>(rank, 1, all.size());
    std::nth_element(all.begin(), all.begin() + (rank - 1), all.end());
    return all[rank - 1];
}

std::vector<std::size_t> DetectionResult::flagged() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < verdicts.size(); ++i) {
        if (verdicts[i].flagged) out.push_back(i);
    }
    return out;
}

DetectionResult detect(const std::vector<TripletMultiset>& features, const DetectionParams& params) {
    const std::size_t n = features.size();
    if (n < 2) fail(ErrorKind::Config, "detection needs at least two subgraphs");
    DetectionResult res;
    res.k = params.k ? *params.k : default_k(n);
    if (res.k < 1) fail(ErrorKind::Config, "k must be at least 1");
    if (params.r) {
        if (!(*params.r >= 0.0 && *params.r <= 1.0)) fail(ErrorKind::Config, "r must be in [0, 1]");
        res.r = *params.r;
    } else {
        res.r_exact = percentile_radius(features, params.r_percentile, params.threads);
        res.r = res.r_exact->value();
    }
    auto within = [&](const JaccardDistance& d) { return res.r_exact ? d <= *res.r_exact : distance_within(d, res.r); };

    res.verdicts.resize(n);
    parallel_for(n, resolve_threads(params.threads), [&](std::size_t i) {
        std::vector<NeighborInfo> row;
        row.reserve(n - 1);
        VmVerdict& v = res.verdicts[i];
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            NeighborInfo info{j, generalized_jaccard_exact(features[i], features[j])};
            if (within(info.distance)) ++v.neighbor_count;
            row.push_back(info);
        }
        std::size_t m = std::min(params.nearest, row.size());
        std::partial_sort(row.begin(), row.begin() + m, row.end(), [](const NeighborInfo& a, const NeighborInfo& b) {
            if (a.distance != b.distance) return a.distance < b.distance;
            return a.other < b.other;
        });
        row.resize(m);
        v.nearest = std::move(row);
        v.flagged = v.neighbor_count < res.k;
    });
    return res;
}

AnomalyReport run_detection(const StateGraph& g, const DetectionParams& params, const std::string& root_dtype) {
    AnomalyReport rep;
    rep.params = params;
    rep.roots = g.entities_of_dtype(root_dtype);
    if (rep.roots.empty()) fail(ErrorKind::Query, "no entities of type '" + root_dtype + "' to use as roots");
    if (rep.roots.size() < 2) fail(ErrorKind::Query, "detection needs at least two '" + root_dtype + "' entities");
    rep.subgraphs = extract_subgraphs(g, rep.roots, params.max_bfs_depth, params.threads);
    rep.features.resize(rep.subgraphs.size());
    parallel_for(rep.subgraphs.size(), resolve_threads(params.threads), [&](std::size_t i) {
        rep.features[i] = featurize(g, rep.subgraphs[i], params.collapse_events);
    });
    rep.result = detect(rep.features, params);
    return rep;
}

namespace {

struct CodeDeviation {
    TripletCode code;
    std::uint64_t count;
    double median;
    double diff;
};

/// Codes of `f` furthest above and below the population median.
std::pair<std::vector<CodeDeviation>, std::vector<CodeDeviation>> deviations(const AnomalyReport& rep,
                                                                             const TripletMultiset& f,
                                                                             std::size_t top) {
    std::map<TripletCode, std::vector<std::uint64_t>> counts;
    for (const auto& feat : rep.features) {
        for (const auto& [c, _] : feat) counts.emplace(c, std::vector<std::uint64_t>{});
    }
    for (auto& [c, v] : counts) {
        for (const auto& feat : rep.features) {
            auto it = feat.find(c);
            v.push_back(it == feat.end() ? 0 : it->second);
        }
        std::sort(v.begin(), v.end());
    }
    std::vector<CodeDeviation> over, under;
    for (const auto& [c, v] : counts) {
        std::size_t n = v.size();
        double median = n % 2 ? static_cast<double>(v[n / 2]) : (static_cast<double>(v[n / 2 - 1]) + v[n / 2]) / 2.0;
        auto it = f.find(c);
        std::uint64_t mine = it == f.end() ? 0 : it->second;
        double diff = static_cast<double>(mine) - median;
        if (diff > 0) over.push_back({c, mine, median, diff});
        if (diff < 0) under.push_back({c, mine, median, diff});
    }
    auto by_magnitude = [](const CodeDeviation& a, const CodeDeviation& b) {
        if (std::abs(a.diff) != std::abs(b.diff)) return std::abs(a.diff) > std::abs(b.diff);
        return a.code < b.code;
    };
    std::sort(over.begin(), over.end(), by_magnitude);
    std::sort(under.begin(), under.end(), by_magnitude);
    if (over.size() > top) over.resize(top);
    if (under.size() > top) under.resize(top);
    return {over, under};
}

ojson deviation_json(const std::vector<CodeDeviation>& v) {
    ojson a = ojson::array();
    for (const auto& d : v) a.push_back({{"code", d.code.str()}, {"count", d.count}, {"median", d.median}});
    return a;
}

const std::string& root_label(const StateGraph& g, const AnomalyReport& rep, std::size_t i) {
    return g.vertex(rep.roots[i]).value();
}

}  // namespace

std::string report_to_json(const StateGraph& g, const AnomalyReport& rep) {
    const auto& res = rep.result;
    ojson j;
    j["params"] = {{"k", res.k},
                   {"r", res.r},
                   {"r_source", res.r_exact ? "percentile" : "explicit"},
                   {"r_percentile", rep.params.r_percentile},
                   {"max_bfs_depth", rep.params.max_bfs_depth},
                   {"collapse_events", rep.params.collapse_events}};
    j["population"] = rep.roots.size();
    ojson flagged = ojson::array();
    for (std::size_t i : res.flagged()) flagged.push_back(root_label(g, rep, i));
    j["flagged"] = flagged;
    ojson vms = ojson::array();
    for (std::size_t i = 0; i < rep.roots.size(); ++i) {
        const auto& v = res.verdicts[i];
        ojson nearest = ojson::array();
        for (const auto& nb : v.nearest) {
            nearest.push_back({{"vm", root_label(g, rep, nb.other)}, {"distance", nb.distance.value()}});
        }
        vms.push_back({{"vm", root_label(g, rep, i)},
                       {"id", g.vertex(rep.roots[i]).id},
                       {"neighbor_count", v.neighbor_count},
                       {"flagged", v.flagged},
                       {"nearest", nearest}});
    }
    j["vms"] = vms;
    ojson evidence = ojson::array();
    for (std::size_t i : res.flagged()) {
        const auto& sub = rep.subgraphs[i];
        auto [over, under] = deviations(rep, rep.features[i], 5);
        evidence.push_back({{"vm", root_label(g, rep, i)},
                            {"members", sub.members.size()},
                            {"shared_frontier", sub.shared_frontier.size()},
                            {"edges", sub.edges.size()},
                            {"over_represented", deviation_json(over)},
                            {"under_represented", deviation_json(under)}});
    }
    j["evidence"] = evidence;
    return j.dump(2, ' ', false, ojson::error_handler_t::replace) + "\n";
}

std::string report_to_table(const StateGraph& g, const AnomalyReport& rep) {
    std::ostringstream os;
    const auto& res = rep.result;
    os << "population " << rep.roots.size() << "  k " << res.k << "  r " << res.r << "  flagged "
       << res.flagged().size() << '\n';
    for (std::size_t i = 0; i < rep.roots.size(); ++i) {
        const auto& v = res.verdicts[i];
        os << (v.flagged ? "FLAG " : "     ") << root_label(g, rep, i) << "  neighbors " << v.neighbor_count;
        if (!v.nearest.empty()) os << "  nearest " << v.nearest.front().distance.value();
        os << '\n';
    }
    return os.str();
}

std::string report_to_dot(const StateGraph& g, const AnomalyReport& rep) {
    std::ostringstream os;
    os << "digraph anomalies {\n";
    for (std::size_t i : rep.result.flagged()) {
        const auto& sub = rep.subgraphs[i];
        os << "  subgraph cluster_" << i << " {\n    label=\"" << root_label(g, rep, i) << "\";\n";
        auto node = [&](Index v, bool shared) {
            const Vertex& x = g.vertex(v);
            const char* shape = x.category == VertexCategory::Entity ? "ellipse"
                                : x.category == VertexCategory::State ? "box"
                                                                       : "diamond";
            os << "    c" << i << "_" << x.id << " [shape=" << shape << ", label=\"" << x.dtype << "\""
               << (shared ? ", style=dashed" : "") << "];\n";
        };
        for (const auto& [v, _] : sub.members) node(v, false);
        for (const auto& [v, _] : sub.shared_frontier) node(v, true);
        for (std::size_t e : sub.edges) {
            const Edge& ed = g.edges()[e];
            os << "    c" << i << "_" << ed.src << " -> c" << i << "_" << ed.dst
               << (ed.kind == EdgeKind::Temporal ? " [style=bold]" : "") << ";\n";
        }
        os << "  }\n";
    }
    os << "}\n";
    return os.str();
}

}  // namespace sosg
