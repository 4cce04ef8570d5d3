#include "hiergnn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

namespace hiergnn::graph {

DistanceMetric parse_distance_metric(std::string_view name) {
    if (name == "haversine") return DistanceMetric::Haversine;
    if (name == "euclidean_degrees") return DistanceMetric::EuclideanDegrees;
    throw GraphError("unknown distance metric '" + std::string(name) +
                     "' (expected haversine or euclidean_degrees)");
}

std::string_view distance_metric_name(DistanceMetric metric) {
    return metric == DistanceMetric::Haversine ? "haversine" : "euclidean_degrees";
}

double haversine_km(const Location& a, const Location& b) {
    constexpr double kRad = std::numbers::pi / 180.0;
    const double lat1 = a[1] * kRad, lat2 = b[1] * kRad;
    const double dlat = lat2 - lat1;
    const double dlon = (b[0] - a[0]) * kRad;
    const double h = std::sin(dlat / 2) * std::sin(dlat / 2) +
                     std::cos(lat1) * std::cos(lat2) * std::sin(dlon / 2) * std::sin(dlon / 2);
    return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

double distance(const Location& a, const Location& b, DistanceMetric metric) {
    if (metric == DistanceMetric::Haversine) return haversine_km(a, b);
    return std::hypot(a[0] - b[0], a[1] - b[1]);
}

std::vector<double> pairwise_distance(std::span<const Location> locations, DistanceMetric metric) {
    const std::size_t n = locations.size();
    std::vector<double> out(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            out[i * n + j] = out[j * n + i] = distance(locations[i], locations[j], metric);
    return out;
}

bool CityGraph::has_edge(std::size_t src, std::size_t dst) const {
    if (dst >= incoming.size()) return false;
    return std::any_of(incoming[dst].begin(), incoming[dst].end(),
                       [&](std::size_t e) { return edges[e].src == src; });
}

CityGraph build_city_graph(std::span<const Location> locations, double radius, DistanceMetric metric) {
    if (!(radius > 0.0)) throw GraphError("distance threshold must be positive");
    const std::size_t n = locations.size();
    const auto dist = pairwise_distance(locations, metric);

    CityGraph graph;
    graph.n_nodes = n;
    graph.incoming.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double d = dist[i * n + j];
            if (d == 0.0) {
                std::ostringstream msg;
                msg << "cities " << std::min(i, j) << " and " << std::max(i, j)
                    << " share a location; edge weight 1/d is undefined";
                throw GraphError(msg.str());
            }
            if (d < radius) {
                graph.incoming[j].push_back(graph.edges.size());
                graph.edges.push_back({i, j, 1.0 / d});
            }
        }
    }
    return graph;
}

GroupGraph build_group_graph(std::size_t n_group, std::size_t attr_dim) {
    if (n_group == 0) throw GraphError("group graph needs at least one node");
    GroupGraph graph;
    graph.n_nodes = n_group;
    for (std::size_t i = 0; i < n_group; ++i)
        for (std::size_t j = 0; j < n_group; ++j)
            if (i != j) graph.edges.emplace_back(i, j);
    graph.edge_attr.assign(graph.edges.size(), std::vector<double>(attr_dim, 0.0));
    return graph;
}

void write_city_graph_csv(const std::filesystem::path& path, const CityGraph& graph) {
    std::ofstream out(path);
    if (!out) throw GraphError("cannot write " + path.string());
    out << "src,dst,weight\n";
    out.precision(17);
    for (const auto& e : graph.edges) out << e.src << ',' << e.dst << ',' << e.weight << '\n';
}

}  // namespace hiergnn::graph
