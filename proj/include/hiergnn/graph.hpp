#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

namespace hiergnn::graph {

class GraphError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// (longitude, latitude) in degrees.
using Location = std::array<double, 2>;

enum class DistanceMetric {
    Haversine,         // great-circle kilometres
    EuclideanDegrees,  // plain Euclidean distance on raw degrees
};

DistanceMetric parse_distance_metric(std::string_view name);
std::string_view distance_metric_name(DistanceMetric metric);

inline constexpr double kEarthRadiusKm = 6371.0;

double haversine_km(const Location& a, const Location& b);
double distance(const Location& a, const Location& b, DistanceMetric metric);

/// Row-major N x N distance matrix.
std::vector<double> pairwise_distance(std::span<const Location> locations,
                                      DistanceMetric metric = DistanceMetric::Haversine);

struct Edge {
    std::size_t src = 0;
    std::size_t dst = 0;
    double weight = 0.0;
};

/// Directed, symmetric, no self-loops. Edges sorted by (src, dst).
struct CityGraph {
    std::size_t n_nodes = 0;
    std::vector<Edge> edges;
    /// incoming[i] lists indices into edges whose dst is i.
    std::vector<std::vector<std::size_t>> incoming;

    bool has_edge(std::size_t src, std::size_t dst) const;
};

/// Edge (i, j) with weight 1/d(i, j) for every pair with 0 < d < radius.
/// Distinct cities at distance 0 are rejected.
CityGraph build_city_graph(std::span<const Location> locations, double radius,
                           DistanceMetric metric = DistanceMetric::Haversine);

/// Complete directed graph without self-loops; per-edge attribute vectors
/// start at zero.
struct GroupGraph {
    std::size_t n_nodes = 0;
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    std::vector<std::vector<double>> edge_attr;
};

GroupGraph build_group_graph(std::size_t n_group, std::size_t attr_dim = 12);

/// `src,dst,weight`
void write_city_graph_csv(const std::filesystem::path& path, const CityGraph& graph);

}  // namespace hiergnn::graph
