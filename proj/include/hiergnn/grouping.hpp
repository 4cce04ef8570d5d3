#pragma once

#include "hiergnn/autograd.hpp"
#include "hiergnn/graph.hpp"
#include "hiergnn/layers.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace hiergnn::grouping {

/// Row softmax of the assignment logits; every row of S sums to one.
ag::Var soft_assignment(const ag::Var& logits);

/// i.i.d. N(0, 0.1) logits: a near-uniform soft start.
ag::Matrix initial_logits(std::size_t n_city, std::size_t n_group, Rng& rng);

/// Per-axis min-max scaling of (lon, lat) to [0, 1]. A degenerate axis maps to 0.
struct LocationScaler {
    graph::Location min{};
    graph::Location max{};

    static LocationScaler fit(std::span<const graph::Location> locations);
    graph::Location apply(const graph::Location& loc) const;
    /// [n x 2] matrix of scaled locations.
    ag::Matrix matrix(std::span<const graph::Location> locations) const;
};

/// f_v: MLP over [X_i || L_i] (or X_i alone when locations are disabled).
class LocationFusion {
public:
    LocationFusion() = default;
    LocationFusion(ParameterSet& params, const std::string& name, std::size_t width, bool use_location, Rng& rng);

    /// x: [rows x width]; locations: [rows x 2] (ignored when disabled).
    ag::Var operator()(const ag::Var& x, const ag::Var& locations) const;
    bool uses_location() const { return use_location_; }
    const Mlp& mlp() const { return mlp_; }

private:
    Mlp mlp_;
    bool use_location_ = true;
};

/// Z = S^T X' for every sample in a stacked batch: x_fused is
/// [batch * n_city x d], s is [n_city x n_group]; returns [batch * n_group x d].
ag::Var cities_to_groups(const ag::Var& x_fused, const ag::Var& s);

/// X1 = S Z' per sample: z is [batch * n_group x d]; returns [batch * n_city x d].
ag::Var groups_to_cities(const ag::Var& s, const ag::Var& z);

struct KMeansResult {
    std::vector<int> labels;
    ag::Matrix assignment;  // one-hot [n x k]
    std::vector<graph::Location> centroids;  // in normalized coordinates
    double inertia = 0.0;
};

struct KMeansOptions {
    std::size_t restarts = 10;
    std::size_t max_iterations = 100;
    double tolerance = 1e-6;
};

/// Lloyd's algorithm on min-max normalized locations with k-means++ seeding;
/// the lowest-inertia restart wins. Empty clusters are re-seeded at the point
/// farthest from its assigned centroid.
KMeansResult kmeans_assignment(std::span<const graph::Location> locations, std::size_t k, std::uint64_t seed,
                               const KMeansOptions& options = {});

}  // namespace hiergnn::grouping
