#include "hiergnn/grouping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace hiergnn::grouping {

ag::Var soft_assignment(const ag::Var& logits) { return ag::softmax_rows(logits); }

ag::Matrix initial_logits(std::size_t n_city, std::size_t n_group, Rng& rng) {
    std::normal_distribution<double> dist(0.0, 0.1);
    ag::Matrix m(n_city, n_group);
    for (ag::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
    return m;
}

LocationScaler LocationScaler::fit(std::span<const graph::Location> locations) {
    LocationScaler s;
    if (locations.empty()) return s;
    s.min = s.max = locations.front();
    for (const auto& l : locations) {
        for (int a = 0; a < 2; ++a) {
            s.min[a] = std::min(s.min[a], l[a]);
            s.max[a] = std::max(s.max[a], l[a]);
        }
    }
    return s;
}

graph::Location LocationScaler::apply(const graph::Location& loc) const {
    graph::Location out{};
    for (int a = 0; a < 2; ++a) {
        const double range = max[a] - min[a];
        out[a] = range > 0.0 ? (loc[a] - min[a]) / range : 0.0;
    }
    return out;
}

ag::Matrix LocationScaler::matrix(std::span<const graph::Location> locations) const {
    ag::Matrix m(ag::Index(locations.size()), 2);
    for (std::size_t i = 0; i < locations.size(); ++i) {
        const auto l = apply(locations[i]);
        m(ag::Index(i), 0) = l[0];
        m(ag::Index(i), 1) = l[1];
    }
    return m;
}

LocationFusion::LocationFusion(ParameterSet& params, const std::string& name, std::size_t width, bool use_location,
                               Rng& rng)
    : mlp_(params, name, width + (use_location ? 2 : 0), width, width, rng), use_location_(use_location) {}

ag::Var LocationFusion::operator()(const ag::Var& x, const ag::Var& locations) const {
    if (!use_location_) return mlp_(x);
    return mlp_(ag::concat_cols({x, locations}));
}

ag::Var cities_to_groups(const ag::Var& x_fused, const ag::Var& s) {
    return ag::block_left_matmul(s, x_fused, /*transpose=*/true);
}

ag::Var groups_to_cities(const ag::Var& s, const ag::Var& z) {
    return ag::block_left_matmul(s, z, /*transpose=*/false);
}

namespace {

double sq_dist(const graph::Location& a, const graph::Location& b) {
    const double dx = a[0] - b[0], dy = a[1] - b[1];
    return dx * dx + dy * dy;
}

struct Run {
    std::vector<int> labels;
    std::vector<graph::Location> centroids;
    double inertia = 0.0;
};

Run lloyd(const std::vector<graph::Location>& pts, std::size_t k, Rng& rng, const KMeansOptions& options) {
    const std::size_t n = pts.size();
    // k-means++ seeding: first centre uniform, then D^2-weighted.
    std::vector<graph::Location> centroids;
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    centroids.push_back(pts[pick(rng)]);
    std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
    while (centroids.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            nearest[i] = std::min(nearest[i], sq_dist(pts[i], centroids.back()));
            total += nearest[i];
        }
        std::size_t chosen = 0;
        if (total <= 0.0) {
            chosen = pick(rng);
        } else {
            double r = std::uniform_real_distribution<double>(0.0, total)(rng);
            for (chosen = 0; chosen + 1 < n; ++chosen) {
                r -= nearest[chosen];
                if (r < 0.0) break;
            }
        }
        centroids.push_back(pts[chosen]);
    }

    std::vector<int> labels(n, 0);
    for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k; ++c) {
                const double d = sq_dist(pts[i], centroids[c]);
                if (d < best) {
                    best = d;
                    labels[i] = int(c);
                }
            }
        }
        std::vector<graph::Location> updated(k, graph::Location{0.0, 0.0});
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            updated[std::size_t(labels[i])][0] += pts[i][0];
            updated[std::size_t(labels[i])][1] += pts[i][1];
            ++counts[std::size_t(labels[i])];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] > 0) {
                updated[c][0] /= double(counts[c]);
                updated[c][1] /= double(counts[c]);
                continue;
            }
            // Empty cluster: move it to the point lying farthest from its own centroid.
            std::size_t far = 0;
            double far_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double d = sq_dist(pts[i], centroids[std::size_t(labels[i])]);
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            updated[c] = pts[far];
            labels[far] = int(c);
        }
        double shift = 0.0;
        for (std::size_t c = 0; c < k; ++c) shift = std::max(shift, sq_dist(updated[c], centroids[c]));
        centroids = std::move(updated);
        if (std::sqrt(shift) < options.tolerance) break;
    }

    Run run;
    run.labels.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
            const double d = sq_dist(pts[i], centroids[c]);
            if (d < best) {
                best = d;
                run.labels[i] = int(c);
            }
        }
        run.inertia += best;
    }
    run.centroids = std::move(centroids);
    return run;
}

}  // namespace

KMeansResult kmeans_assignment(std::span<const graph::Location> locations, std::size_t k, std::uint64_t seed,
                               const KMeansOptions& options) {
    const std::size_t n = locations.size();
    if (k == 0 || k > n) throw std::invalid_argument("k-means needs 1 <= k <= number of cities");
    const auto scaler = LocationScaler::fit(locations);
    std::vector<graph::Location> pts;
    for (const auto& l : locations) pts.push_back(scaler.apply(l));

    Rng rng(seed);
    Run best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < std::max<std::size_t>(1, options.restarts); ++r) {
        Run run = lloyd(pts, k, rng, options);
        if (run.inertia < best.inertia) best = std::move(run);
    }

    KMeansResult result;
    result.labels = best.labels;
    result.centroids = best.centroids;
    result.inertia = best.inertia;
    result.assignment = ag::Matrix::Zero(ag::Index(n), ag::Index(k));
    for (std::size_t i = 0; i < n; ++i) result.assignment(ag::Index(i), best.labels[i]) = 1.0;
    return result;
}

}  // namespace hiergnn::grouping
