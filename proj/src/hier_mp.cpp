#include "hiergnn/hier_mp.hpp"

#include <stdexcept>

namespace hiergnn::hier_mp {

EdgeIndex batch_edges(const std::vector<std::pair<std::size_t, std::size_t>>& edges, std::size_t n_nodes,
                      std::size_t batch) {
    EdgeIndex index;
    index.nodes_per_sample = n_nodes;
    index.batch = batch;
    index.src.reserve(edges.size() * batch);
    index.dst.reserve(edges.size() * batch);
    for (std::size_t b = 0; b < batch; ++b) {
        const auto offset = ag::Index(b * n_nodes);
        for (const auto& [s, d] : edges) {
            index.src.push_back(offset + ag::Index(s));
            index.dst.push_back(offset + ag::Index(d));
        }
    }
    return index;
}

EdgeIndex batch_edges(const graph::CityGraph& graph, std::size_t batch) {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    pairs.reserve(graph.edges.size());
    for (const auto& e : graph.edges) pairs.emplace_back(e.src, e.dst);
    return batch_edges(pairs, graph.n_nodes, batch);
}

ag::Matrix batch_edge_weights(const graph::CityGraph& graph, std::size_t batch) {
    const auto n = ag::Index(graph.edges.size());
    ag::Matrix w(n * ag::Index(batch), 1);
    for (std::size_t b = 0; b < batch; ++b)
        for (ag::Index e = 0; e < n; ++e) w(ag::Index(b) * n + e, 0) = graph.edges[std::size_t(e)].weight;
    return w;
}

GroupCorrelationEncoder::GroupCorrelationEncoder(ParameterSet& params, const std::string& name, std::size_t width,
                                                 std::size_t time_dim, std::size_t attr_dim, Rng& rng)
    : mlp_(params, name, 2 * width + time_dim, width, attr_dim, rng) {}

ag::Var GroupCorrelationEncoder::operator()(const ag::Var& z, const ag::Var& time, const EdgeIndex& edges) const {
    if (time.rows() != ag::Index(edges.batch)) throw std::invalid_argument("time vector batch mismatch");
    std::vector<ag::Index> sample(edges.edge_count());
    for (std::size_t e = 0; e < sample.size(); ++e) sample[e] = edges.src[e] / ag::Index(edges.nodes_per_sample);
    const ag::Var input = ag::concat_cols({ag::gather_rows(z, edges.src), ag::gather_rows(z, edges.dst),
                                           ag::gather_rows(time, sample)});
    return ag::relu(mlp_(input));
}

MessagePassingLayer::MessagePassingLayer(ParameterSet& params, const std::string& name, std::size_t width,
                                         std::size_t edge_dim, UpdateInput order, Rng& rng)
    : message_(params, name + ".message", 2 * width + edge_dim, width, width, rng),
      update_(params, name + ".update", 2 * width, width, width, rng),
      order_(order) {}

ag::Var MessagePassingLayer::operator()(const ag::Var& nodes, const EdgeIndex& edges,
                                        const ag::Var& edge_attr) const {
    const auto n = ag::Index(edges.node_count());
    if (nodes.rows() != n) throw std::invalid_argument("node count does not match edge index");
    ag::Var aggregate;
    if (edges.edge_count() == 0) {
        aggregate = ag::zeros_like_rows(n, ag::Index(message_.output.out_features()));
    } else {
        const ag::Var input =
            ag::concat_cols({ag::gather_rows(nodes, edges.dst), ag::gather_rows(nodes, edges.src), edge_attr});
        aggregate = ag::scatter_add_rows(message_(input), edges.dst, n);
    }
    if (order_ == UpdateInput::AggregateThenNode) return update_(ag::concat_cols({aggregate, nodes}));
    return update_(ag::concat_cols({nodes, aggregate}));
}

MessagePassingStack::MessagePassingStack(ParameterSet& params, const std::string& name, std::size_t layers,
                                         std::size_t width, std::size_t edge_dim, UpdateInput order, Rng& rng) {
    for (std::size_t l = 0; l < layers; ++l)
        layers_.emplace_back(params, name + ".layer" + std::to_string(l), width, edge_dim, order, rng);
}

ag::Var MessagePassingStack::operator()(const ag::Var& nodes, const EdgeIndex& edges,
                                        const ag::Var& edge_attr) const {
    ag::Var x = nodes;
    for (const auto& layer : layers_) x = layer(x, edges, edge_attr);
    return x;
}

ag::Var group_message_passing(const MessagePassingStack& stack, const ag::Var& z, const EdgeIndex& group_edges,
                              const ag::Var& correlations) {
    return stack(z, group_edges, correlations);
}

ag::Var city_message_passing(const MessagePassingStack& stack, const ag::Var& x2, const EdgeIndex& city_edges,
                             const ag::Var& edge_weights) {
    return stack(x2, city_edges, edge_weights);
}

CityFusion::CityFusion(ParameterSet& params, const std::string& name, std::size_t width, Rng& rng)
    : mlp_(params, name, 2 * width, width, width, rng) {}

ag::Var CityFusion::operator()(const ag::Var& x, const ag::Var& x_group) const {
    return mlp_(ag::concat_cols({x, x_group}));
}

}  // namespace hiergnn::hier_mp
