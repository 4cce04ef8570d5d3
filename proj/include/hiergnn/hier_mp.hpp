#pragma once

#include "hiergnn/autograd.hpp"
#include "hiergnn/graph.hpp"
#include "hiergnn/layers.hpp"

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace hiergnn::hier_mp {

/// Edge list replicated over a stacked batch: sample b's node v is row
/// b * nodes_per_sample + v.
struct EdgeIndex {
    std::vector<ag::Index> src;
    std::vector<ag::Index> dst;
    std::size_t nodes_per_sample = 0;
    std::size_t batch = 1;

    std::size_t edge_count() const { return src.size(); }
    std::size_t node_count() const { return nodes_per_sample * batch; }
};

EdgeIndex batch_edges(const std::vector<std::pair<std::size_t, std::size_t>>& edges, std::size_t n_nodes,
                      std::size_t batch);
EdgeIndex batch_edges(const graph::CityGraph& graph, std::size_t batch);
/// Edge weights 1/d as a [batch * n_edges x 1] column.
ag::Matrix batch_edge_weights(const graph::CityGraph& graph, std::size_t batch);

/// R_{i,j} = ReLU(enc([Z_i || Z_j || time])) for every directed group edge (i, j).
class GroupCorrelationEncoder {
public:
    GroupCorrelationEncoder() = default;
    GroupCorrelationEncoder(ParameterSet& params, const std::string& name, std::size_t width, std::size_t time_dim,
                            std::size_t attr_dim, Rng& rng);

    /// z: [batch * n_group x width]; time: [batch x time_dim]. Returns [n_edges x attr_dim]
    /// in the order of edges.
    ag::Var operator()(const ag::Var& z, const ag::Var& time, const EdgeIndex& edges) const;
    const Mlp& mlp() const { return mlp_; }

private:
    Mlp mlp_;
};

/// Order of the update MLP input: [r || x] on the group graph, [x || r] on the city graph.
enum class UpdateInput { AggregateThenNode, NodeThenAggregate };

/// One round: m_{s->d} = msg([x_d || x_s || e_{s,d}]), r_d = sum of incoming
/// messages (zero when there are none), x'_d = upd(...).
class MessagePassingLayer {
public:
    MessagePassingLayer() = default;
    MessagePassingLayer(ParameterSet& params, const std::string& name, std::size_t width, std::size_t edge_dim,
                        UpdateInput order, Rng& rng);

    ag::Var operator()(const ag::Var& nodes, const EdgeIndex& edges, const ag::Var& edge_attr) const;

    const Mlp& message() const { return message_; }
    const Mlp& update() const { return update_; }
    UpdateInput order() const { return order_; }

private:
    Mlp message_;
    Mlp update_;
    UpdateInput order_ = UpdateInput::AggregateThenNode;
};

/// Layers with independent parameters applied in sequence over static edge attributes.
class MessagePassingStack {
public:
    MessagePassingStack() = default;
    MessagePassingStack(ParameterSet& params, const std::string& name, std::size_t layers, std::size_t width,
                        std::size_t edge_dim, UpdateInput order, Rng& rng);

    ag::Var operator()(const ag::Var& nodes, const EdgeIndex& edges, const ag::Var& edge_attr) const;
    const std::vector<MessagePassingLayer>& layers() const { return layers_; }

private:
    std::vector<MessagePassingLayer> layers_;
};

/// Group graph: Z' from Z and the encoded correlations R.
ag::Var group_message_passing(const MessagePassingStack& stack, const ag::Var& z, const EdgeIndex& group_edges,
                              const ag::Var& correlations);

/// City graph: X3 from X2 and the 1/d edge weights.
ag::Var city_message_passing(const MessagePassingStack& stack, const ag::Var& x2, const EdgeIndex& city_edges,
                             const ag::Var& edge_weights);

/// cat: X2_i = MLP([X_i || X1_i]).
class CityFusion {
public:
    CityFusion() = default;
    CityFusion(ParameterSet& params, const std::string& name, std::size_t width, Rng& rng);
    ag::Var operator()(const ag::Var& x, const ag::Var& x_group) const;
    const Mlp& mlp() const { return mlp_; }

private:
    Mlp mlp_;
};

}  // namespace hiergnn::hier_mp
