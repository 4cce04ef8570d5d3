#pragma once

#include "hiergnn/autograd.hpp"
#include "hiergnn/dataset.hpp"
#include "hiergnn/encoder.hpp"
#include "hiergnn/graph.hpp"
#include "hiergnn/grouping.hpp"
#include "hiergnn/hier_mp.hpp"
#include "hiergnn/layers.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hiergnn {

/// Architecture variants: the full model and its ablations.
enum class Variant {
    Full,    // learned soft grouping, encoded group correlations, location fusion
    Fga,     // no group pathway at all: city-graph message passing only
    Kmeans,  // frozen one-hot grouping from k-means on locations
    NoCe,    // group graph edges carry a shared constant attribute
    NoLoc,   // f_v sees the city representation only
};

Variant parse_variant(std::string_view name);
std::string_view variant_name(Variant variant);

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ModelConfig {
    std::size_t n_city = 0;
    std::size_t n_group = 15;
    std::size_t tau_in = 24;
    std::size_t tau_out = 6;
    std::size_t hidden = 32;
    std::size_t heads = 4;
    std::size_t ff_width = 64;
    std::size_t encoder_blocks = 1;
    std::size_t gnn_layers = 2;
    std::size_t attr_dim = 12;
    std::size_t month_dim = 4;
    std::size_t day_of_week_dim = 4;
    std::size_t hour_dim = 4;
    double radius_km = 250.0;
    graph::DistanceMetric distance = graph::DistanceMetric::Haversine;
    Variant variant = Variant::Full;
    std::uint64_t seed = 0;

    /// Throws ConfigError for inconsistent sizes.
    void validate() const;
    bool operator==(const ModelConfig&) const = default;
};

/// A stacked mini-batch in normalized units.
struct Batch {
    std::size_t size = 0;
    ag::Matrix history;  // [size * n_city * tau_in x features], rows ordered (sample, city, hour)
    ag::Matrix target;   // [size * n_city x tau_out]
    std::vector<data::TimeFeatures> time;  // anchor-hour calendar features per sample
};

Batch make_batch(const data::ObservationPanel& normalized, std::span<const data::WindowedSample> samples);

struct ForwardOptions {
    /// Cuts S out of the encoder-side graph (path-ablation diagnostics).
    bool detach_encoder_assignment = false;
};

struct EncoderOutput {
    ag::Var x;           // self-attention city representations
    ag::Var x3;          // encoder output city representations
    ag::Var assignment;  // S [n_city x n_group]
    ag::Var correlations;  // R [batch * n_group * (n_group - 1) x attr_dim], edge order of the group graph
};

struct ForecastOutput {
    ag::Var predictions;  // normalized AQI [batch * n_city x tau_out]
    ag::Var x_output;
    EncoderOutput encoded;
};

class Model {
public:
    Model(const ModelConfig& config, std::span<const graph::Location> locations);
    Model(const Model&) = delete;
    Model& operator=(const Model&) = delete;
    Model(Model&&) = default;
    Model& operator=(Model&&) = default;

    const ModelConfig& config() const { return config_; }
    ParameterSet& parameters() { return params_; }
    const ParameterSet& parameters() const { return params_; }

    EncoderOutput encode(const Batch& batch, const ForwardOptions& options = {}) const;
    /// The decoder mirrors the encoder from X3 on with its own weights; S is
    /// consumed detached and R verbatim.
    ag::Var decode(const ag::Var& x3, const ag::Var& assignment, const ag::Var& correlations,
                   std::size_t batch_size) const;
    ag::Var forecast_head(const ag::Var& x_output) const;
    ForecastOutput forward(const Batch& batch, const ForwardOptions& options = {}) const;
    /// Mean absolute error in normalized target units.
    ag::Var loss(const ForecastOutput& output, const Batch& batch) const;

    /// Current S values.
    ag::Matrix assignment() const;
    /// Whether the assignment logits are trained (false for fixed-grouping variants).
    bool assignment_trainable() const;

    const graph::CityGraph& city_graph() const { return city_graph_; }
    const graph::GroupGraph& group_graph() const { return group_graph_; }
    const std::vector<graph::Location>& locations() const { return locations_; }
    const grouping::LocationScaler& location_scaler() const { return scaler_; }
    const std::optional<ag::Matrix>& fixed_assignment() const { return fixed_assignment_; }

    // Sub-modules, exposed for inspection and reference implementations.
    const encoder::SequenceEncoder& sequence_encoder() const { return sequence_; }
    const encoder::TimeEmbedding& time_embedding() const { return time_; }
    const ag::Var& assignment_logits() const { return logits_; }
    const grouping::LocationFusion& encoder_location_fusion() const { return enc_fusion_; }
    const hier_mp::GroupCorrelationEncoder& correlation_encoder() const { return correlation_; }
    const hier_mp::MessagePassingStack& encoder_group_mp() const { return enc_group_mp_; }
    const hier_mp::CityFusion& encoder_city_fusion() const { return enc_cat_; }
    const hier_mp::MessagePassingStack& encoder_city_mp() const { return enc_city_mp_; }
    const grouping::LocationFusion& decoder_location_fusion() const { return dec_fusion_; }
    const hier_mp::MessagePassingStack& decoder_group_mp() const { return dec_group_mp_; }
    const hier_mp::CityFusion& decoder_city_fusion() const { return dec_cat_; }
    const hier_mp::MessagePassingStack& decoder_city_mp() const { return dec_city_mp_; }
    const Mlp& head() const { return head_; }

    /// Normalization fitted on the training split; stored in checkpoints.
    data::NormalizationStats normalization{};

    double denormalize_aqi(double value) const { return normalization.denormalize(data::kAqi, value); }

    void save(const std::filesystem::path& path) const;
    /// Builds a model from a checkpoint.
    static Model load(const std::filesystem::path& path);
    /// Loads parameter values into this model; throws ConfigError when the
    /// checkpoint's configuration or locations differ.
    void load_parameters(const std::filesystem::path& path);

    std::vector<ag::Matrix> snapshot() const;
    void restore(const std::vector<ag::Matrix>& values);

private:
    struct BatchStatics {
        hier_mp::EdgeIndex city_edges;
        hier_mp::EdgeIndex group_edges;
        ag::Var edge_weights;
        ag::Var locations;
    };
    const BatchStatics& statics(std::size_t batch_size) const;
    ag::Var current_assignment() const;

    ModelConfig config_;
    std::vector<graph::Location> locations_;
    grouping::LocationScaler scaler_;
    graph::CityGraph city_graph_;
    graph::GroupGraph group_graph_;
    std::optional<ag::Matrix> fixed_assignment_;

    ParameterSet params_;
    encoder::SequenceEncoder sequence_;
    encoder::TimeEmbedding time_;
    ag::Var logits_;
    grouping::LocationFusion enc_fusion_;
    hier_mp::GroupCorrelationEncoder correlation_;
    hier_mp::MessagePassingStack enc_group_mp_;
    hier_mp::CityFusion enc_cat_;
    hier_mp::MessagePassingStack enc_city_mp_;
    grouping::LocationFusion dec_fusion_;
    hier_mp::MessagePassingStack dec_group_mp_;
    hier_mp::CityFusion dec_cat_;
    hier_mp::MessagePassingStack dec_city_mp_;
    Mlp head_;

    mutable std::map<std::size_t, std::shared_ptr<BatchStatics>> statics_cache_;
};

/// Mean absolute error between two equally shaped matrices.
double mean_abs_error(const ag::Matrix& pred, const ag::Matrix& target);

}  // namespace hiergnn
