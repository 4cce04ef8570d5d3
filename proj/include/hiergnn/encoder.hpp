#pragma once

#include "hiergnn/autograd.hpp"
#include "hiergnn/dataset.hpp"
#include "hiergnn/layers.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace hiergnn::encoder {

struct AttentionResult {
    ag::Matrix weights;  // [len x len], rows sum to 1
    ag::Matrix output;   // weights * v
};

/// Single-head scaled dot-product attention softmax(q k^T / sqrt(d_key)) v.
AttentionResult self_attention_scores(const ag::Matrix& q, const ag::Matrix& k, const ag::Matrix& v,
                                      double d_key);

/// Standard sin/cos positional table [len x width].
ag::Matrix sinusoidal_positions(std::size_t len, std::size_t width);

struct SequenceEncoderConfig {
    std::size_t n_features = data::kRawFeatures;
    std::size_t width = 32;
    std::size_t heads = 4;
    std::size_t ff_width = 64;
    std::size_t seq_len = 24;
    std::size_t blocks = 1;
    bool positional_encoding = true;
};

struct EncoderBlock {
    Linear query, key, value, out;
    LayerNorm attn_norm;
    Linear ff_in, ff_out;
    LayerNorm ff_norm;
};

/// Transformer-style encoder applied independently to every city sequence,
/// mean-pooled over time.
class SequenceEncoder {
public:
    SequenceEncoder() = default;
    SequenceEncoder(ParameterSet& params, const std::string& name, const SequenceEncoderConfig& config, Rng& rng);

    /// history: [n_seq * seq_len x n_features] -> [n_seq x width].
    /// Throws std::invalid_argument on non-finite input.
    ag::Var operator()(const ag::Var& history) const;

    /// Same pipeline without the final temporal pooling: [n_seq * seq_len x width].
    ag::Var sequence_outputs(const ag::Var& history) const;
    /// Attention maps of every block, each ordered (sequence, head) and [seq_len x seq_len].
    std::vector<std::vector<ag::Matrix>> attention_maps(const ag::Var& history) const;

    const SequenceEncoderConfig& config() const { return config_; }
    const Linear& input() const { return input_; }
    const std::vector<EncoderBlock>& blocks() const { return blocks_; }

private:
    ag::Var run(const ag::Var& history, std::vector<std::vector<ag::Matrix>>* maps) const;

    SequenceEncoderConfig config_;
    Linear input_;
    std::vector<EncoderBlock> blocks_;
    ag::Matrix positions_;
};

struct TimeEmbeddingConfig {
    std::size_t month_dim = 4;
    std::size_t day_of_week_dim = 4;
    std::size_t hour_dim = 4;
    std::size_t dim() const { return month_dim + day_of_week_dim + hour_dim; }
};

/// Learned month / day-of-week / hour vectors, concatenated.
class TimeEmbedding {
public:
    TimeEmbedding() = default;
    TimeEmbedding(ParameterSet& params, const std::string& name, const TimeEmbeddingConfig& config, Rng& rng);

    /// [n x dim]; throws std::out_of_range for indices outside the calendar ranges.
    ag::Var operator()(std::span<const data::TimeFeatures> features) const;
    std::size_t dim() const { return config_.dim(); }

    const Embedding& month() const { return month_; }
    const Embedding& day_of_week() const { return day_of_week_; }
    const Embedding& hour() const { return hour_; }

private:
    TimeEmbeddingConfig config_;
    Embedding month_, day_of_week_, hour_;
};

}  // namespace hiergnn::encoder
