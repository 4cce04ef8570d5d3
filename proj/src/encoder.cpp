#include "hiergnn/encoder.hpp"

#include <cmath>
#include <stdexcept>

namespace hiergnn::encoder {

AttentionResult self_attention_scores(const ag::Matrix& q, const ag::Matrix& k, const ag::Matrix& v,
                                      double d_key) {
    if (q.cols() != k.cols()) throw std::invalid_argument("query/key dimension mismatch");
    if (k.rows() != v.rows()) throw std::invalid_argument("key/value length mismatch");
    AttentionResult result;
    result.weights = (q * k.transpose()) / std::sqrt(d_key);
    for (ag::Index r = 0; r < result.weights.rows(); ++r) {
        auto row = result.weights.row(r);
        row = (row.array() - row.maxCoeff()).exp().matrix();
        row /= row.sum();
    }
    result.output = result.weights * v;
    return result;
}

ag::Matrix sinusoidal_positions(std::size_t len, std::size_t width) {
    ag::Matrix table(len, width);
    for (std::size_t pos = 0; pos < len; ++pos) {
        for (std::size_t i = 0; i < width; ++i) {
            const double rate = std::pow(10000.0, -double(2 * (i / 2)) / double(width));
            table(ag::Index(pos), ag::Index(i)) = (i % 2 == 0) ? std::sin(double(pos) * rate) : std::cos(double(pos) * rate);
        }
    }
    return table;
}

SequenceEncoder::SequenceEncoder(ParameterSet& params, const std::string& name,
                                 const SequenceEncoderConfig& config, Rng& rng)
    : config_(config) {
    if (config.heads == 0 || config.width % config.heads != 0)
        throw std::invalid_argument("attention head count must divide the encoder width");
    const std::size_t w = config.width;
    input_ = Linear(params, name + ".input", config.n_features, w, rng);
    for (std::size_t b = 0; b < config.blocks; ++b) {
        const std::string p = name + ".block" + std::to_string(b);
        EncoderBlock block;
        block.query = Linear(params, p + ".query", w, w, rng);
        block.key = Linear(params, p + ".key", w, w, rng);
        block.value = Linear(params, p + ".value", w, w, rng);
        block.out = Linear(params, p + ".attn_out", w, w, rng);
        block.attn_norm = LayerNorm(params, p + ".attn_norm", w);
        block.ff_in = Linear(params, p + ".ff_in", w, config.ff_width, rng);
        block.ff_out = Linear(params, p + ".ff_out", config.ff_width, w, rng);
        block.ff_norm = LayerNorm(params, p + ".ff_norm", w);
        blocks_.push_back(std::move(block));
    }
    positions_ = config.positional_encoding ? sinusoidal_positions(config.seq_len, w)
                                            : ag::Matrix::Zero(ag::Index(config.seq_len), ag::Index(w));
}

ag::Var SequenceEncoder::run(const ag::Var& history, std::vector<std::vector<ag::Matrix>>* maps) const {
    if (!history.value().allFinite()) throw std::invalid_argument("encoder input contains non-finite values");
    if (history.cols() != ag::Index(config_.n_features) || history.rows() % ag::Index(config_.seq_len) != 0)
        throw std::invalid_argument("encoder input shape does not match configuration");

    ag::Var x = ag::add_tiled_constant(input_(history), positions_);
    for (const auto& block : blocks_) {
        const ag::Var q = block.query(x), k = block.key(x);
        if (maps)
            maps->push_back(ag::attention_probabilities(q.value(), k.value(), ag::Index(config_.seq_len),
                                                        ag::Index(config_.heads)));
        const ag::Var attended =
            ag::multi_head_attention(q, k, block.value(x), ag::Index(config_.seq_len), ag::Index(config_.heads));
        x = block.attn_norm(ag::add(x, block.out(attended)));
        const ag::Var ff = block.ff_out(ag::relu(block.ff_in(x)));
        x = block.ff_norm(ag::add(x, ff));
    }
    return x;
}

ag::Var SequenceEncoder::sequence_outputs(const ag::Var& history) const { return run(history, nullptr); }

std::vector<std::vector<ag::Matrix>> SequenceEncoder::attention_maps(const ag::Var& history) const {
    std::vector<std::vector<ag::Matrix>> maps;
    run(history, &maps);
    return maps;
}

ag::Var SequenceEncoder::operator()(const ag::Var& history) const {
    return ag::block_mean_rows(sequence_outputs(history), ag::Index(config_.seq_len));
}

TimeEmbedding::TimeEmbedding(ParameterSet& params, const std::string& name, const TimeEmbeddingConfig& config,
                             Rng& rng)
    : config_(config),
      month_(params, name + ".month", 12, config.month_dim, rng),
      day_of_week_(params, name + ".day_of_week", 7, config.day_of_week_dim, rng),
      hour_(params, name + ".hour", 24, config.hour_dim, rng) {}

ag::Var TimeEmbedding::operator()(std::span<const data::TimeFeatures> features) const {
    std::vector<ag::Index> month, dow, hour;
    for (const auto& f : features) {
        month.push_back(f.month);
        dow.push_back(f.day_of_week);
        hour.push_back(f.hour);
    }
    return ag::concat_cols({month_(month), day_of_week_(dow), hour_(hour)});
}

}  // namespace hiergnn::encoder
