#pragma once

#include "hiergnn/model.hpp"
#include "support.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace testsupport {

/// Four cities: 0-1-2 chained within 250 km, 3 far away and isolated.
inline std::vector<hiergnn::graph::Location> tiny_locations() {
    return {{116.0, 40.0}, {117.5, 40.3}, {119.0, 40.1}, {104.0, 30.6}};
}

/// Small widths so scalar oracles and finite differences stay fast.
inline hiergnn::ModelConfig tiny_config(hiergnn::Variant variant = hiergnn::Variant::Full, std::uint64_t seed = 3) {
    hiergnn::ModelConfig c;
    c.n_city = 4;
    c.n_group = 2;
    c.tau_in = 4;
    c.tau_out = 2;
    c.hidden = 8;
    c.heads = 2;
    c.ff_width = 6;
    c.attr_dim = 3;
    c.month_dim = 2;
    c.day_of_week_dim = 2;
    c.hour_dim = 2;
    c.variant = variant;
    c.seed = seed;
    return c;
}

/// Random normalized-looking batch for a model configuration.
inline hiergnn::Batch random_batch(const hiergnn::ModelConfig& c, std::size_t size, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    hiergnn::Batch b;
    b.size = size;
    b.history = random_matrix(Index(size * c.n_city * c.tau_in), Index(hiergnn::data::kRawFeatures), rng);
    b.target = random_matrix(Index(size * c.n_city), Index(c.tau_out), rng);
    std::uniform_int_distribution<int> month(0, 11), dow(0, 6), hour(0, 23);
    for (std::size_t i = 0; i < size; ++i) b.time.push_back({month(rng), dow(rng), hour(rng)});
    return b;
}

/// Loss with the decoder's S pinned to `s_decoder`. The decoder consumes S
/// detached, so this is the function whose exact gradient backpropagation
/// returns; finite differences of model.loss would also see the decoder move.
inline hiergnn::ag::Var loss_with_decoder_assignment(const hiergnn::Model& model, const hiergnn::Batch& batch,
                                                    const hiergnn::ag::Matrix& s_decoder) {
    const auto enc = model.encode(batch);
    const auto dec = model.decode(enc.x3, hiergnn::ag::Var::constant(s_decoder), enc.correlations, batch.size);
    return hiergnn::ag::mean_abs_error(model.forecast_head(dec), batch.target);
}

/// Moves a freshly built model to a point suited to finite-difference checks.
/// At the default initialization each layer contracts its input and the bias
/// terms dominate, so most gradients sit under the difference floor. Weights
/// scaled to variance 1/in and biases shrunk tenfold keep every tensor resolvable.
inline void condition_for_gradient_check(hiergnn::ParameterSet& params) {
    for (auto& p : params.all()) {
        if (p.name.ends_with(".weight")) p.var.mutable_value() *= std::sqrt(3.0);
        if (p.name.ends_with(".bias")) p.var.mutable_value() *= 0.1;
    }
}

}  // namespace testsupport
