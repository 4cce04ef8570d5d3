#pragma once

#include "hiergnn/autograd.hpp"

#include <cstddef>
#include <random>
#include <string>
#include <vector>

namespace hiergnn {

enum class ParamGroup { Base, AssignmentLogits };

struct NamedParameter {
    std::string name;
    ag::Var var;
    ParamGroup group = ParamGroup::Base;
};

/// Owns every trainable tensor of a model under a unique dotted name.
class ParameterSet {
public:
    ag::Var add(std::string name, ag::Matrix init, ParamGroup group = ParamGroup::Base);

    const std::vector<NamedParameter>& all() const { return params_; }
    std::vector<NamedParameter>& all() { return params_; }
    /// Throws std::out_of_range for unknown names.
    const ag::Var& get(const std::string& name) const;
    bool contains(const std::string& name) const;
    std::size_t scalar_count() const;
    void zero_grad();

private:
    std::vector<NamedParameter> params_;
};

using Rng = std::mt19937_64;

/// y = x W + b, W: [in x out]. Weight and bias start uniform in +-1/sqrt(in).
struct Linear {
    ag::Var weight;
    ag::Var bias;

    Linear() = default;
    Linear(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out, Rng& rng);
    ag::Var operator()(const ag::Var& x) const;
    std::size_t in_features() const { return std::size_t(weight.rows()); }
    std::size_t out_features() const { return std::size_t(weight.cols()); }
};

/// Linear -> ReLU -> Linear.
struct Mlp {
    Linear hidden;
    Linear output;

    Mlp() = default;
    Mlp(ParameterSet& params, const std::string& name, std::size_t in, std::size_t hidden_width,
        std::size_t out, Rng& rng);
    ag::Var operator()(const ag::Var& x) const;
};

struct LayerNorm {
    ag::Var gain;
    ag::Var bias;

    LayerNorm() = default;
    LayerNorm(ParameterSet& params, const std::string& name, std::size_t width);
    ag::Var operator()(const ag::Var& x) const;
};

/// Lookup table [count x dim], N(0, 1) init.
struct Embedding {
    ag::Var table;

    Embedding() = default;
    Embedding(ParameterSet& params, const std::string& name, std::size_t count, std::size_t dim, Rng& rng);
    /// Throws std::out_of_range for an index outside the table.
    ag::Var operator()(const std::vector<ag::Index>& indices) const;
};

}  // namespace hiergnn
