#include "hiergnn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hiergnn {

ag::Var ParameterSet::add(std::string name, ag::Matrix init, ParamGroup group) {
    if (contains(name)) throw std::logic_error("duplicate parameter name " + name);
    auto var = ag::Var::parameter(std::move(init));
    params_.push_back({std::move(name), var, group});
    return var;
}

const ag::Var& ParameterSet::get(const std::string& name) const {
    for (const auto& p : params_)
        if (p.name == name) return p.var;
    throw std::out_of_range("no parameter named " + name);
}

bool ParameterSet::contains(const std::string& name) const {
    return std::any_of(params_.begin(), params_.end(), [&](const auto& p) { return p.name == name; });
}

std::size_t ParameterSet::scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += std::size_t(p.var.value().size());
    return n;
}

void ParameterSet::zero_grad() {
    for (auto& p : params_) p.var.zero_grad();
}

namespace {

ag::Matrix uniform_matrix(std::size_t rows, std::size_t cols, double bound, Rng& rng) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    ag::Matrix m(rows, cols);
    for (ag::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
    return m;
}

}  // namespace

Linear::Linear(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out, Rng& rng) {
    const double bound = 1.0 / std::sqrt(double(in));
    weight = params.add(name + ".weight", uniform_matrix(in, out, bound, rng));
    bias = params.add(name + ".bias", uniform_matrix(1, out, bound, rng));
}

ag::Var Linear::operator()(const ag::Var& x) const {
    return ag::add_row_broadcast(ag::matmul(x, weight), bias);
}

Mlp::Mlp(ParameterSet& params, const std::string& name, std::size_t in, std::size_t hidden_width,
         std::size_t out, Rng& rng)
    : hidden(params, name + ".hidden", in, hidden_width, rng),
      output(params, name + ".output", hidden_width, out, rng) {}

ag::Var Mlp::operator()(const ag::Var& x) const { return output(ag::relu(hidden(x))); }

LayerNorm::LayerNorm(ParameterSet& params, const std::string& name, std::size_t width) {
    gain = params.add(name + ".gain", ag::Matrix::Ones(1, ag::Index(width)));
    bias = params.add(name + ".bias", ag::Matrix::Zero(1, ag::Index(width)));
}

ag::Var LayerNorm::operator()(const ag::Var& x) const { return ag::layer_norm_rows(x, gain, bias); }

Embedding::Embedding(ParameterSet& params, const std::string& name, std::size_t count, std::size_t dim, Rng& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    ag::Matrix m(count, dim);
    for (ag::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
    table = params.add(name, std::move(m));
}

ag::Var Embedding::operator()(const std::vector<ag::Index>& indices) const {
    for (auto i : indices)
        if (i < 0 || i >= table.rows())
            throw std::out_of_range("embedding index " + std::to_string(i) + " outside [0, " +
                                    std::to_string(table.rows()) + ")");
    return ag::gather_rows(table, indices);
}

}  // namespace hiergnn
