#pragma once

// Minimal reverse-mode automatic differentiation over dense row-major
// double matrices. Every value is 2-D; vectors are 1xN or Nx1 matrices.

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace hiergnn::ag {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;
using Index = Eigen::Index;

struct Node {
    Matrix value;
    Matrix grad;  // allocated lazily during backward
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward_fn;

    Matrix& grad_buffer();
};

/// Handle to a node in the computation graph. Cheap to copy.
class Var {
public:
    Var() = default;
    explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

    /// Leaf constant (no gradient).
    static Var constant(Matrix value);
    /// Leaf parameter (accumulates gradient).
    static Var parameter(Matrix value);

    const Matrix& value() const { return node_->value; }
    Matrix& mutable_value() { return node_->value; }
    /// Gradient of the last backward pass; zeros if none reached this node.
    Matrix grad() const;
    bool has_grad() const { return node_->grad.size() > 0; }
    void zero_grad() { node_->grad.resize(0, 0); }

    bool requires_grad() const { return node_ && node_->requires_grad; }
    Index rows() const { return node_->value.rows(); }
    Index cols() const { return node_->value.cols(); }
    bool defined() const { return static_cast<bool>(node_); }

    /// Same value, cut from the graph.
    Var detach() const { return constant(node_->value); }

    /// Seeds d(this)/d(this) = 1 (this must be 1x1) and propagates.
    void backward() const;

    const std::shared_ptr<Node>& node() const { return node_; }
    bool same_node(const Var& other) const { return node_ == other.node_; }

private:
    std::shared_ptr<Node> node_;
};

// -- elementwise / linear algebra -------------------------------------------

Var matmul(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var scale(const Var& a, double factor);
/// a + bias, where bias is 1 x cols and broadcast over rows.
Var add_row_broadcast(const Var& a, const Var& bias);
/// a + pattern, where pattern has block_rows rows and is tiled over a's rows.
Var add_tiled_constant(const Var& a, const Matrix& pattern);
Var relu(const Var& a);
Var softmax_rows(const Var& a);

// -- shape / indexing ---------------------------------------------------------

Var concat_cols(std::span<const Var> parts);
Var concat_cols(std::initializer_list<Var> parts);
/// out[r] = a[index[r]]
Var gather_rows(const Var& a, std::span<const Index> index);
/// out[index[r]] += a[r]; out has n_out rows. Empty segments are zero rows.
Var scatter_add_rows(const Var& a, std::span<const Index> index, Index n_out);
/// Mean of each consecutive block of block_rows rows.
Var block_mean_rows(const Var& a, Index block_rows);
Var zeros_like_rows(Index rows, Index cols);

// -- structured ops -----------------------------------------------------------

/// Row-wise layer normalization with per-column gain and bias (1 x cols).
Var layer_norm_rows(const Var& a, const Var& gain, const Var& bias, double eps = 1e-5);

/// x is a vertical stack of blocks; each block is multiplied on the left by
/// m (or m^T when transpose is set). m: [r x c]; block height c (r if transposed).
Var block_left_matmul(const Var& m, const Var& x, bool transpose);

/// Multi-head scaled dot-product attention over consecutive sequences of
/// seq_len rows. q, k, v: [n_seq*seq_len x width]; width divisible by heads.
Var multi_head_attention(const Var& q, const Var& k, const Var& v, Index seq_len, Index heads);
/// The row-stochastic maps multi_head_attention applies, ordered (sequence, head).
std::vector<Matrix> attention_probabilities(const Matrix& q, const Matrix& k, Index seq_len, Index heads);

// -- reductions ---------------------------------------------------------------

/// Mean absolute difference over all entries; returns 1x1.
Var mean_abs_error(const Var& pred, const Matrix& target);
/// sum(a .* weights); returns 1x1.
Var weighted_sum(const Var& a, const Matrix& weights);
Var sum_all(const Var& a);

}  // namespace hiergnn::ag
