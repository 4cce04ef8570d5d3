#include "hiergnn/autograd.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace hiergnn::ag {

Matrix& Node::grad_buffer() {
    if (grad.size() == 0) grad = Matrix::Zero(value.rows(), value.cols());
    return grad;
}

namespace {

Var make_result(Matrix value, std::vector<std::shared_ptr<Node>> parents,
                std::function<void(Node&)> backward_fn) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    bool any = false;
    for (const auto& p : parents) any = any || p->requires_grad;
    if (any) {
        node->requires_grad = true;
        node->parents = std::move(parents);
        node->backward_fn = std::move(backward_fn);
    }
    return Var(std::move(node));
}

void check(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("autograd: ") + what);
}

}  // namespace

Var Var::constant(Matrix value) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    return Var(std::move(node));
}

Var Var::parameter(Matrix value) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    node->requires_grad = true;
    return Var(std::move(node));
}

Matrix Var::grad() const {
    if (node_->grad.size() == 0) return Matrix::Zero(node_->value.rows(), node_->value.cols());
    return node_->grad;
}

void Var::backward() const {
    check(node_->value.rows() == 1 && node_->value.cols() == 1, "backward() needs a scalar");
    if (!node_->requires_grad) return;

    // Iterative post-order DFS gives a topological order.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
    visited.insert(node_.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node* parent = node->parents[next++].get();
            if (parent->requires_grad && visited.insert(parent).second) stack.push_back({parent, 0});
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    node_->grad_buffer().setOnes();
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* node = *it;
        if (node->backward_fn && node->grad.size() > 0) node->backward_fn(*node);
    }
    // Free interior gradients; leaves keep theirs.
    for (Node* node : order)
        if (node->backward_fn) node->grad.resize(0, 0);
}

Var matmul(const Var& a, const Var& b) {
    check(a.cols() == b.rows(), "matmul shape mismatch");
    auto pa = a.node(), pb = b.node();
    return make_result(a.value() * b.value(), {pa, pb}, [pa, pb](Node& out) {
        if (pa->requires_grad) pa->grad_buffer().noalias() += out.grad * pb->value.transpose();
        if (pb->requires_grad) pb->grad_buffer().noalias() += pa->value.transpose() * out.grad;
    });
}

Var add(const Var& a, const Var& b) {
    check(a.rows() == b.rows() && a.cols() == b.cols(), "add shape mismatch");
    auto pa = a.node(), pb = b.node();
    return make_result(a.value() + b.value(), {pa, pb}, [pa, pb](Node& out) {
        if (pa->requires_grad) pa->grad_buffer() += out.grad;
        if (pb->requires_grad) pb->grad_buffer() += out.grad;
    });
}

Var sub(const Var& a, const Var& b) {
    check(a.rows() == b.rows() && a.cols() == b.cols(), "sub shape mismatch");
    auto pa = a.node(), pb = b.node();
    return make_result(a.value() - b.value(), {pa, pb}, [pa, pb](Node& out) {
        if (pa->requires_grad) pa->grad_buffer() += out.grad;
        if (pb->requires_grad) pb->grad_buffer() -= out.grad;
    });
}

Var scale(const Var& a, double factor) {
    auto pa = a.node();
    return make_result(a.value() * factor, {pa}, [pa, factor](Node& out) {
        pa->grad_buffer() += out.grad * factor;
    });
}

Var add_row_broadcast(const Var& a, const Var& bias) {
    check(bias.rows() == 1 && bias.cols() == a.cols(), "bias must be 1 x cols");
    auto pa = a.node(), pb = bias.node();
    Matrix value = a.value();
    value.rowwise() += bias.value().row(0);
    return make_result(std::move(value), {pa, pb}, [pa, pb](Node& out) {
        if (pa->requires_grad) pa->grad_buffer() += out.grad;
        if (pb->requires_grad) pb->grad_buffer() += out.grad.colwise().sum();
    });
}

Var add_tiled_constant(const Var& a, const Matrix& pattern) {
    const Index block = pattern.rows();
    check(pattern.cols() == a.cols() && block > 0 && a.rows() % block == 0,
          "tiled constant shape mismatch");
    Matrix value = a.value();
    for (Index start = 0; start < value.rows(); start += block) value.middleRows(start, block) += pattern;
    auto pa = a.node();
    return make_result(std::move(value), {pa}, [pa](Node& out) { pa->grad_buffer() += out.grad; });
}

Var relu(const Var& a) {
    auto pa = a.node();
    return make_result(a.value().cwiseMax(0.0), {pa}, [pa](Node& out) {
        pa->grad_buffer().array() += (pa->value.array() > 0.0).cast<double>() * out.grad.array();
    });
}

Var softmax_rows(const Var& a) {
    Matrix value(a.rows(), a.cols());
    for (Index r = 0; r < a.rows(); ++r) {
        const double peak = a.value().row(r).maxCoeff();
        value.row(r) = (a.value().row(r).array() - peak).exp().matrix();
        value.row(r) /= value.row(r).sum();
    }
    auto pa = a.node();
    return make_result(value, {pa}, [pa](Node& out) {
        const Matrix& y = out.value;
        Matrix& g = pa->grad_buffer();
        for (Index r = 0; r < y.rows(); ++r) {
            const double dot = y.row(r).dot(out.grad.row(r));
            g.row(r).array() += y.row(r).array() * (out.grad.row(r).array() - dot);
        }
    });
}

Var concat_cols(std::span<const Var> parts) {
    check(!parts.empty(), "concat of nothing");
    const Index rows = parts.front().rows();
    Index cols = 0;
    for (const auto& p : parts) {
        check(p.rows() == rows, "concat row mismatch");
        cols += p.cols();
    }
    Matrix value(rows, cols);
    std::vector<std::shared_ptr<Node>> parents;
    std::vector<Index> offsets;
    Index offset = 0;
    for (const auto& p : parts) {
        value.middleCols(offset, p.cols()) = p.value();
        parents.push_back(p.node());
        offsets.push_back(offset);
        offset += p.cols();
    }
    auto captured = parents;
    return make_result(std::move(value), std::move(parents), [captured, offsets](Node& out) {
        for (std::size_t i = 0; i < captured.size(); ++i) {
            auto& p = captured[i];
            if (p->requires_grad) p->grad_buffer() += out.grad.middleCols(offsets[i], p->value.cols());
        }
    });
}

Var concat_cols(std::initializer_list<Var> parts) {
    return concat_cols(std::span<const Var>(parts.begin(), parts.size()));
}

Var gather_rows(const Var& a, std::span<const Index> index) {
    Matrix value(static_cast<Index>(index.size()), a.cols());
    for (std::size_t r = 0; r < index.size(); ++r) {
        check(index[r] >= 0 && index[r] < a.rows(), "gather index out of range");
        value.row(static_cast<Index>(r)) = a.value().row(index[r]);
    }
    auto pa = a.node();
    std::vector<Index> idx(index.begin(), index.end());
    return make_result(std::move(value), {pa}, [pa, idx = std::move(idx)](Node& out) {
        Matrix& g = pa->grad_buffer();
        for (std::size_t r = 0; r < idx.size(); ++r) g.row(idx[r]) += out.grad.row(static_cast<Index>(r));
    });
}

Var scatter_add_rows(const Var& a, std::span<const Index> index, Index n_out) {
    check(static_cast<Index>(index.size()) == a.rows(), "scatter index length mismatch");
    Matrix value = Matrix::Zero(n_out, a.cols());
    for (std::size_t r = 0; r < index.size(); ++r) {
        check(index[r] >= 0 && index[r] < n_out, "scatter index out of range");
        value.row(index[r]) += a.value().row(static_cast<Index>(r));
    }
    auto pa = a.node();
    std::vector<Index> idx(index.begin(), index.end());
    return make_result(std::move(value), {pa}, [pa, idx = std::move(idx)](Node& out) {
        Matrix& g = pa->grad_buffer();
        for (std::size_t r = 0; r < idx.size(); ++r) g.row(static_cast<Index>(r)) += out.grad.row(idx[r]);
    });
}

Var block_mean_rows(const Var& a, Index block_rows) {
    check(block_rows > 0 && a.rows() % block_rows == 0, "block mean shape mismatch");
    const Index n_blocks = a.rows() / block_rows;
    Matrix value(n_blocks, a.cols());
    for (Index b = 0; b < n_blocks; ++b)
        value.row(b) = a.value().middleRows(b * block_rows, block_rows).colwise().sum() / double(block_rows);
    auto pa = a.node();
    return make_result(std::move(value), {pa}, [pa, block_rows](Node& out) {
        Matrix& g = pa->grad_buffer();
        for (Index b = 0; b < out.value.rows(); ++b) {
            const RowVector share = out.grad.row(b) / double(block_rows);
            g.middleRows(b * block_rows, block_rows).rowwise() += share;
        }
    });
}

Var zeros_like_rows(Index rows, Index cols) { return Var::constant(Matrix::Zero(rows, cols)); }

Var layer_norm_rows(const Var& a, const Var& gain, const Var& bias, double eps) {
    const Index cols = a.cols();
    check(gain.rows() == 1 && gain.cols() == cols && bias.rows() == 1 && bias.cols() == cols,
          "layer norm parameter shape mismatch");
    Matrix normalized(a.rows(), cols);
    Eigen::VectorXd inv_std(a.rows());
    for (Index r = 0; r < a.rows(); ++r) {
        const auto row = a.value().row(r).array();
        const double mean = row.mean();
        const double var = (row - mean).square().mean();
        inv_std(r) = 1.0 / std::sqrt(var + eps);
        normalized.row(r) = ((row - mean) * inv_std(r)).matrix();
    }
    Matrix value = normalized.array().rowwise() * gain.value().row(0).array();
    value.rowwise() += bias.value().row(0);
    auto pa = a.node(), pg = gain.node(), pb = bias.node();
    return make_result(std::move(value), {pa, pg, pb},
                       [pa, pg, pb, normalized = std::move(normalized), inv_std](Node& out) {
        if (pg->requires_grad)
            pg->grad_buffer() += (out.grad.array() * normalized.array()).colwise().sum().matrix();
        if (pb->requires_grad) pb->grad_buffer() += out.grad.colwise().sum();
        if (pa->requires_grad) {
            Matrix& g = pa->grad_buffer();
            const double n = double(normalized.cols());
            for (Index r = 0; r < normalized.rows(); ++r) {
                const Eigen::ArrayXXd dxhat =
                    out.grad.row(r).array() * pg->value.row(0).array();
                const double mean_d = dxhat.sum() / n;
                const double mean_dx = (dxhat * normalized.row(r).array()).sum() / n;
                g.row(r).array() +=
                    inv_std(r) * (dxhat - mean_d - normalized.row(r).array() * mean_dx);
            }
        }
    });
}

Var block_left_matmul(const Var& m, const Var& x, bool transpose) {
    const Index in_rows = transpose ? m.rows() : m.cols();
    const Index out_rows = transpose ? m.cols() : m.rows();
    check(in_rows > 0 && x.rows() % in_rows == 0, "block matmul shape mismatch");
    const Index n_blocks = x.rows() / in_rows;
    Matrix value(n_blocks * out_rows, x.cols());
    for (Index b = 0; b < n_blocks; ++b) {
        if (transpose)
            value.middleRows(b * out_rows, out_rows).noalias() =
                m.value().transpose() * x.value().middleRows(b * in_rows, in_rows);
        else
            value.middleRows(b * out_rows, out_rows).noalias() =
                m.value() * x.value().middleRows(b * in_rows, in_rows);
    }
    auto pm = m.node(), px = x.node();
    return make_result(std::move(value), {pm, px},
                       [pm, px, transpose, in_rows, out_rows, n_blocks](Node& out) {
        for (Index b = 0; b < n_blocks; ++b) {
            const auto gout = out.grad.middleRows(b * out_rows, out_rows);
            const auto xb = px->value.middleRows(b * in_rows, in_rows);
            if (pm->requires_grad) {
                if (transpose)
                    pm->grad_buffer().noalias() += xb * gout.transpose();
                else
                    pm->grad_buffer().noalias() += gout * xb.transpose();
            }
            if (px->requires_grad) {
                if (transpose)
                    px->grad_buffer().middleRows(b * in_rows, in_rows).noalias() += pm->value * gout;
                else
                    px->grad_buffer().middleRows(b * in_rows, in_rows).noalias() +=
                        pm->value.transpose() * gout;
            }
        }
    });
}

std::vector<Matrix> attention_probabilities(const Matrix& q, const Matrix& k, Index seq_len, Index heads) {
    const Index width = q.cols();
    check(k.cols() == width && q.rows() == k.rows(), "attention shape mismatch");
    check(heads > 0 && width % heads == 0, "head count must divide width");
    check(seq_len > 0 && q.rows() % seq_len == 0, "rows must be a multiple of seq_len");
    const Index n_seq = q.rows() / seq_len;
    const Index dk = width / heads;
    const double inv_scale = 1.0 / std::sqrt(double(dk));
    std::vector<Matrix> probs(static_cast<std::size_t>(n_seq * heads));
    for (Index s = 0; s < n_seq; ++s) {
        for (Index h = 0; h < heads; ++h) {
            const auto qs = q.block(s * seq_len, h * dk, seq_len, dk);
            const auto ks = k.block(s * seq_len, h * dk, seq_len, dk);
            Matrix p = qs.lazyProduct(ks.transpose()) * inv_scale;
            for (Index r = 0; r < seq_len; ++r) {
                const double peak = p.row(r).maxCoeff();
                p.row(r) = (p.row(r).array() - peak).exp().matrix();
                p.row(r) /= p.row(r).sum();
            }
            probs[static_cast<std::size_t>(s * heads + h)] = std::move(p);
        }
    }
    return probs;
}

Var multi_head_attention(const Var& q, const Var& k, const Var& v, Index seq_len, Index heads) {
    const Index width = q.cols();
    check(v.cols() == width && q.rows() == v.rows(), "attention shape mismatch");
    auto probs = std::make_shared<std::vector<Matrix>>(attention_probabilities(q.value(), k.value(), seq_len, heads));
    const Index n_seq = q.rows() / seq_len;
    const Index dk = width / heads;
    const double inv_scale = 1.0 / std::sqrt(double(dk));

    Matrix value(q.rows(), width);
    for (Index s = 0; s < n_seq; ++s)
        for (Index h = 0; h < heads; ++h)
            value.block(s * seq_len, h * dk, seq_len, dk).noalias() =
                (*probs)[static_cast<std::size_t>(s * heads + h)].lazyProduct(
                    v.value().block(s * seq_len, h * dk, seq_len, dk));
    auto pq = q.node(), pk = k.node(), pv = v.node();
    return make_result(std::move(value), {pq, pk, pv},
                       [pq, pk, pv, probs, seq_len, heads, dk, n_seq, inv_scale](Node& out) {
        for (Index s = 0; s < n_seq; ++s) {
            for (Index h = 0; h < heads; ++h) {
                const Matrix& p = (*probs)[static_cast<std::size_t>(s * heads + h)];
                const auto gout = out.grad.block(s * seq_len, h * dk, seq_len, dk);
                const auto qs = pq->value.block(s * seq_len, h * dk, seq_len, dk);
                const auto ks = pk->value.block(s * seq_len, h * dk, seq_len, dk);
                const auto vs = pv->value.block(s * seq_len, h * dk, seq_len, dk);
                if (pv->requires_grad)
                    pv->grad_buffer().block(s * seq_len, h * dk, seq_len, dk).noalias() +=
                        p.transpose().lazyProduct(gout);
                if (!pq->requires_grad && !pk->requires_grad) continue;
                const Matrix dp = gout.lazyProduct(vs.transpose());
                Matrix dscores(seq_len, seq_len);
                for (Index r = 0; r < seq_len; ++r) {
                    const double dot = p.row(r).dot(dp.row(r));
                    dscores.row(r) = (p.row(r).array() * (dp.row(r).array() - dot)).matrix();
                }
                dscores *= inv_scale;
                if (pq->requires_grad)
                    pq->grad_buffer().block(s * seq_len, h * dk, seq_len, dk).noalias() += dscores.lazyProduct(ks);
                if (pk->requires_grad)
                    pk->grad_buffer().block(s * seq_len, h * dk, seq_len, dk).noalias() +=
                        dscores.transpose().lazyProduct(qs);
            }
        }
    });
}

Var mean_abs_error(const Var& pred, const Matrix& target) {
    check(pred.rows() == target.rows() && pred.cols() == target.cols(), "loss shape mismatch");
    const Matrix diff = pred.value() - target;
    const double n = double(diff.size());
    Matrix value(1, 1);
    value(0, 0) = diff.cwiseAbs().sum() / n;
    auto pp = pred.node();
    return make_result(std::move(value), {pp}, [pp, diff, n](Node& out) {
        pp->grad_buffer().array() += diff.array().sign() * (out.grad(0, 0) / n);
    });
}

Var weighted_sum(const Var& a, const Matrix& weights) {
    check(weights.rows() == a.rows() && weights.cols() == a.cols(), "weighted sum shape mismatch");
    Matrix value(1, 1);
    value(0, 0) = a.value().cwiseProduct(weights).sum();
    auto pa = a.node();
    return make_result(std::move(value), {pa}, [pa, weights](Node& out) {
        pa->grad_buffer() += weights * out.grad(0, 0);
    });
}

Var sum_all(const Var& a) { return weighted_sum(a, Matrix::Ones(a.rows(), a.cols())); }

}  // namespace hiergnn::ag
