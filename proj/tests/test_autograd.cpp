#include "hiergnn/autograd.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

using namespace hiergnn;
using testsupport::check_gradients;
using testsupport::random_matrix;

namespace {

std::mt19937_64 rng(42);

ag::Var param(ag::Index r, ag::Index c) { return ag::Var::parameter(random_matrix(r, c, rng)); }

// Projects onto fixed random weights so every output entry matters.
ag::Var project(const ag::Var& v) {
    static std::map<std::pair<ag::Index, ag::Index>, ag::Matrix> weights;
    auto key = std::make_pair(v.rows(), v.cols());
    if (!weights.count(key)) {
        std::mt19937_64 local(v.rows() * 131 + v.cols());
        weights[key] = random_matrix(v.rows(), v.cols(), local);
    }
    return ag::weighted_sum(v, weights[key]);
}

void expect_grads(const std::function<ag::Var()>& f, std::vector<std::pair<std::string, ag::Var>> params) {
    const auto report = check_gradients([&] { return project(f()); }, std::move(params));
    EXPECT_TRUE(report.ok()) << report.first_failure;
}

}  // namespace

TEST(Autograd, MatmulAddSubScale) {
    auto a = param(3, 4), b = param(4, 2), c = param(3, 2);
    expect_grads([&] { return ag::scale(ag::sub(ag::add(ag::matmul(a, b), c), c), 1.7); },
                 {{"a", a}, {"b", b}, {"c", c}});
    expect_grads([&] { return ag::sub(ag::matmul(a, b), ag::scale(c, 0.5)); }, {{"c", c}});
}

TEST(Autograd, RowBroadcastAndTiledConstant) {
    auto a = param(6, 3), bias = param(1, 3);
    const ag::Matrix pattern = random_matrix(2, 3, rng);
    expect_grads([&] { return ag::add_tiled_constant(ag::add_row_broadcast(a, bias), pattern); },
                 {{"a", a}, {"bias", bias}});
    const auto out = ag::add_tiled_constant(ag::Var::constant(ag::Matrix::Zero(6, 3)), pattern);
    for (int r = 0; r < 6; ++r) EXPECT_EQ(out.value().row(r), pattern.row(r % 2));
}

TEST(Autograd, ReluAndSoftmax) {
    auto a = param(4, 5);
    expect_grads([&] { return ag::relu(a); }, {{"a", a}});
    expect_grads([&] { return ag::softmax_rows(a); }, {{"a", a}});
    const auto s = ag::softmax_rows(a).value();
    for (int r = 0; r < 4; ++r) EXPECT_NEAR(s.row(r).sum(), 1.0, 1e-12);
}

TEST(Autograd, SoftmaxIsStableForLargeLogits) {
    ag::Matrix m(1, 3);
    m << 1000.0, 1000.0, -1000.0;
    const auto s = ag::softmax_rows(ag::Var::constant(m)).value();
    EXPECT_NEAR(s(0, 0), 0.5, 1e-12);
    EXPECT_NEAR(s(0, 2), 0.0, 1e-12);
}

TEST(Autograd, ConcatGatherScatter) {
    auto a = param(4, 2), b = param(4, 3);
    expect_grads([&] { return ag::concat_cols({a, b, a}); }, {{"a", a}, {"b", b}});
    const std::vector<ag::Index> idx = {3, 0, 0, 2, 1};
    expect_grads([&] { return ag::gather_rows(b, idx); }, {{"b", b}});
    auto m = param(5, 3);
    expect_grads([&] { return ag::scatter_add_rows(m, idx, 6); }, {{"m", m}});
    const auto out = ag::scatter_add_rows(m, idx, 6).value();
    EXPECT_EQ(out.row(5), ag::Matrix::Zero(1, 3));  // empty segment
    EXPECT_NEAR(out(0, 1), m.value()(1, 1) + m.value()(2, 1), 1e-15);
}

TEST(Autograd, BlockMeanRows) {
    auto a = param(6, 2);
    expect_grads([&] { return ag::block_mean_rows(a, 3); }, {{"a", a}});
    const auto out = ag::block_mean_rows(a, 3).value();
    EXPECT_NEAR(out(1, 0), (a.value()(3, 0) + a.value()(4, 0) + a.value()(5, 0)) / 3.0, 1e-15);
}

TEST(Autograd, LayerNorm) {
    auto a = param(3, 5), g = param(1, 5), b = param(1, 5);
    expect_grads([&] { return ag::layer_norm_rows(a, g, b); }, {{"a", a}, {"gain", g}, {"bias", b}});
}

TEST(Autograd, BlockLeftMatmul) {
    auto m = param(3, 2), x = param(6, 4), y = param(4, 4);
    expect_grads([&] { return ag::block_left_matmul(m, x, true); }, {{"m", m}, {"x", x}});
    expect_grads([&] { return ag::block_left_matmul(m, y, false); }, {{"m", m}, {"y", y}});
    const auto out = ag::block_left_matmul(m, y, false).value();
    const ag::Matrix expect = m.value() * y.value().bottomRows(2);
    EXPECT_TRUE(out.bottomRows(3).isApprox(expect, 1e-12));
}

TEST(Autograd, MultiHeadAttention) {
    auto q = param(6, 4), k = param(6, 4), v = param(6, 4);
    expect_grads([&] { return ag::multi_head_attention(q, k, v, 3, 2); }, {{"q", q}, {"k", k}, {"v", v}});
}

TEST(Autograd, MeanAbsErrorAndSums) {
    auto p = param(2, 3);
    const ag::Matrix target = random_matrix(2, 3, rng);
    const auto report = check_gradients([&] { return ag::mean_abs_error(p, target); }, {{"p", p}});
    EXPECT_TRUE(report.ok()) << report.first_failure;
    ag::Matrix pred(1, 2), tgt(1, 2);
    pred << 1, 2;
    tgt << 2, 4;
    EXPECT_DOUBLE_EQ(ag::mean_abs_error(ag::Var::constant(pred), tgt).value()(0, 0), 1.5);
    EXPECT_NEAR(ag::sum_all(p).value()(0, 0), p.value().sum(), 1e-14);
}

TEST(Autograd, SharedSubexpressionAccumulates) {
    auto a = param(2, 2);
    const auto loss = ag::sum_all(ag::add(a, a));
    loss.backward();
    EXPECT_EQ(a.grad(), ag::Matrix::Constant(2, 2, 2.0));
}

TEST(Autograd, DetachBlocksGradient) {
    auto a = param(2, 2);
    ag::sum_all(ag::add(a.detach(), ag::scale(a, 3.0))).backward();
    EXPECT_EQ(a.grad(), ag::Matrix::Constant(2, 2, 3.0));
}

TEST(Autograd, ShapeErrorsThrow) {
    auto a = param(2, 3), b = param(2, 3);
    EXPECT_THROW(ag::matmul(a, b), std::invalid_argument);
    EXPECT_THROW(ag::multi_head_attention(a, b, b, 2, 2), std::invalid_argument);
    EXPECT_THROW(a.backward(), std::invalid_argument);
}
