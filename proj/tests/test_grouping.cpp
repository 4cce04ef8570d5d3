#include "hiergnn/grouping.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

using namespace hiergnn;
using namespace hiergnn::grouping;
using testsupport::check_gradients;
using testsupport::random_matrix;

TEST(SoftAssignment, SpecExamples) {
    ag::Matrix logits(2, 4);
    logits << 0.3, 0.3, 0.3, 0.3, 10, -10, -10, -10;
    const auto s = soft_assignment(ag::Var::constant(logits)).value();
    for (int k = 0; k < 4; ++k) EXPECT_NEAR(s(0, k), 0.25, 1e-15);
    EXPECT_NEAR(s(1, 0), 1.0, 1e-4);
    for (int k = 1; k < 4; ++k) EXPECT_NEAR(s(1, k), 0.0, 1e-4);
}

TEST(SoftAssignment, RowStochasticAndShiftInvariant) {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 50; ++trial) {
        const ag::Matrix logits = random_matrix(6, 5, rng, 3.0);
        const auto s = soft_assignment(ag::Var::constant(logits)).value();
        ag::Matrix shifted = logits;
        std::normal_distribution<double> shift(0.0, 10.0);
        for (int r = 0; r < 6; ++r) shifted.row(r).array() += shift(rng);
        const auto s2 = soft_assignment(ag::Var::constant(shifted)).value();
        for (int r = 0; r < 6; ++r) {
            EXPECT_GE(s.row(r).minCoeff(), 0.0);
            EXPECT_NEAR(s.row(r).sum(), 1.0, 1e-6);
        }
        EXPECT_LE((s - s2).cwiseAbs().maxCoeff(), 1e-7);
    }
}

TEST(SoftAssignment, InitialLogitsAreSmall) {
    Rng rng(2);
    const auto l = initial_logits(200, 15, rng);
    EXPECT_NEAR(std::sqrt(l.squaredNorm() / double(l.size())), 0.1, 0.01);
}

TEST(LocationFusion, SpecExamples) {
    ParameterSet params;
    Rng rng(3);
    LocationFusion fusion(params, "fv", 4, true, rng);
    std::mt19937_64 data(3);
    ag::Matrix x = random_matrix(3, 4, data), loc = random_matrix(3, 2, data);
    x.row(2) = x.row(0);
    loc.row(2) = loc.row(0);
    auto out = fusion(ag::Var::constant(x), ag::Var::constant(loc)).value();
    EXPECT_EQ(out.row(0), out.row(2));

    const auto& mlp = fusion.mlp();
    for (const Linear* l : {&mlp.hidden, &mlp.output}) ag::Var(l->weight).mutable_value().setZero();
    ag::Var(mlp.output.bias).mutable_value() << 1, 2, 3, 4;
    out = fusion(ag::Var::constant(x), ag::Var::constant(loc)).value();
    for (int r = 0; r < 3; ++r) EXPECT_EQ(out.row(r), mlp.output.bias.value().row(0));
}

TEST(LocationFusion, GradientWrtLocations) {
    ParameterSet params;
    Rng rng(4);
    LocationFusion fusion(params, "fv", 4, true, rng);
    std::mt19937_64 data(4);
    const ag::Var x = ag::Var::constant(random_matrix(3, 4, data));
    ag::Var loc = ag::Var::parameter(random_matrix(3, 2, data));
    const ag::Matrix w = random_matrix(3, 4, data);
    std::vector<std::pair<std::string, ag::Var>> checked = {{"locations", loc}};
    for (const auto& p : params.all()) checked.emplace_back(p.name, p.var);
    const auto report = check_gradients([&] { return ag::weighted_sum(fusion(x, loc), w); }, checked);
    EXPECT_TRUE(report.ok()) << report.first_failure;
}

TEST(LocationFusion, DisabledIgnoresLocations) {
    ParameterSet params;
    Rng rng(5);
    LocationFusion fusion(params, "fv", 4, false, rng);
    EXPECT_EQ(fusion.mlp().hidden.in_features(), 4u);
    std::mt19937_64 data(5);
    const ag::Var x = ag::Var::constant(random_matrix(3, 4, data));
    EXPECT_EQ(fusion(x, ag::Var::constant(random_matrix(3, 2, data))).value(),
              fusion(x, ag::Var::constant(random_matrix(3, 2, data))).value());
}

TEST(LocationScaler, MinMax) {
    const std::vector<graph::Location> locs = {{100, 30}, {110, 35}, {105, 40}};
    const auto s = LocationScaler::fit(locs);
    const auto m = s.matrix(locs);
    EXPECT_DOUBLE_EQ(m(0, 0), 0.0);
    EXPECT_DOUBLE_EQ(m(1, 0), 1.0);
    EXPECT_DOUBLE_EQ(m(2, 0), 0.5);
    EXPECT_DOUBLE_EQ(m(2, 1), 1.0);
    const std::vector<graph::Location> one = {{5, 5}};
    EXPECT_EQ(LocationScaler::fit(one).matrix(one), ag::Matrix::Zero(1, 2));
}

namespace {

ag::Matrix loop_s_transpose_x(const ag::Matrix& s, const ag::Matrix& x) {
    ag::Matrix z = ag::Matrix::Zero(s.cols(), x.cols());
    for (ag::Index j = 0; j < s.cols(); ++j)
        for (ag::Index i = 0; i < s.rows(); ++i)
            for (ag::Index c = 0; c < x.cols(); ++c) z(j, c) += s(i, j) * x(i, c);
    return z;
}

ag::Matrix loop_s_z(const ag::Matrix& s, const ag::Matrix& z) {
    ag::Matrix x = ag::Matrix::Zero(s.rows(), z.cols());
    for (ag::Index i = 0; i < s.rows(); ++i)
        for (ag::Index j = 0; j < s.cols(); ++j)
            for (ag::Index c = 0; c < z.cols(); ++c) x(i, c) += s(i, j) * z(j, c);
    return x;
}

}  // namespace

TEST(GroupTransforms, MatchLoopOracles) {
    std::mt19937_64 rng(6);
    for (auto [n, g] : {std::pair{3, 2}, std::pair{5, 3}}) {
        for (int trial = 0; trial < 10; ++trial) {
            const ag::Matrix s = soft_assignment(ag::Var::constant(random_matrix(n, g, rng))).value();
            const ag::Matrix x = random_matrix(2 * n, 4, rng);
            const ag::Matrix z = random_matrix(2 * g, 4, rng);
            const auto zs = cities_to_groups(ag::Var::constant(x), ag::Var::constant(s)).value();
            const auto xs = groups_to_cities(ag::Var::constant(s), ag::Var::constant(z)).value();
            for (int b = 0; b < 2; ++b) {
                EXPECT_LE((zs.middleRows(b * g, g) - loop_s_transpose_x(s, x.middleRows(b * n, n))).cwiseAbs().maxCoeff(), 1e-6);
                EXPECT_LE((xs.middleRows(b * n, n) - loop_s_z(s, z.middleRows(b * g, g))).cwiseAbs().maxCoeff(), 1e-6);
            }
        }
    }
}

TEST(GroupTransforms, OneHotAndUniformCases) {
    std::mt19937_64 rng(7);
    ag::Matrix onehot = ag::Matrix::Zero(4, 3);
    onehot(0, 1) = onehot(1, 1) = onehot(2, 0) = onehot(3, 2) = 1.0;
    const ag::Matrix x = random_matrix(4, 5, rng);
    const auto z = cities_to_groups(ag::Var::constant(x), ag::Var::constant(onehot)).value();
    EXPECT_LE((z.row(1) - (x.row(0) + x.row(1))).cwiseAbs().maxCoeff(), 1e-12);
    // Sole members of their groups round-trip exactly.
    const auto back = groups_to_cities(ag::Var::constant(onehot), ag::Var::constant(z)).value();
    EXPECT_EQ(back.row(2), x.row(2));
    EXPECT_EQ(back.row(3), x.row(3));

    const ag::Matrix uniform = ag::Matrix::Constant(4, 3, 1.0 / 3.0);
    const auto zu = cities_to_groups(ag::Var::constant(x), ag::Var::constant(uniform)).value();
    for (int j = 0; j < 3; ++j) EXPECT_LE((zu.row(j) - x.colwise().sum() / 3.0).cwiseAbs().maxCoeff(), 1e-12);

    const ag::Matrix single = ag::Matrix::Ones(4, 1);
    const ag::Matrix z1 = random_matrix(1, 5, rng);
    const auto x1 = groups_to_cities(ag::Var::constant(single), ag::Var::constant(z1)).value();
    for (int i = 0; i < 4; ++i) EXPECT_EQ(x1.row(i), z1.row(0));
}

TEST(GroupTransforms, Gradients) {
    std::mt19937_64 rng(8);
    ag::Var s = ag::Var::parameter(random_matrix(3, 2, rng)), x = ag::Var::parameter(random_matrix(6, 4, rng));
    ag::Var z = ag::Var::parameter(random_matrix(4, 4, rng));
    const ag::Matrix w1 = random_matrix(4, 4, rng), w2 = random_matrix(6, 4, rng);
    auto report = check_gradients([&] { return ag::weighted_sum(cities_to_groups(x, s), w1); }, {{"s", s}, {"x", x}});
    EXPECT_TRUE(report.ok()) << report.first_failure;
    report = check_gradients([&] { return ag::weighted_sum(groups_to_cities(s, z), w2); }, {{"s", s}, {"z", z}});
    EXPECT_TRUE(report.ok()) << report.first_failure;
}

namespace {

// Partition of points into k labels, canonicalised so label sets compare equal.
std::set<std::set<int>> partition(const std::vector<int>& labels) {
    std::map<int, std::set<int>> groups;
    for (int i = 0; i < int(labels.size()); ++i) groups[labels[i]].insert(i);
    std::set<std::set<int>> out;
    for (auto& [_, g] : groups) out.insert(g);
    return out;
}

double sse(const std::vector<graph::Location>& pts, const std::vector<int>& labels, int k) {
    double total = 0.0;
    for (int c = 0; c < k; ++c) {
        double mx = 0, my = 0;
        int n = 0;
        for (std::size_t i = 0; i < pts.size(); ++i)
            if (labels[i] == c) mx += pts[i][0], my += pts[i][1], ++n;
        if (n == 0) return 1e300;
        mx /= n;
        my /= n;
        for (std::size_t i = 0; i < pts.size(); ++i)
            if (labels[i] == c) total += std::pow(pts[i][0] - mx, 2) + std::pow(pts[i][1] - my, 2);
    }
    return total;
}

}  // namespace

TEST(KMeans, SquareCornersPairAlongEdges) {
    // Unit square: enumerate every 2-partition; the optimum groups opposite
    // edges (two equivalent solutions), never the diagonals.
    const std::vector<graph::Location> pts = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    double best = 1e300;
    std::set<std::set<std::set<int>>> optimal;
    for (int mask = 0; mask < 16; ++mask) {
        std::vector<int> labels(4);
        for (int i = 0; i < 4; ++i) labels[i] = (mask >> i) & 1;
        const double v = sse(pts, labels, 2);
        if (v < best - 1e-12) {
            best = v;
            optimal.clear();
        }
        if (std::abs(v - best) <= 1e-12) optimal.insert(partition(labels));
    }
    ASSERT_EQ(optimal.size(), 2u);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto r = kmeans_assignment(pts, 2, seed);
        EXPECT_TRUE(optimal.count(partition(r.labels))) << "seed " << seed;
        EXPECT_NEAR(r.inertia, best, 1e-12);
    }
}

TEST(KMeans, TrivialCases) {
    std::mt19937_64 rng(9);
    std::vector<graph::Location> pts;
    std::uniform_real_distribution<double> u(0, 10);
    for (int i = 0; i < 7; ++i) pts.push_back({u(rng), u(rng)});
    auto r = kmeans_assignment(pts, 7, 1);
    EXPECT_EQ(std::set<int>(r.labels.begin(), r.labels.end()).size(), 7u);
    EXPECT_EQ(r.assignment.colwise().sum(), ag::Matrix::Ones(1, 7));
    r = kmeans_assignment(pts, 1, 1);
    EXPECT_EQ(r.labels, std::vector<int>(7, 0));
    EXPECT_THROW(kmeans_assignment(pts, 8, 1), std::invalid_argument);
    EXPECT_THROW(kmeans_assignment(pts, 0, 1), std::invalid_argument);
}

TEST(KMeans, OneHotAndRecoversSeparatedClusters) {
    std::mt19937_64 rng(10);
    std::normal_distribution<double> noise(0.0, 0.05);
    std::vector<graph::Location> pts;
    std::vector<int> truth;
    const double centres[3][2] = {{0, 0}, {5, 0}, {0, 5}};
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < 6; ++i) {
            pts.push_back({centres[c][0] + noise(rng), centres[c][1] + noise(rng)});
            truth.push_back(c);
        }
    const auto r = kmeans_assignment(pts, 3, 4);
    EXPECT_EQ(partition(r.labels), partition(truth));
    for (ag::Index i = 0; i < r.assignment.rows(); ++i) {
        EXPECT_EQ(r.assignment.row(i).sum(), 1.0);
        EXPECT_EQ(r.assignment(i, r.labels[std::size_t(i)]), 1.0);
    }
}
