#include "hiergnn/train_eval.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace hiergnn;
namespace fs = std::filesystem;

namespace {

TrainConfig small_config() {
    TrainConfig c;
    c.batch_size = 16;
    c.epochs = 3;
    c.hidden = 8;
    c.heads = 2;
    c.ff_width = 8;
    c.attr_dim = 4;
    c.n_group = 2;
    c.tau_in = 8;
    c.tau_out = 3;
    c.seed = 5;
    return c;
}

PreparedData small_data(std::uint64_t seed = 1) {
    auto syn = data::generate_synthetic({6, 2, 90, seed});
    data::Dataset ds{syn.cities, syn.panel};
    return prepare_data(ds, 8, 3);
}

std::string read(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST(Metrics, ClosedForm) {
    MetricsAccumulator acc(2);
    acc.add(0, 13.0, 10.0);
    acc.add(0, 6.0, 10.0);
    acc.add(1, 1.0, 1.0);
    const auto t = acc.finish("full", "test", 3);
    EXPECT_DOUBLE_EQ(t.horizons[0].mae, 3.5);
    EXPECT_NEAR(t.horizons[0].rmse, std::sqrt(12.5), 1e-12);
    EXPECT_NEAR(t.horizons[0].rmse, 3.5355, 1e-4);
    EXPECT_EQ(t.horizons[1].mae, 0.0);
    EXPECT_EQ(t.horizons[1].rmse, 0.0);
    EXPECT_EQ(t.horizons[1].horizon, 2u);
    EXPECT_DOUBLE_EQ(t.mean_mae(), 1.75);
}

TEST(Metrics, CsvFormat) {
    MetricsAccumulator acc(2);
    acc.add(0, 1.0, 2.0);
    acc.add(1, 1.0, 4.0);
    const std::vector<MetricsTable> tables = {acc.finish("no_ce", "validation", 7)};
    const auto path = fs::temp_directory_path() / "hiergnn_metrics_test.csv";
    write_metrics_csv(path, tables);
    EXPECT_EQ(read(path),
              "variant,split,horizon,mae,rmse,seed\n"
              "no_ce,validation,1,1.000000,1.000000,7\n"
              "no_ce,validation,2,3.000000,3.000000,7\n");
    fs::remove(path);
}

TEST(Evaluate, InvariantToBatchSizeAndOrderAndRmseAboveMae) {
    const auto data = small_data();
    auto cfg = small_config();
    Model model(cfg.model_config(data.cities.size()), data.locations);
    model.normalization = data.stats;
    const auto a = evaluate(model, data.normalized, data.split.test, "test", 5, 64);
    const auto b = evaluate(model, data.normalized, data.split.test, "test", 5, 3);
    auto reversed = data.split.test;
    std::reverse(reversed.begin(), reversed.end());
    const auto c = evaluate(model, data.normalized, reversed, "test", 5, 4);
    ASSERT_EQ(a.horizons.size(), 3u);
    for (std::size_t h = 0; h < 3; ++h) {
        EXPECT_NEAR(a.horizons[h].mae, b.horizons[h].mae, 1e-6);
        EXPECT_NEAR(a.horizons[h].mae, c.horizons[h].mae, 1e-6);
        EXPECT_NEAR(a.horizons[h].rmse, c.horizons[h].rmse, 1e-6);
        EXPECT_GE(a.horizons[h].rmse, a.horizons[h].mae);
        EXPECT_GT(a.horizons[h].mae, 0.0);
    }
}

TEST(Evaluate, RawUnits) {
    // A model that predicts the normalized target exactly reports zero; here we
    // check that raw-unit errors scale with the AQI standard deviation.
    const auto data = small_data();
    auto cfg = small_config();
    Model model(cfg.model_config(data.cities.size()), data.locations);
    model.normalization = data.stats;
    const auto raw = evaluate(model, data.normalized, data.split.validation, "validation", 5);
    model.normalization.stddev[data::kAqi] *= 2.0;
    const auto doubled = evaluate(model, data.normalized, data.split.validation, "validation", 5);
    EXPECT_NEAR(doubled.mean_mae(), 2.0 * raw.mean_mae(), 1e-9);
}

TEST(Train, ZeroLearningRatesLeaveParametersUnchanged) {
    const auto data = small_data();
    auto cfg = small_config();
    cfg.epochs = 1;
    cfg.lr_base = 0.0;
    cfg.lr_logits = 0.0;
    Model model(cfg.model_config(data.cities.size()), data.locations);
    model.normalization = data.stats;
    const auto before = model.snapshot();
    train(model, data.normalized, data.split.train, {}, cfg);
    const auto after = model.snapshot();
    for (std::size_t i = 0; i < before.size(); ++i) EXPECT_EQ(before[i], after[i]);
}

TEST(Train, DeterministicUnderSeed) {
    const auto data = small_data();
    auto cfg = small_config();
    cfg.epochs = 2;
    auto run = [&] {
        Model model(cfg.model_config(data.cities.size()), data.locations);
        model.normalization = data.stats;
        return train(model, data.normalized, data.split.train, data.split.validation, cfg);
    };
    const auto a = run(), b = run();
    EXPECT_NEAR(a.log[0].train_loss, b.log[0].train_loss, 1e-6);
    EXPECT_EQ(a.log[1].val_mae, b.log[1].val_mae);
}

TEST(Train, AssignmentStaysRowStochasticAndBestEpochRestored) {
    const auto data = small_data();
    auto cfg = small_config();
    cfg.epochs = 4;
    Model model(cfg.model_config(data.cities.size()), data.locations);
    model.normalization = data.stats;
    double worst = 0.0;
    TrainHooks hooks;
    hooks.after_step = [&](const Model& m, std::size_t, std::size_t) {
        const auto s = m.assignment();
        for (ag::Index i = 0; i < s.rows(); ++i) worst = std::max(worst, std::abs(s.row(i).sum() - 1.0));
    };
    const auto result = train(model, data.normalized, data.split.train, data.split.validation, cfg, hooks);
    EXPECT_LE(worst, 1e-6);
    ASSERT_EQ(result.log.size(), 4u);
    double best = 1e300;
    std::size_t best_epoch = 0;
    for (const auto& r : result.log)
        if (r.val_mae < best) best = r.val_mae, best_epoch = r.epoch;
    EXPECT_EQ(result.best_epoch, best_epoch);
    EXPECT_EQ(result.best_val_mae, best);
    const auto val = evaluate(model, data.normalized, data.split.validation, "validation", cfg.seed, cfg.batch_size);
    EXPECT_NEAR(val.mean_mae(), best, 1e-9);
}

TEST(Train, KmeansAssignmentFrozenAndFgaLogitsUntouched) {
    const auto data = small_data();
    for (auto variant : {Variant::Kmeans, Variant::Fga}) {
        auto cfg = small_config();
        cfg.variant = variant;
        cfg.epochs = 2;
        Model model(cfg.model_config(data.cities.size()), data.locations);
        model.normalization = data.stats;
        const ag::Matrix s0 = model.assignment();
        const ag::Matrix logits0 = model.assignment_logits().value();
        bool one_hot = true;
        TrainHooks hooks;
        hooks.after_step = [&](const Model& m, std::size_t, std::size_t) {
            if (variant != Variant::Kmeans) return;
            const auto s = m.assignment();
            for (ag::Index i = 0; i < s.rows(); ++i) one_hot = one_hot && s.row(i).maxCoeff() == 1.0 && s.row(i).sum() == 1.0;
        };
        train(model, data.normalized, data.split.train, data.split.validation, cfg, hooks);
        EXPECT_TRUE(one_hot);
        EXPECT_EQ(model.assignment_logits().value(), logits0) << variant_name(variant);
        if (variant == Variant::Kmeans) EXPECT_EQ(model.assignment(), s0);
    }
}

TEST(Train, NonFiniteLossAborts) {
    const auto data = small_data();
    auto cfg = small_config();
    Model model(cfg.model_config(data.cities.size()), data.locations);
    ag::Var(model.head().output.bias).mutable_value()(0, 0) = std::numeric_limits<double>::infinity();
    try {
        train(model, data.normalized, data.split.train, data.split.validation, cfg);
        FAIL();
    } catch (const TrainingError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("epoch 1"), std::string::npos) << msg;
        EXPECT_NE(msg.find("batch 0"), std::string::npos) << msg;
        EXPECT_NE(msg.find("gradient norm"), std::string::npos) << msg;
    }
}

TEST(Train, RejectsInvalidConfig) {
    const auto data = small_data();
    auto cfg = small_config();
    Model model(cfg.model_config(data.cities.size()), data.locations);
    cfg.batch_size = 0;
    EXPECT_THROW(train(model, data.normalized, data.split.train, {}, cfg), ConfigError);
    cfg = small_config();
    EXPECT_THROW(train(model, data.normalized, {}, {}, cfg), TrainingError);
}

TEST(Sweep, OneRowPerValueAndSeed) {
    const auto data = small_data();
    auto cfg = small_config();
    cfg.epochs = 1;
    const std::vector<std::size_t> values = {1, 3};
    const std::vector<std::uint64_t> seeds = {0, 1};
    const auto serial = sweep_groups(cfg, data, values, seeds, 1);
    const auto parallel = sweep_groups(cfg, data, values, seeds, 3);
    ASSERT_EQ(serial.size(), 4u);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(serial[i].n_group, values[i / 2]);
        EXPECT_EQ(serial[i].seed, seeds[i % 2]);
        EXPECT_EQ(serial[i].val_mae, parallel[i].val_mae);
        EXPECT_TRUE(std::isfinite(serial[i].val_mae));
    }
    const auto path = fs::temp_directory_path() / "hiergnn_sweep_test.csv";
    write_sweep_csv(path, serial);
    EXPECT_EQ(read(path).substr(0, 20), "n_group,val_mae,seed");
    fs::remove(path);
    const std::vector<std::size_t> bad = {0};
    EXPECT_THROW(sweep_groups(cfg, data, bad, seeds), ConfigError);
}

TEST(Ablation, ReportsValidationAndTest) {
    const auto data = small_data();
    auto cfg = small_config();
    cfg.epochs = 1;
    for (auto v : {Variant::Full, Variant::Fga, Variant::Kmeans, Variant::NoCe, Variant::NoLoc}) {
        const auto r = run_ablation(v, cfg, data);
        EXPECT_EQ(r.validation.variant, variant_name(v));
        EXPECT_EQ(r.test.split, "test");
        EXPECT_EQ(r.test.horizons.size(), 3u);
        EXPECT_EQ(r.assignment.rows(), 6);
    }
}

TEST(ExportGrouping, CsvAndGeoJson) {
    const auto data = small_data();
    auto cfg = small_config();
    cfg.n_group = 3;
    Model model(cfg.model_config(data.cities.size()), data.locations);
    const auto dir = fs::temp_directory_path() / ("hiergnn_export_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    export_grouping(model, data.cities, dir / "grouping.csv", dir / "grouping.geojson");

    std::ifstream csv(dir / "grouping.csv");
    std::string line;
    std::getline(csv, line);
    EXPECT_EQ(line, "city_id,lon,lat,group_argmax,p_0,p_1,p_2");
    int rows = 0;
    while (std::getline(csv, line)) {
        std::stringstream ss(line);
        std::vector<double> f;
        for (std::string cell; std::getline(ss, cell, ',');) f.push_back(std::stod(cell));
        ASSERT_EQ(f.size(), 7u);
        const double sum = f[4] + f[5] + f[6];
        EXPECT_NEAR(sum, 1.0, 1e-6);
        const int arg = int(std::max_element(f.begin() + 4, f.end()) - (f.begin() + 4));
        EXPECT_EQ(int(f[3]), arg);
        ++rows;
    }
    EXPECT_EQ(rows, 6);

    const auto geo = nlohmann::json::parse(std::ifstream(dir / "grouping.geojson"));
    EXPECT_EQ(geo["type"], "FeatureCollection");
    ASSERT_EQ(geo["features"].size(), 6u);
    for (const auto& f : geo["features"]) {
        EXPECT_EQ(f["geometry"]["type"], "Point");
        EXPECT_EQ(f["geometry"]["coordinates"].size(), 2u);
        EXPECT_TRUE(f["properties"].contains("group"));
    }
    fs::remove_all(dir);
}

TEST(AdjustedRand, KnownValues) {
    const std::vector<int> a = {0, 0, 1, 1, 2, 2};
    const std::vector<int> relabelled = {5, 5, 3, 3, 9, 9};
    EXPECT_DOUBLE_EQ(adjusted_rand_index(a, relabelled), 1.0);
    // Contingency [[1,1],[1,1]] for 4 items: index 0, expected 2*2/6 = 2/3, max 2 -> ARI = -0.5.
    const std::vector<int> x = {0, 0, 1, 1}, y = {0, 1, 0, 1};
    EXPECT_NEAR(adjusted_rand_index(x, y), -0.5, 1e-12);
    // Hand-computed: a = {0,0,0,1,1,1}, b = {0,0,1,1,2,2}.
    // pairs within joint cells: (0,0)=2 -> 1, (0,1)=1, (1,1)=1, (1,2)=2 -> 1; index = 2.
    // rows: 3,3 -> 3+3 = 6; cols: 2,2,2 -> 3; total 15; expected 6*3/15 = 1.2; max 4.5.
    const std::vector<int> p = {0, 0, 0, 1, 1, 1}, q = {0, 0, 1, 1, 2, 2};
    EXPECT_NEAR(adjusted_rand_index(p, q), (2.0 - 1.2) / (4.5 - 1.2), 1e-12);
    EXPECT_EQ(argmax_groups((ag::Matrix(2, 3) << 0.1, 0.7, 0.2, 0.5, 0.2, 0.3).finished()), (std::vector<int>{1, 0}));
}
