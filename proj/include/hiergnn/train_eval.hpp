#pragma once

#include "hiergnn/dataset.hpp"
#include "hiergnn/model.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hiergnn {

/// Raised when training diverges.
class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TrainConfig {
    std::size_t batch_size = 64;
    std::size_t epochs = 300;
    double lr_logits = 0.05;
    double lr_base = 0.001;
    std::size_t hidden = 32;
    std::size_t gnn_layers = 2;
    std::size_t attr_dim = 12;
    double radius_km = 250.0;
    std::size_t n_group = 15;
    std::size_t tau_in = 24;
    std::size_t tau_out = 6;
    std::uint64_t seed = 0;
    Variant variant = Variant::Full;

    // Not fixed by the reference setup; defaults are the smallest sensible choices.
    std::size_t heads = 4;
    std::size_t ff_width = 64;
    std::size_t encoder_blocks = 1;
    graph::DistanceMetric distance = graph::DistanceMetric::Haversine;

    // Off unless set.
    double grad_clip_norm = 0.0;
    double weight_decay = 0.0;
    std::size_t lr_decay_every = 0;
    double lr_decay_factor = 1.0;

    /// Throws ConfigError when a value is out of range.
    void validate() const;
    ModelConfig model_config(std::size_t n_city) const;
};

/// Everything a training run needs, derived from one dataset.
struct PreparedData {
    std::vector<data::CityRecord> cities;
    std::vector<graph::Location> locations;
    data::ObservationPanel raw;
    data::ObservationPanel normalized;
    data::NormalizationStats stats;
    data::Split split;
};

std::vector<graph::Location> locations_of(std::span<const data::CityRecord> cities);

/// Windows, splits 70/10/20, fits normalization on the training windows.
PreparedData prepare_data(const data::Dataset& dataset, std::size_t tau_in, std::size_t tau_out);

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;  // mean normalized MAE over the epoch's batches
    double val_mae = 0.0;     // raw AQI units; NaN without a validation split
    double max_grad_norm = 0.0;
};

struct TrainHooks {
    /// Called after every optimizer step.
    std::function<void(const Model&, std::size_t epoch, std::size_t batch)> after_step;
    /// Called after every epoch.
    std::function<void(const Model&, const EpochRecord&)> after_epoch;
};

struct TrainResult {
    std::vector<EpochRecord> log;
    std::size_t best_epoch = 0;
    double best_val_mae = 0.0;
};

/// Mini-batch Adam with a separate learning rate for the assignment logits.
/// With a validation split the parameters of the best validation epoch are
/// restored at the end; otherwise the final parameters are kept.
TrainResult train(Model& model, const data::ObservationPanel& normalized,
                  std::span<const data::WindowedSample> train_samples,
                  std::span<const data::WindowedSample> validation_samples, const TrainConfig& config,
                  const TrainHooks& hooks = {});

struct HorizonMetrics {
    std::size_t horizon = 0;  // 1-based
    double mae = 0.0;
    double rmse = 0.0;
};

struct MetricsTable {
    std::string variant;
    std::string split;
    std::uint64_t seed = 0;
    std::vector<HorizonMetrics> horizons;

    /// Average MAE over horizons (equal to the overall MAE).
    double mean_mae() const;
};

/// Per-horizon absolute and squared error sums.
class MetricsAccumulator {
public:
    explicit MetricsAccumulator(std::size_t horizons);
    void add(std::size_t horizon_index, double predicted, double actual);
    MetricsTable finish(std::string variant, std::string split, std::uint64_t seed) const;

private:
    std::vector<double> abs_sum_;
    std::vector<double> sq_sum_;
    std::vector<std::size_t> count_;
};

/// MAE and RMSE per horizon in raw AQI units.
MetricsTable evaluate(const Model& model, const data::ObservationPanel& normalized,
                      std::span<const data::WindowedSample> samples, const std::string& split,
                      std::uint64_t seed, std::size_t batch_size = 64);

/// Predictions in raw AQI units, [n_city x tau_out].
ag::Matrix forecast(const Model& model, const data::ObservationPanel& normalized, const data::WindowedSample& sample);

/// `variant,split,horizon,mae,rmse,seed`
void write_metrics_csv(const std::filesystem::path& path, std::span<const MetricsTable> tables);

struct SweepRow {
    std::size_t n_group = 0;
    std::uint64_t seed = 0;
    double val_mae = 0.0;
};

/// One model per (value, seed); reports the best validation MAE of each run.
/// Runs fan out over `jobs` worker threads; results are ordered by value then seed.
std::vector<SweepRow> sweep_groups(const TrainConfig& config, const PreparedData& data,
                                   std::span<const std::size_t> values, std::span<const std::uint64_t> seeds,
                                   std::size_t jobs = 1);
/// `n_group,val_mae,seed`
void write_sweep_csv(const std::filesystem::path& path, std::span<const SweepRow> rows);

struct AblationResult {
    TrainResult training;
    MetricsTable validation;
    MetricsTable test;
    ag::Matrix assignment;
};

AblationResult run_ablation(Variant variant, const TrainConfig& config, const PreparedData& data,
                            const TrainHooks& hooks = {});

/// Argmax group per city plus the full probability row:
/// CSV `city_id,lon,lat,group_argmax,p_0,...` and a GeoJSON FeatureCollection of points.
void export_grouping(const Model& model, std::span<const data::CityRecord> cities,
                     const std::filesystem::path& csv_path, const std::filesystem::path& geojson_path);

std::vector<int> argmax_groups(const ag::Matrix& assignment);

/// Permutation-invariant agreement between two labelings (Hubert & Arabie ARI).
double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

}  // namespace hiergnn
