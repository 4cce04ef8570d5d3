#include "hiergnn/train_eval.hpp"

#include "hiergnn/optimizer.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

namespace hiergnn {

void TrainConfig::validate() const {
    auto require = [](bool ok, const std::string& what) {
        if (!ok) throw ConfigError(what);
    };
    require(batch_size >= 1, "batch_size must be positive");
    require(epochs >= 1, "epochs must be positive");
    require(lr_logits >= 0.0 && lr_base >= 0.0, "learning rates must be non-negative");
    require(hidden >= 1 && gnn_layers >= 1 && attr_dim >= 1, "hidden, gnn_layers and attr_dim must be positive");
    require(radius_km > 0.0, "radius_km must be positive");
    require(n_group >= 1, "n_group must be positive");
    require(tau_in >= 1 && tau_out >= 1, "tau_in and tau_out must be positive");
    require(grad_clip_norm >= 0.0 && weight_decay >= 0.0, "clip norm and weight decay must be non-negative");
    require(lr_decay_factor > 0.0, "lr_decay_factor must be positive");
}

ModelConfig TrainConfig::model_config(std::size_t n_city) const {
    ModelConfig m;
    m.n_city = n_city;
    m.n_group = n_group;
    m.tau_in = tau_in;
    m.tau_out = tau_out;
    m.hidden = hidden;
    m.heads = heads;
    m.ff_width = ff_width;
    m.encoder_blocks = encoder_blocks;
    m.gnn_layers = gnn_layers;
    m.attr_dim = attr_dim;
    m.radius_km = radius_km;
    m.distance = distance;
    m.variant = variant;
    m.seed = seed;
    return m;
}

std::vector<graph::Location> locations_of(std::span<const data::CityRecord> cities) {
    std::vector<graph::Location> out;
    out.reserve(cities.size());
    for (const auto& c : cities) out.push_back({c.longitude, c.latitude});
    return out;
}

PreparedData prepare_data(const data::Dataset& dataset, std::size_t tau_in, std::size_t tau_out) {
    PreparedData p;
    p.cities = dataset.cities;
    p.locations = locations_of(dataset.cities);
    p.raw = dataset.panel;
    const auto windows = data::make_windows(p.raw, tau_in, tau_out, 1);
    p.split = data::chronological_split(windows);
    p.stats = data::fit_normalization(p.raw, p.split.train);
    p.normalized = data::apply_normalization(p.raw, p.stats);
    return p;
}

// -- training ---------------------------------------------------------------------------

namespace {

double global_grad_norm(const ParameterSet& params) {
    double sq = 0.0;
    for (const auto& p : params.all())
        if (p.var.has_grad()) sq += p.var.grad().squaredNorm();
    return std::sqrt(sq);
}

}  // namespace

TrainResult train(Model& model, const data::ObservationPanel& normalized,
                  std::span<const data::WindowedSample> train_samples,
                  std::span<const data::WindowedSample> validation_samples, const TrainConfig& config,
                  const TrainHooks& hooks) {
    config.validate();
    if (train_samples.empty()) throw TrainingError("no training samples");

    std::vector<std::string> frozen;
    if (!model.assignment_trainable()) frozen.push_back("assignment.logits");
    Adam adam(model.parameters(), {config.lr_base, config.lr_logits, 0.9, 0.999, 1e-8}, frozen);

    Rng rng(config.seed ^ 0x5deece66dULL);
    std::vector<std::size_t> order(train_samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainResult result;
    result.best_val_mae = std::numeric_limits<double>::infinity();
    std::vector<ag::Matrix> best_params;
    std::vector<data::WindowedSample> chunk;

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        if (config.lr_decay_every > 0 && epoch > 1 && (epoch - 1) % config.lr_decay_every == 0)
            adam.scale_learning_rates(config.lr_decay_factor);
        std::shuffle(order.begin(), order.end(), rng);
        EpochRecord record;
        record.epoch = epoch;
        double loss_sum = 0.0;
        std::size_t seen = 0, batch_no = 0;

        for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size, ++batch_no) {
            const std::size_t end = std::min(order.size(), begin + config.batch_size);
            chunk.clear();
            for (std::size_t i = begin; i < end; ++i) chunk.push_back(train_samples[order[i]]);
            const Batch batch = make_batch(normalized, chunk);

            model.parameters().zero_grad();
            const auto out = model.forward(batch);
            const ag::Var loss = model.loss(out, batch);
            const double loss_value = loss.value()(0, 0);
            loss.backward();
            const double grad_norm = global_grad_norm(model.parameters());
            if (!std::isfinite(loss_value) || !std::isfinite(grad_norm)) {
                std::ostringstream msg;
                msg << "non-finite training loss at epoch " << epoch << ", batch " << batch_no
                    << " (loss=" << loss_value << ", max gradient norm=" << grad_norm << ")";
                throw TrainingError(msg.str());
            }
            record.max_grad_norm = std::max(record.max_grad_norm, grad_norm);

            for (auto& p : model.parameters().all()) {
                if (!p.var.has_grad()) continue;
                if (config.weight_decay > 0.0 && p.group == ParamGroup::Base)
                    p.var.node()->grad += config.weight_decay * p.var.value();
                if (config.grad_clip_norm > 0.0 && grad_norm > config.grad_clip_norm)
                    p.var.node()->grad *= config.grad_clip_norm / grad_norm;
            }
            adam.step();
            loss_sum += loss_value * double(chunk.size());
            seen += chunk.size();
            if (hooks.after_step) hooks.after_step(model, epoch, batch_no);
        }
        model.parameters().zero_grad();
        record.train_loss = loss_sum / double(seen);
        record.val_mae = validation_samples.empty()
                             ? std::numeric_limits<double>::quiet_NaN()
                             : evaluate(model, normalized, validation_samples, "validation", config.seed,
                                        config.batch_size)
                                   .mean_mae();
        if (!validation_samples.empty() && record.val_mae < result.best_val_mae) {
            result.best_val_mae = record.val_mae;
            result.best_epoch = epoch;
            best_params = model.snapshot();
        }
        result.log.push_back(record);
        if (hooks.after_epoch) hooks.after_epoch(model, record);
    }

    if (!best_params.empty()) {
        model.restore(best_params);
    } else {
        result.best_epoch = config.epochs;
        result.best_val_mae = result.log.empty() ? std::numeric_limits<double>::quiet_NaN() : result.log.back().val_mae;
    }
    return result;
}

// -- evaluation ---------------------------------------------------------------------------

double MetricsTable::mean_mae() const {
    if (horizons.empty()) return 0.0;
    double s = 0.0;
    for (const auto& h : horizons) s += h.mae;
    return s / double(horizons.size());
}

MetricsAccumulator::MetricsAccumulator(std::size_t horizons)
    : abs_sum_(horizons, 0.0), sq_sum_(horizons, 0.0), count_(horizons, 0) {}

void MetricsAccumulator::add(std::size_t horizon_index, double predicted, double actual) {
    const double err = predicted - actual;
    abs_sum_.at(horizon_index) += std::abs(err);
    sq_sum_.at(horizon_index) += err * err;
    ++count_.at(horizon_index);
}

MetricsTable MetricsAccumulator::finish(std::string variant, std::string split, std::uint64_t seed) const {
    MetricsTable table;
    table.variant = std::move(variant);
    table.split = std::move(split);
    table.seed = seed;
    for (std::size_t k = 0; k < abs_sum_.size(); ++k) {
        HorizonMetrics h;
        h.horizon = k + 1;
        if (count_[k] > 0) {
            h.mae = abs_sum_[k] / double(count_[k]);
            h.rmse = std::sqrt(sq_sum_[k] / double(count_[k]));
        }
        table.horizons.push_back(h);
    }
    return table;
}

MetricsTable evaluate(const Model& model, const data::ObservationPanel& normalized,
                      std::span<const data::WindowedSample> samples, const std::string& split,
                      std::uint64_t seed, std::size_t batch_size) {
    const auto& cfg = model.config();
    MetricsAccumulator acc(cfg.tau_out);
    batch_size = std::max<std::size_t>(1, batch_size);
    for (std::size_t begin = 0; begin < samples.size(); begin += batch_size) {
        const auto chunk = samples.subspan(begin, std::min(batch_size, samples.size() - begin));
        const Batch batch = make_batch(normalized, chunk);
        const ag::Matrix pred = model.forward(batch).predictions.value();
        for (ag::Index r = 0; r < pred.rows(); ++r)
            for (ag::Index k = 0; k < pred.cols(); ++k)
                acc.add(std::size_t(k), model.denormalize_aqi(pred(r, k)), model.denormalize_aqi(batch.target(r, k)));
    }
    return acc.finish(std::string(variant_name(cfg.variant)), split, seed);
}

ag::Matrix forecast(const Model& model, const data::ObservationPanel& normalized, const data::WindowedSample& sample) {
    const auto& cfg = model.config();
    if (normalized.n_cities != cfg.n_city || sample.tau_in != cfg.tau_in ||
        sample.start + sample.tau_in > normalized.hours)
        throw ConfigError("forecast window does not fit the panel");
    // Only the history is needed; the target hours may lie beyond the panel.
    Batch batch;
    batch.size = 1;
    batch.history.resize(ag::Index(cfg.n_city * cfg.tau_in), ag::Index(data::kRawFeatures));
    for (std::size_t c = 0; c < cfg.n_city; ++c) {
        const double* src = normalized.data.data() + normalized.offset(c, sample.start, 0);
        std::copy(src, src + cfg.tau_in * data::kRawFeatures,
                  batch.history.data() + c * cfg.tau_in * data::kRawFeatures);
    }
    batch.target = ag::Matrix::Zero(ag::Index(cfg.n_city), ag::Index(cfg.tau_out));
    batch.time.push_back(data::time_features(sample.anchor_time));
    ag::Matrix pred = model.forward(batch).predictions.value();
    for (ag::Index i = 0; i < pred.size(); ++i) pred.data()[i] = model.denormalize_aqi(pred.data()[i]);
    return pred;
}

void write_metrics_csv(const std::filesystem::path& path, std::span<const MetricsTable> tables) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "variant,split,horizon,mae,rmse,seed\n" << std::fixed << std::setprecision(6);
    for (const auto& t : tables)
        for (const auto& h : t.horizons)
            out << t.variant << ',' << t.split << ',' << h.horizon << ',' << h.mae << ',' << h.rmse << ',' << t.seed
                << '\n';
}

// -- sweep / ablation ------------------------------------------------------------------------

std::vector<SweepRow> sweep_groups(const TrainConfig& config, const PreparedData& data,
                                   std::span<const std::size_t> values, std::span<const std::uint64_t> seeds,
                                   std::size_t jobs) {
    struct Task {
        std::size_t n_group;
        std::uint64_t seed;
    };
    std::vector<Task> tasks;
    for (auto v : values) {
        if (v < 1) throw ConfigError("group counts must be positive");
        for (auto s : seeds) tasks.push_back({v, s});
    }
    std::vector<SweepRow> rows(tasks.size());
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;

    auto worker = [&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++) {
            try {
                TrainConfig cfg = config;
                cfg.n_group = tasks[i].n_group;
                cfg.seed = tasks[i].seed;
                Model model(cfg.model_config(data.cities.size()), data.locations);
                model.normalization = data.stats;
                const auto result = train(model, data.normalized, data.split.train, data.split.validation, cfg);
                rows[i] = {tasks[i].n_group, tasks[i].seed, result.best_val_mae};
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    const std::size_t n_threads = std::max<std::size_t>(1, std::min(jobs, tasks.size()));
    std::vector<std::thread> threads;
    for (std::size_t t = 1; t < n_threads; ++t) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
    return rows;
}

void write_sweep_csv(const std::filesystem::path& path, std::span<const SweepRow> rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "n_group,val_mae,seed\n" << std::fixed << std::setprecision(6);
    for (const auto& r : rows) out << r.n_group << ',' << r.val_mae << ',' << r.seed << '\n';
}

AblationResult run_ablation(Variant variant, const TrainConfig& config, const PreparedData& data,
                            const TrainHooks& hooks) {
    TrainConfig cfg = config;
    cfg.variant = variant;
    Model model(cfg.model_config(data.cities.size()), data.locations);
    model.normalization = data.stats;
    AblationResult result;
    result.training = train(model, data.normalized, data.split.train, data.split.validation, cfg, hooks);
    result.validation = evaluate(model, data.normalized, data.split.validation, "validation", cfg.seed, cfg.batch_size);
    result.test = evaluate(model, data.normalized, data.split.test, "test", cfg.seed, cfg.batch_size);
    result.assignment = model.assignment();
    return result;
}

// -- grouping export -----------------------------------------------------------------------

std::vector<int> argmax_groups(const ag::Matrix& assignment) {
    std::vector<int> out(std::size_t(assignment.rows()));
    for (ag::Index i = 0; i < assignment.rows(); ++i) {
        ag::Index best = 0;
        assignment.row(i).maxCoeff(&best);
        out[std::size_t(i)] = int(best);
    }
    return out;
}

void export_grouping(const Model& model, std::span<const data::CityRecord> cities,
                     const std::filesystem::path& csv_path, const std::filesystem::path& geojson_path) {
    const ag::Matrix s = model.assignment();
    if (ag::Index(cities.size()) != s.rows()) throw ConfigError("city list does not match the model");
    const auto groups = argmax_groups(s);

    std::ofstream csv(csv_path);
    if (!csv) throw std::runtime_error("cannot write " + csv_path.string());
    csv << "city_id,lon,lat,group_argmax";
    for (ag::Index k = 0; k < s.cols(); ++k) csv << ",p_" << k;
    csv << '\n' << std::setprecision(10);

    nlohmann::json features = nlohmann::json::array();
    for (std::size_t i = 0; i < cities.size(); ++i) {
        const auto& c = cities[i];
        csv << c.city_id << ',' << c.longitude << ',' << c.latitude << ',' << groups[i];
        std::vector<double> probs;
        for (ag::Index k = 0; k < s.cols(); ++k) {
            csv << ',' << s(ag::Index(i), k);
            probs.push_back(s(ag::Index(i), k));
        }
        csv << '\n';
        features.push_back({{"type", "Feature"},
                            {"geometry", {{"type", "Point"}, {"coordinates", {c.longitude, c.latitude}}}},
                            {"properties",
                             {{"city_id", c.city_id}, {"name", c.name}, {"group", groups[i]}, {"probabilities", probs}}}});
    }
    std::ofstream geo(geojson_path);
    if (!geo) throw std::runtime_error("cannot write " + geojson_path.string());
    geo << nlohmann::json{{"type", "FeatureCollection"}, {"features", features}}.dump(2) << '\n';
}

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
    if (a.size() != b.size()) throw std::invalid_argument("label vectors differ in length");
    const std::size_t n = a.size();
    if (n < 2) return 1.0;
    std::map<std::pair<int, int>, double> joint;
    std::map<int, double> rows, cols;
    for (std::size_t i = 0; i < n; ++i) {
        joint[{a[i], b[i]}] += 1.0;
        rows[a[i]] += 1.0;
        cols[b[i]] += 1.0;
    }
    auto pairs = [](double x) { return x * (x - 1.0) / 2.0; };
    double index = 0.0, sum_rows = 0.0, sum_cols = 0.0;
    for (const auto& [_, v] : joint) index += pairs(v);
    for (const auto& [_, v] : rows) sum_rows += pairs(v);
    for (const auto& [_, v] : cols) sum_cols += pairs(v);
    const double total = pairs(double(n));
    const double expected = sum_rows * sum_cols / total;
    const double max_index = 0.5 * (sum_rows + sum_cols);
    if (max_index == expected) return 1.0;  // both labelings trivial
    return (index - expected) / (max_index - expected);
}

}  // namespace hiergnn
