// Command-line front end: synthesize data, build graphs, train, evaluate,
// sweep, ablate, export groupings and forecast from a checkpoint.

#include "hiergnn/dataset.hpp"
#include "hiergnn/graph.hpp"
#include "hiergnn/model.hpp"
#include "hiergnn/train_eval.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

using namespace hiergnn;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Settings shared by train, sweep and ablate: file values first, flags on top.
struct RunSettings {
    TrainConfig train;
    std::string data_dir;
    std::string out = ".";
    std::vector<std::uint64_t> seeds;
};

struct Overrides {
    std::optional<std::string> config_path;
    std::optional<std::string> data_dir;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> seeds;
    std::optional<std::string> variant;
    std::optional<std::size_t> batch_size, epochs, hidden, gnn_layers, attr_dim, n_group, tau_in, tau_out, heads,
        ff_width, encoder_blocks, lr_decay_every;
    std::optional<double> lr_logits, lr_base, radius_km, grad_clip_norm, weight_decay, lr_decay_factor;
    std::optional<std::string> distance;
};

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> out;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
        try {
            std::size_t used = 0;
            out.push_back(std::stoull(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw UsageError("bad seed '" + item + "' in --seeds");
        }
    }
    if (out.empty()) throw UsageError("--seeds needs at least one value");
    return out;
}

/// "10..18", "3,5" or "4".
std::vector<std::size_t> parse_value_list(const std::string& text) {
    auto number = [&](const std::string& s) {
        try {
            std::size_t used = 0;
            const long long v = std::stoll(s, &used);
            if (used != s.size() || v < 1) throw std::invalid_argument(s);
            return std::size_t(v);
        } catch (const std::exception&) {
            throw UsageError("bad group count '" + s + "' in --values (expected positive integers)");
        }
    };
    std::vector<std::size_t> out;
    const auto range = text.find("..");
    if (range != std::string::npos) {
        const std::size_t lo = number(text.substr(0, range)), hi = number(text.substr(range + 2));
        if (hi < lo) throw UsageError("empty range in --values");
        for (std::size_t v = lo; v <= hi; ++v) out.push_back(v);
        return out;
    }
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) out.push_back(number(item));
    if (out.empty()) throw UsageError("--values needs at least one value");
    return out;
}

template <typename T>
T json_get(const json& j, const std::string& key) {
    try {
        return j.get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config key '" + key + "' has the wrong type");
    }
}

void apply_config_file(const std::string& path, RunSettings& s) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
    }
    if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
    auto& t = s.train;
    for (const auto& [key, v] : j.items()) {
        if (key == "batch_size") t.batch_size = json_get<std::size_t>(v, key);
        else if (key == "epochs") t.epochs = json_get<std::size_t>(v, key);
        else if (key == "lr_logits") t.lr_logits = json_get<double>(v, key);
        else if (key == "lr_base") t.lr_base = json_get<double>(v, key);
        else if (key == "hidden") t.hidden = json_get<std::size_t>(v, key);
        else if (key == "gnn_layers") t.gnn_layers = json_get<std::size_t>(v, key);
        else if (key == "attr_dim") t.attr_dim = json_get<std::size_t>(v, key);
        else if (key == "radius_km") t.radius_km = json_get<double>(v, key);
        else if (key == "n_group") t.n_group = json_get<std::size_t>(v, key);
        else if (key == "tau_in") t.tau_in = json_get<std::size_t>(v, key);
        else if (key == "tau_out") t.tau_out = json_get<std::size_t>(v, key);
        else if (key == "seed") t.seed = json_get<std::uint64_t>(v, key);
        else if (key == "seeds") s.seeds = json_get<std::vector<std::uint64_t>>(v, key);
        else if (key == "variant") t.variant = parse_variant(json_get<std::string>(v, key));
        else if (key == "heads") t.heads = json_get<std::size_t>(v, key);
        else if (key == "ff_width") t.ff_width = json_get<std::size_t>(v, key);
        else if (key == "encoder_blocks") t.encoder_blocks = json_get<std::size_t>(v, key);
        else if (key == "distance") t.distance = graph::parse_distance_metric(json_get<std::string>(v, key));
        else if (key == "grad_clip_norm") t.grad_clip_norm = json_get<double>(v, key);
        else if (key == "weight_decay") t.weight_decay = json_get<double>(v, key);
        else if (key == "lr_decay_every") t.lr_decay_every = json_get<std::size_t>(v, key);
        else if (key == "lr_decay_factor") t.lr_decay_factor = json_get<double>(v, key);
        else if (key == "data_dir") s.data_dir = json_get<std::string>(v, key);
        else if (key == "out") s.out = json_get<std::string>(v, key);
        else throw ConfigError("unknown config key '" + key + "'");
    }
}

RunSettings resolve(const Overrides& o) {
    RunSettings s;
    if (o.config_path) apply_config_file(*o.config_path, s);
    auto& t = s.train;
    auto set = [](auto& field, const auto& opt) {
        if (opt) field = *opt;
    };
    set(s.data_dir, o.data_dir);
    set(s.out, o.out);
    set(t.seed, o.seed);
    set(t.batch_size, o.batch_size);
    set(t.epochs, o.epochs);
    set(t.hidden, o.hidden);
    set(t.gnn_layers, o.gnn_layers);
    set(t.attr_dim, o.attr_dim);
    set(t.n_group, o.n_group);
    set(t.tau_in, o.tau_in);
    set(t.tau_out, o.tau_out);
    set(t.heads, o.heads);
    set(t.ff_width, o.ff_width);
    set(t.encoder_blocks, o.encoder_blocks);
    set(t.lr_decay_every, o.lr_decay_every);
    set(t.lr_logits, o.lr_logits);
    set(t.lr_base, o.lr_base);
    set(t.radius_km, o.radius_km);
    set(t.grad_clip_norm, o.grad_clip_norm);
    set(t.weight_decay, o.weight_decay);
    set(t.lr_decay_factor, o.lr_decay_factor);
    if (o.variant) t.variant = parse_variant(*o.variant);
    if (o.distance) t.distance = graph::parse_distance_metric(*o.distance);
    if (o.seeds) s.seeds = parse_seed_list(*o.seeds);
    if (s.seeds.empty()) s.seeds = {t.seed};
    if (s.data_dir.empty()) throw UsageError("--data-dir is required (flag or config key data_dir)");
    t.validate();
    return s;
}

void add_run_options(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config_path, "JSON run configuration (see docs/config.schema.json)");
    cmd->add_option("--data-dir", o.data_dir, "Directory holding cities.csv and observations.csv");
    cmd->add_option("--out", o.out, "Output directory (default: current directory)");
    cmd->add_option("--seed", o.seed, "Random seed (default 0)");
    cmd->add_option("--variant", o.variant, "full, fga, kmeans, no_ce or no_loc (default full)");
    cmd->add_option("--batch-size", o.batch_size, "Mini-batch size (default 64)");
    cmd->add_option("--epochs", o.epochs, "Training epochs (default 300)");
    cmd->add_option("--lr-logits", o.lr_logits, "Learning rate of the assignment logits (default 0.05)");
    cmd->add_option("--lr-base", o.lr_base, "Learning rate of every other parameter (default 0.001)");
    cmd->add_option("--hidden", o.hidden, "Hidden width d_h (default 32)");
    cmd->add_option("--gnn-layers", o.gnn_layers, "Message-passing layers per graph (default 2)");
    cmd->add_option("--attr-dim", o.attr_dim, "Group-edge attribute width d_R (default 12)");
    cmd->add_option("--radius-km", o.radius_km, "City-graph distance threshold R_h (default 250)");
    cmd->add_option("--n-group", o.n_group, "Number of city groups (default 15)");
    cmd->add_option("--tau-in", o.tau_in, "History hours (default 24)");
    cmd->add_option("--tau-out", o.tau_out, "Forecast hours (default 6)");
    cmd->add_option("--heads", o.heads, "Attention heads (default 4)");
    cmd->add_option("--ff-width", o.ff_width, "Encoder feed-forward width (default 64)");
    cmd->add_option("--encoder-blocks", o.encoder_blocks, "Self-attention blocks (default 1)");
    cmd->add_option("--distance", o.distance, "haversine or euclidean_degrees (default haversine)");
    cmd->add_option("--grad-clip-norm", o.grad_clip_norm, "Global gradient-norm clip, 0 disables (default 0)");
    cmd->add_option("--weight-decay", o.weight_decay, "L2 penalty on non-logit parameters (default 0)");
    cmd->add_option("--lr-decay-every", o.lr_decay_every, "Epochs between learning-rate decays, 0 disables");
    cmd->add_option("--lr-decay-factor", o.lr_decay_factor, "Learning-rate multiplier per decay (default 1)");
}

PreparedData load_prepared(const RunSettings& s) {
    const auto ds = data::load_dataset(s.data_dir);
    return prepare_data(ds, s.train.tau_in, s.train.tau_out);
}

json epoch_json(const EpochRecord& r, const std::string& variant, std::uint64_t seed) {
    json j{{"epoch", r.epoch}, {"train_loss", r.train_loss}, {"max_grad_norm", r.max_grad_norm},
           {"variant", variant}, {"seed", seed}};
    j["val_mae"] = std::isfinite(r.val_mae) ? json(r.val_mae) : json(nullptr);
    return j;
}

void print_table(const MetricsTable& t) {
    std::cout << std::fixed << std::setprecision(4);
    for (const auto& h : t.horizons)
        std::cout << t.variant << " " << t.split << " h" << h.horizon << "  MAE " << h.mae << "  RMSE " << h.rmse
                  << "\n";
}

// -- commands --------------------------------------------------------------------------------

struct SynthArgs {
    std::size_t cities = 20, groups = 4, hours = 720;
    std::uint64_t seed = 0;
    std::string out = ".";
};

void cmd_synth(const SynthArgs& a) {
    if (a.groups < 1) throw UsageError("--groups must be at least 1");
    if (a.cities < a.groups) throw UsageError("--cities must be at least --groups");
    if (a.hours < 1) throw UsageError("--hours must be positive");
    const auto syn = data::generate_synthetic({a.cities, a.groups, a.hours, a.seed});
    fs::create_directories(a.out);
    data::write_cities_csv(fs::path(a.out) / "cities.csv", syn.cities);
    data::write_observations_csv(fs::path(a.out) / "observations.csv", syn.panel);
    data::write_groups_csv(fs::path(a.out) / "groups_true.csv", syn.groups_true);
    std::cerr << "wrote " << a.cities << " cities x " << a.hours << " hours to " << a.out << "\n";
}

struct GraphArgs {
    std::string data_dir, out = ".", distance = "haversine";
    double radius_km = 250.0;
};

void cmd_graph(const GraphArgs& a) {
    const auto cities = data::read_cities_csv(fs::path(a.data_dir) / "cities.csv");
    const auto g = graph::build_city_graph(locations_of(cities), a.radius_km, graph::parse_distance_metric(a.distance));
    fs::create_directories(a.out);
    graph::write_city_graph_csv(fs::path(a.out) / "city_graph.csv", g);
    std::cerr << "city graph: " << g.n_nodes << " nodes, " << g.edges.size() << " directed edges\n";
}

void cmd_train(const Overrides& o) {
    const RunSettings s = resolve(o);
    const auto data = load_prepared(s);
    const auto& cfg = s.train;
    const std::string variant(variant_name(cfg.variant));
    fs::create_directories(s.out);
    std::ofstream log(fs::path(s.out) / "train_log.jsonl");
    if (!log) throw std::runtime_error("cannot write " + (fs::path(s.out) / "train_log.jsonl").string());

    Model model(cfg.model_config(data.cities.size()), data.locations);
    model.normalization = data.stats;
    TrainHooks hooks;
    hooks.after_epoch = [&](const Model&, const EpochRecord& r) {
        log << epoch_json(r, variant, cfg.seed).dump() << '\n' << std::flush;
        std::cerr << "epoch " << r.epoch << "/" << cfg.epochs << "  loss " << r.train_loss << "  val MAE " << r.val_mae
                  << "\n";
    };
    std::cerr << "training " << variant << " on " << data.split.train.size() << " samples ("
              << data.split.validation.size() << " validation, " << data.split.test.size() << " test)\n";
    const auto result = train(model, data.normalized, data.split.train, data.split.validation, cfg, hooks);
    model.save(fs::path(s.out) / "checkpoint.json");

    std::vector<MetricsTable> tables;
    tables.push_back(evaluate(model, data.normalized, data.split.validation, "validation", cfg.seed, cfg.batch_size));
    tables.push_back(evaluate(model, data.normalized, data.split.test, "test", cfg.seed, cfg.batch_size));
    write_metrics_csv(fs::path(s.out) / "metrics.csv", tables);
    std::cerr << "best epoch " << result.best_epoch << " (validation MAE " << result.best_val_mae << ")\n";
    for (const auto& t : tables) print_table(t);
}

struct EvalArgs {
    std::string checkpoint, data_dir, split = "test", out;
    std::size_t batch_size = 64;
};

std::string canonical_split(const std::string& s) {
    if (s == "train") return "train";
    if (s == "val" || s == "validation") return "validation";
    if (s == "test") return "test";
    throw UsageError("--split must be train, validation or test (got '" + s + "')");
}

void cmd_eval(const EvalArgs& a) {
    const std::string split = canonical_split(a.split);
    const Model model = Model::load(a.checkpoint);
    const auto ds = data::load_dataset(a.data_dir);
    const auto& cfg = model.config();
    if (ds.cities.size() != cfg.n_city)
        throw ConfigError("dataset has " + std::to_string(ds.cities.size()) + " cities, checkpoint expects " +
                          std::to_string(cfg.n_city));
    const auto normalized = data::apply_normalization(ds.panel, model.normalization);
    const auto sp = data::chronological_split(data::make_windows(ds.panel, cfg.tau_in, cfg.tau_out));
    const auto& samples = split == "train" ? sp.train : split == "validation" ? sp.validation : sp.test;
    if (samples.empty()) throw ConfigError("split '" + split + "' is empty");
    const auto table = evaluate(model, normalized, samples, split, cfg.seed, a.batch_size);
    if (!a.out.empty()) {
        fs::create_directories(a.out);
        const std::vector<MetricsTable> tables = {table};
        write_metrics_csv(fs::path(a.out) / ("eval_" + split + ".csv"), tables);
    }
    print_table(table);
}

struct ForecastArgs {
    std::string checkpoint, data_dir, at, out = ".";
};

void cmd_forecast(const ForecastArgs& a) {
    const Model model = Model::load(a.checkpoint);
    const auto ds = data::load_dataset(a.data_dir);
    const auto& cfg = model.config();
    if (ds.cities.size() != cfg.n_city)
        throw ConfigError("dataset has " + std::to_string(ds.cities.size()) + " cities, checkpoint expects " +
                          std::to_string(cfg.n_city));
    const auto anchor = data::parse_timestamp(a.at);
    const auto offset = std::chrono::duration_cast<std::chrono::hours>(anchor - ds.panel.start).count();
    if (anchor != ds.panel.start + std::chrono::hours(offset))
        throw UsageError("--at must lie on an hour boundary");
    if (offset < std::int64_t(cfg.tau_in) - 1 || offset >= std::int64_t(ds.panel.hours))
        throw ConfigError("anchor " + a.at + " lacks " + std::to_string(cfg.tau_in) +
                          " hours of history in the data (available " + data::format_timestamp(ds.panel.start) +
                          " .. " + data::format_timestamp(ds.panel.time_at(ds.panel.hours - 1)) + ")");
    data::WindowedSample sample;
    sample.start = std::size_t(offset) + 1 - cfg.tau_in;
    sample.tau_in = cfg.tau_in;
    sample.tau_out = cfg.tau_out;
    sample.anchor_time = anchor;
    const auto normalized = data::apply_normalization(ds.panel, model.normalization);
    const ag::Matrix pred = forecast(model, normalized, sample);

    fs::create_directories(a.out);
    std::ofstream out(fs::path(a.out) / "forecast.csv");
    if (!out) throw std::runtime_error("cannot write forecast.csv");
    out << "city_id,horizon,aqi_pred\n" << std::fixed << std::setprecision(6);
    for (ag::Index c = 0; c < pred.rows(); ++c)
        for (ag::Index k = 0; k < pred.cols(); ++k) out << ds.cities[std::size_t(c)].city_id << ',' << k + 1 << ',' << pred(c, k) << '\n';
    std::cerr << "wrote " << pred.size() << " forecasts after " << a.at << "\n";
}

void cmd_sweep(const Overrides& o, const std::string& values_text, std::size_t jobs) {
    const RunSettings s = resolve(o);
    const auto values = parse_value_list(values_text);
    const auto data = load_prepared(s);
    std::cerr << "sweeping n_group over " << values.size() << " values x " << s.seeds.size() << " seeds on " << jobs
              << " worker(s)\n";
    const auto rows = sweep_groups(s.train, data, values, s.seeds, jobs);
    fs::create_directories(s.out);
    write_sweep_csv(fs::path(s.out) / "sweep.csv", rows);
    std::cout << std::fixed << std::setprecision(4);
    for (auto v : values) {
        std::vector<double> maes;
        for (const auto& r : rows)
            if (r.n_group == v) maes.push_back(r.val_mae);
        double mean = 0.0, var = 0.0;
        for (double m : maes) mean += m / double(maes.size());
        for (double m : maes) var += (m - mean) * (m - mean) / double(maes.size());
        std::cout << "n_group " << v << "  val MAE " << mean << " +- " << std::sqrt(var) << "\n";
    }
}

void cmd_ablate(const Overrides& o, const std::string& variants_text) {
    const RunSettings s = resolve(o);
    std::vector<Variant> variants;
    std::stringstream ss(variants_text);
    for (std::string item; std::getline(ss, item, ',');) variants.push_back(parse_variant(item));
    const auto data = load_prepared(s);
    std::vector<MetricsTable> tables;
    fs::create_directories(s.out);
    for (auto v : variants)
        for (auto seed : s.seeds) {
            TrainConfig cfg = s.train;
            cfg.seed = seed;
            std::cerr << "ablation " << variant_name(v) << " seed " << seed << "\n";
            const auto r = run_ablation(v, cfg, data);
            tables.push_back(r.validation);
            tables.push_back(r.test);
        }
    write_metrics_csv(fs::path(s.out) / "ablation.csv", tables);
    std::cout << std::fixed << std::setprecision(4);
    for (auto v : variants) {
        double sum = 0.0;
        int n = 0;
        for (const auto& t : tables)
            if (t.variant == variant_name(v) && t.split == "test") sum += t.mean_mae(), ++n;
        std::cout << variant_name(v) << "  test MAE (mean over seeds and horizons) " << sum / n << "\n";
    }
}

struct ExportArgs {
    std::string checkpoint, data_dir, out = ".";
};

void cmd_export(const ExportArgs& a) {
    const Model model = Model::load(a.checkpoint);
    const auto cities = data::read_cities_csv(fs::path(a.data_dir) / "cities.csv");
    fs::create_directories(a.out);
    export_grouping(model, cities, fs::path(a.out) / "grouping.csv", fs::path(a.out) / "grouping.geojson");
    std::cerr << "wrote grouping.csv and grouping.geojson to " << a.out << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Group-aware hierarchical graph network for city AQI forecasting"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every subcommand");

    SynthArgs synth;
    auto* c_synth = app.add_subcommand("synth", "Generate a synthetic clustered city panel");
    c_synth->add_option("--cities", synth.cities, "Number of cities")->capture_default_str();
    c_synth->add_option("--groups", synth.groups, "Number of planted groups")->capture_default_str();
    c_synth->add_option("--hours", synth.hours, "Hours of data")->capture_default_str();
    c_synth->add_option("--seed", synth.seed, "Random seed")->capture_default_str();
    c_synth->add_option("--out", synth.out, "Output directory")->capture_default_str();

    GraphArgs graph_args;
    auto* c_graph = app.add_subcommand("graph", "Dump the distance-thresholded city graph as city_graph.csv");
    c_graph->add_option("--data-dir", graph_args.data_dir, "Directory holding cities.csv")->required();
    c_graph->add_option("--out", graph_args.out, "Output directory")->capture_default_str();
    c_graph->add_option("--radius-km", graph_args.radius_km, "Distance threshold")->capture_default_str();
    c_graph->add_option("--distance", graph_args.distance, "haversine or euclidean_degrees")->capture_default_str();

    Overrides train_o;
    auto* c_train = app.add_subcommand("train", "Train one model; writes checkpoint.json, train_log.jsonl, metrics.csv");
    add_run_options(c_train, train_o);

    EvalArgs eval;
    auto* c_eval = app.add_subcommand("eval", "Per-horizon MAE/RMSE of a checkpoint on one split");
    c_eval->add_option("--checkpoint", eval.checkpoint, "checkpoint.json from train")->required();
    c_eval->add_option("--data-dir", eval.data_dir, "Directory holding cities.csv and observations.csv")->required();
    c_eval->add_option("--split", eval.split, "train, validation (or val) or test")->capture_default_str();
    c_eval->add_option("--out", eval.out, "Also write eval_<split>.csv into this directory");
    c_eval->add_option("--batch-size", eval.batch_size, "Evaluation batch size")->capture_default_str();

    ForecastArgs fc;
    auto* c_fc = app.add_subcommand("forecast", "Forecast the hours after an anchor time; writes forecast.csv");
    c_fc->add_option("--checkpoint", fc.checkpoint, "checkpoint.json from train")->required();
    c_fc->add_option("--data-dir", fc.data_dir, "Directory holding cities.csv and observations.csv")->required();
    c_fc->add_option("--at", fc.at, "Anchor (last history hour), e.g. 2017-01-20T12:00:00Z")->required();
    c_fc->add_option("--out", fc.out, "Output directory")->capture_default_str();

    Overrides sweep_o;
    std::string sweep_values = "10..18";
    std::size_t jobs = 1;
    auto* c_sweep = app.add_subcommand("sweep", "Validation MAE over a range of group counts; writes sweep.csv");
    add_run_options(c_sweep, sweep_o);
    c_sweep->add_option("--values", sweep_values, "Group counts: a range lo..hi or a comma list")->capture_default_str();
    c_sweep->add_option("--seeds", sweep_o.seeds, "Comma-separated seeds (default: --seed)");
    c_sweep->add_option("--jobs", jobs, "Parallel training runs")->capture_default_str()->check(CLI::PositiveNumber);

    Overrides ablate_o;
    std::string ablate_variants = "full,fga,kmeans,no_ce,no_loc";
    auto* c_ablate = app.add_subcommand("ablate", "Train each variant; writes ablation.csv");
    add_run_options(c_ablate, ablate_o);
    c_ablate->add_option("--variants", ablate_variants, "Comma-separated variants")->capture_default_str();
    c_ablate->add_option("--seeds", ablate_o.seeds, "Comma-separated seeds (default: --seed)");

    ExportArgs ex;
    auto* c_export = app.add_subcommand("export-grouping", "Write grouping.csv and grouping.geojson from a checkpoint");
    c_export->add_option("--checkpoint", ex.checkpoint, "checkpoint.json from train")->required();
    c_export->add_option("--data-dir", ex.data_dir, "Directory holding cities.csv")->required();
    c_export->add_option("--out", ex.out, "Output directory")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (c_synth->parsed()) cmd_synth(synth);
        else if (c_graph->parsed()) cmd_graph(graph_args);
        else if (c_train->parsed()) cmd_train(train_o);
        else if (c_eval->parsed()) cmd_eval(eval);
        else if (c_fc->parsed()) cmd_forecast(fc);
        else if (c_sweep->parsed()) cmd_sweep(sweep_o, sweep_values, jobs);
        else if (c_ablate->parsed()) cmd_ablate(ablate_o, ablate_variants);
        else if (c_export->parsed()) cmd_export(ex);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
