#include "hiergnn/model.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace hiergnn {

using json = nlohmann::json;

namespace {

constexpr std::string_view kCheckpointFormat = "hiergnn-checkpoint";
constexpr int kCheckpointVersion = 1;

}  // namespace

Variant parse_variant(std::string_view name) {
    if (name == "full") return Variant::Full;
    if (name == "fga") return Variant::Fga;
    if (name == "kmeans") return Variant::Kmeans;
    if (name == "no_ce") return Variant::NoCe;
    if (name == "no_loc") return Variant::NoLoc;
    throw ConfigError("unknown variant '" + std::string(name) + "' (expected full, fga, kmeans, no_ce, no_loc)");
}

std::string_view variant_name(Variant variant) {
    switch (variant) {
        case Variant::Full: return "full";
        case Variant::Fga: return "fga";
        case Variant::Kmeans: return "kmeans";
        case Variant::NoCe: return "no_ce";
        case Variant::NoLoc: return "no_loc";
    }
    return "full";
}

void ModelConfig::validate() const {
    auto require = [](bool ok, const std::string& what) {
        if (!ok) throw ConfigError(what);
    };
    require(n_city >= 1, "n_city must be positive");
    require(n_group >= 1, "n_group must be positive");
    require(variant != Variant::Kmeans || n_group <= n_city, "kmeans variant needs n_group <= n_city");
    require(tau_in >= 1 && tau_out >= 1, "window lengths must be positive");
    require(hidden >= 1 && ff_width >= 1 && attr_dim >= 1, "layer widths must be positive");
    require(heads >= 1 && hidden % heads == 0, "heads must divide hidden");
    require(encoder_blocks >= 1, "need at least one encoder block");
    require(month_dim + day_of_week_dim + hour_dim >= 1, "time vector must be non-empty");
    require(radius_km > 0.0, "radius_km must be positive");
}

Batch make_batch(const data::ObservationPanel& normalized, std::span<const data::WindowedSample> samples) {
    Batch batch;
    batch.size = samples.size();
    if (samples.empty()) return batch;
    const std::size_t n = normalized.n_cities;
    const std::size_t tau_in = samples.front().tau_in, tau_out = samples.front().tau_out;
    const std::size_t per_sample = n * tau_in * data::kRawFeatures;
    batch.history.resize(ag::Index(samples.size() * n * tau_in), ag::Index(data::kRawFeatures));
    batch.target.resize(ag::Index(samples.size() * n), ag::Index(tau_out));
    for (std::size_t b = 0; b < samples.size(); ++b) {
        const auto& s = samples[b];
        if (s.tau_in != tau_in || s.tau_out != tau_out) throw ConfigError("mixed window lengths in one batch");
        for (std::size_t c = 0; c < n; ++c) {
            const double* src = normalized.data.data() + normalized.offset(c, s.start, 0);
            std::copy(src, src + tau_in * data::kRawFeatures,
                      batch.history.data() + b * per_sample + c * tau_in * data::kRawFeatures);
            for (std::size_t k = 0; k < tau_out; ++k)
                batch.target(ag::Index(b * n + c), ag::Index(k)) = normalized.at(c, s.start + tau_in + k, data::kAqi);
        }
        batch.time.push_back(data::time_features(s.anchor_time));
    }
    return batch;
}

Model::Model(const ModelConfig& config, std::span<const graph::Location> locations)
    : config_(config), locations_(locations.begin(), locations.end()) {
    config_.validate();
    if (locations_.size() != config_.n_city)
        throw ConfigError("model expects " + std::to_string(config_.n_city) + " city locations, got " +
                          std::to_string(locations_.size()));
    scaler_ = grouping::LocationScaler::fit(locations_);
    city_graph_ = graph::build_city_graph(locations_, config_.radius_km, config_.distance);
    group_graph_ = graph::build_group_graph(config_.n_group, config_.attr_dim);

    Rng rng(config_.seed);
    const std::size_t d = config_.hidden;
    encoder::SequenceEncoderConfig seq;
    seq.width = d;
    seq.heads = config_.heads;
    seq.ff_width = config_.ff_width;
    seq.seq_len = config_.tau_in;
    seq.blocks = config_.encoder_blocks;
    sequence_ = encoder::SequenceEncoder(params_, "encoder.sequence", seq, rng);
    time_ = encoder::TimeEmbedding(params_, "encoder.time",
                                   {config_.month_dim, config_.day_of_week_dim, config_.hour_dim}, rng);
    logits_ = params_.add("assignment.logits", grouping::initial_logits(config_.n_city, config_.n_group, rng),
                          ParamGroup::AssignmentLogits);

    const bool use_location = config_.variant != Variant::NoLoc;
    enc_fusion_ = grouping::LocationFusion(params_, "encoder.location_fusion", d, use_location, rng);
    correlation_ = hier_mp::GroupCorrelationEncoder(params_, "encoder.group_correlation", d, time_.dim(),
                                                    config_.attr_dim, rng);
    enc_group_mp_ = hier_mp::MessagePassingStack(params_, "encoder.group_mp", config_.gnn_layers, d, config_.attr_dim,
                                                 hier_mp::UpdateInput::AggregateThenNode, rng);
    enc_cat_ = hier_mp::CityFusion(params_, "encoder.city_fusion", d, rng);
    enc_city_mp_ = hier_mp::MessagePassingStack(params_, "encoder.city_mp", config_.gnn_layers, d, 1,
                                                hier_mp::UpdateInput::NodeThenAggregate, rng);
    dec_fusion_ = grouping::LocationFusion(params_, "decoder.location_fusion", d, use_location, rng);
    dec_group_mp_ = hier_mp::MessagePassingStack(params_, "decoder.group_mp", config_.gnn_layers, d, config_.attr_dim,
                                                 hier_mp::UpdateInput::AggregateThenNode, rng);
    dec_cat_ = hier_mp::CityFusion(params_, "decoder.city_fusion", d, rng);
    dec_city_mp_ = hier_mp::MessagePassingStack(params_, "decoder.city_mp", config_.gnn_layers, d, 1,
                                                hier_mp::UpdateInput::NodeThenAggregate, rng);
    head_ = Mlp(params_, "head", d, d, config_.tau_out, rng);

    if (config_.variant == Variant::Kmeans)
        fixed_assignment_ = grouping::kmeans_assignment(locations_, config_.n_group, config_.seed).assignment;

    for (auto& p : params_.all())
        if (p.name.empty()) throw std::logic_error("unnamed parameter");
}

bool Model::assignment_trainable() const {
    return config_.variant != Variant::Kmeans && config_.variant != Variant::Fga;
}

ag::Var Model::current_assignment() const {
    if (fixed_assignment_) return ag::Var::constant(*fixed_assignment_);
    return grouping::soft_assignment(logits_);
}

ag::Matrix Model::assignment() const { return current_assignment().value(); }

const Model::BatchStatics& Model::statics(std::size_t batch_size) const {
    auto it = statics_cache_.find(batch_size);
    if (it != statics_cache_.end()) return *it->second;
    auto s = std::make_shared<BatchStatics>();
    s->city_edges = hier_mp::batch_edges(city_graph_, batch_size);
    s->group_edges = hier_mp::batch_edges(group_graph_.edges, group_graph_.n_nodes, batch_size);
    s->edge_weights = ag::Var::constant(hier_mp::batch_edge_weights(city_graph_, batch_size));
    const ag::Matrix loc = scaler_.matrix(locations_);
    ag::Matrix tiled(loc.rows() * ag::Index(batch_size), 2);
    for (std::size_t b = 0; b < batch_size; ++b) tiled.middleRows(ag::Index(b) * loc.rows(), loc.rows()) = loc;
    s->locations = ag::Var::constant(std::move(tiled));
    if (statics_cache_.size() > 8) statics_cache_.clear();
    return *statics_cache_.emplace(batch_size, std::move(s)).first->second;
}

EncoderOutput Model::encode(const Batch& batch, const ForwardOptions& options) const {
    if (batch.history.rows() != ag::Index(batch.size * config_.n_city * config_.tau_in) ||
        batch.history.cols() != ag::Index(data::kRawFeatures))
        throw ConfigError("batch history shape does not match the model configuration");
    const auto& st = statics(batch.size);
    const auto rows = ag::Index(batch.size * config_.n_city);

    EncoderOutput out;
    out.x = sequence_(ag::Var::constant(batch.history));
    out.assignment = current_assignment();

    ag::Var x_group;
    if (config_.variant == Variant::Fga) {
        x_group = ag::zeros_like_rows(rows, ag::Index(config_.hidden));
        out.correlations = ag::Var::constant(ag::Matrix::Zero(0, ag::Index(config_.attr_dim)));
    } else {
        const ag::Var s = options.detach_encoder_assignment ? out.assignment.detach() : out.assignment;
        const ag::Var fused = enc_fusion_(out.x, st.locations);
        const ag::Var z = grouping::cities_to_groups(fused, s);
        if (config_.variant == Variant::NoCe) {
            out.correlations = ag::Var::constant(
                ag::Matrix::Zero(ag::Index(st.group_edges.edge_count()), ag::Index(config_.attr_dim)));
        } else {
            const ag::Var time = time_(batch.time);
            out.correlations = correlation_(z, time, st.group_edges);
        }
        const ag::Var z_updated = hier_mp::group_message_passing(enc_group_mp_, z, st.group_edges, out.correlations);
        x_group = grouping::groups_to_cities(s, z_updated);
    }
    const ag::Var x2 = enc_cat_(out.x, x_group);
    out.x3 = hier_mp::city_message_passing(enc_city_mp_, x2, st.city_edges, st.edge_weights);
    return out;
}

ag::Var Model::decode(const ag::Var& x3, const ag::Var& assignment, const ag::Var& correlations,
                      std::size_t batch_size) const {
    const auto& st = statics(batch_size);
    const auto rows = ag::Index(batch_size * config_.n_city);
    ag::Var x_group;
    if (config_.variant == Variant::Fga) {
        x_group = ag::zeros_like_rows(rows, ag::Index(config_.hidden));
    } else {
        const ag::Var s = assignment.detach();
        const ag::Var fused = dec_fusion_(x3, st.locations);
        const ag::Var z = grouping::cities_to_groups(fused, s);
        const ag::Var z_updated = hier_mp::group_message_passing(dec_group_mp_, z, st.group_edges, correlations);
        x_group = grouping::groups_to_cities(s, z_updated);
    }
    const ag::Var x2 = dec_cat_(x3, x_group);
    return hier_mp::city_message_passing(dec_city_mp_, x2, st.city_edges, st.edge_weights);
}

ag::Var Model::forecast_head(const ag::Var& x_output) const { return head_(x_output); }

ForecastOutput Model::forward(const Batch& batch, const ForwardOptions& options) const {
    ForecastOutput out;
    out.encoded = encode(batch, options);
    out.x_output = decode(out.encoded.x3, out.encoded.assignment, out.encoded.correlations, batch.size);
    out.predictions = forecast_head(out.x_output);
    return out;
}

ag::Var Model::loss(const ForecastOutput& output, const Batch& batch) const {
    return ag::mean_abs_error(output.predictions, batch.target);
}

std::vector<ag::Matrix> Model::snapshot() const {
    std::vector<ag::Matrix> values;
    for (const auto& p : params_.all()) values.push_back(p.var.value());
    return values;
}

void Model::restore(const std::vector<ag::Matrix>& values) {
    auto& all = params_.all();
    if (values.size() != all.size()) throw ConfigError("snapshot does not match the parameter set");
    for (std::size_t i = 0; i < all.size(); ++i) all[i].var.mutable_value() = values[i];
}

// -- checkpoints ----------------------------------------------------------------------

namespace {

json config_to_json(const ModelConfig& c) {
    return json{{"n_city", c.n_city},
                {"n_group", c.n_group},
                {"tau_in", c.tau_in},
                {"tau_out", c.tau_out},
                {"hidden", c.hidden},
                {"heads", c.heads},
                {"ff_width", c.ff_width},
                {"encoder_blocks", c.encoder_blocks},
                {"gnn_layers", c.gnn_layers},
                {"attr_dim", c.attr_dim},
                {"month_dim", c.month_dim},
                {"day_of_week_dim", c.day_of_week_dim},
                {"hour_dim", c.hour_dim},
                {"radius_km", c.radius_km},
                {"distance", graph::distance_metric_name(c.distance)},
                {"variant", variant_name(c.variant)},
                {"seed", c.seed}};
}

ModelConfig config_from_json(const json& j) {
    ModelConfig c;
    c.n_city = j.at("n_city").get<std::size_t>();
    c.n_group = j.at("n_group").get<std::size_t>();
    c.tau_in = j.at("tau_in").get<std::size_t>();
    c.tau_out = j.at("tau_out").get<std::size_t>();
    c.hidden = j.at("hidden").get<std::size_t>();
    c.heads = j.at("heads").get<std::size_t>();
    c.ff_width = j.at("ff_width").get<std::size_t>();
    c.encoder_blocks = j.at("encoder_blocks").get<std::size_t>();
    c.gnn_layers = j.at("gnn_layers").get<std::size_t>();
    c.attr_dim = j.at("attr_dim").get<std::size_t>();
    c.month_dim = j.at("month_dim").get<std::size_t>();
    c.day_of_week_dim = j.at("day_of_week_dim").get<std::size_t>();
    c.hour_dim = j.at("hour_dim").get<std::size_t>();
    c.radius_km = j.at("radius_km").get<double>();
    c.distance = graph::parse_distance_metric(j.at("distance").get<std::string>());
    c.variant = parse_variant(j.at("variant").get<std::string>());
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

json matrix_to_json(const ag::Matrix& m) {
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

ag::Matrix matrix_from_json(const json& j) {
    const auto rows = j.at("rows").get<ag::Index>();
    const auto cols = j.at("cols").get<ag::Index>();
    const auto values = j.at("data").get<std::vector<double>>();
    if (ag::Index(values.size()) != rows * cols) throw ConfigError("checkpoint tensor size mismatch");
    ag::Matrix m(rows, cols);
    std::copy(values.begin(), values.end(), m.data());
    return m;
}

json read_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open checkpoint " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("checkpoint " + path.string() + " is not valid JSON: " + e.what());
    }
    if (j.value("format", "") != kCheckpointFormat) throw ConfigError(path.string() + " is not a model checkpoint");
    if (j.value("version", 0) != kCheckpointVersion)
        throw ConfigError("unsupported checkpoint version " + std::to_string(j.value("version", 0)));
    return j;
}

std::vector<graph::Location> locations_from_json(const json& j) {
    std::vector<graph::Location> out;
    for (const auto& l : j) out.push_back({l.at(0).get<double>(), l.at(1).get<double>()});
    return out;
}

}  // namespace

void Model::save(const std::filesystem::path& path) const {
    json j;
    j["format"] = kCheckpointFormat;
    j["version"] = kCheckpointVersion;
    j["config"] = config_to_json(config_);
    json locs = json::array();
    for (const auto& l : locations_) locs.push_back({l[0], l[1]});
    j["locations"] = std::move(locs);
    j["normalization"] = {{"mean", normalization.mean}, {"stddev", normalization.stddev}};
    if (fixed_assignment_) j["fixed_assignment"] = matrix_to_json(*fixed_assignment_);
    json params = json::array();
    for (const auto& p : params_.all()) {
        json entry = matrix_to_json(p.var.value());
        entry["name"] = p.name;
        entry["group"] = p.group == ParamGroup::AssignmentLogits ? "assignment_logits" : "base";
        params.push_back(std::move(entry));
    }
    j["parameters"] = std::move(params);

    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write checkpoint " + path.string());
    out << j.dump() << '\n';
}

Model Model::load(const std::filesystem::path& path) {
    const json j = read_checkpoint(path);
    Model model(config_from_json(j.at("config")), locations_from_json(j.at("locations")));
    model.load_parameters(path);
    return model;
}

void Model::load_parameters(const std::filesystem::path& path) {
    const json j = read_checkpoint(path);
    const ModelConfig stored = config_from_json(j.at("config"));
    if (!(stored == config_)) {
        std::ostringstream msg;
        msg << "checkpoint configuration differs from the model (checkpoint n_city=" << stored.n_city
            << " n_group=" << stored.n_group << " variant=" << variant_name(stored.variant)
            << "; model n_city=" << config_.n_city << " n_group=" << config_.n_group
            << " variant=" << variant_name(config_.variant) << ")";
        throw ConfigError(msg.str());
    }
    if (locations_from_json(j.at("locations")) != locations_)
        throw ConfigError("checkpoint city locations differ from the model");

    const auto& entries = j.at("parameters");
    auto& all = params_.all();
    if (entries.size() != all.size()) throw ConfigError("checkpoint parameter count mismatch");
    for (std::size_t i = 0; i < all.size(); ++i) {
        const auto& e = entries[i];
        if (e.at("name").get<std::string>() != all[i].name)
            throw ConfigError("checkpoint parameter " + e.at("name").get<std::string>() + " where " + all[i].name +
                              " was expected");
        ag::Matrix m = matrix_from_json(e);
        if (m.rows() != all[i].var.rows() || m.cols() != all[i].var.cols())
            throw ConfigError("checkpoint parameter " + all[i].name + " has the wrong shape");
        all[i].var.mutable_value() = std::move(m);
    }
    const auto& norm = j.at("normalization");
    normalization.mean = norm.at("mean").get<std::array<double, data::kRawFeatures>>();
    normalization.stddev = norm.at("stddev").get<std::array<double, data::kRawFeatures>>();
    if (j.contains("fixed_assignment")) fixed_assignment_ = matrix_from_json(j.at("fixed_assignment"));
}

double mean_abs_error(const ag::Matrix& pred, const ag::Matrix& target) {
    if (pred.rows() != target.rows() || pred.cols() != target.cols())
        throw std::invalid_argument("mean_abs_error shape mismatch");
    if (pred.size() == 0) return 0.0;
    return (pred - target).cwiseAbs().sum() / double(pred.size());
}

}  // namespace hiergnn
