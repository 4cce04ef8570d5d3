#include "hiergnn/dataset.hpp"

#include "hiergnn/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

namespace hiergnn::data {

namespace chr = std::chrono;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

int parse_int_field(std::string_view text, std::string_view what) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw DataError("bad " + std::string(what) + " in timestamp");
    return value;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string current;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(std::move(current));
            current.clear();
        } else if (c != '\r') {
            current.push_back(c);
        }
    }
    fields.push_back(std::move(current));
    return fields;
}

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t");
    return std::string(s.substr(first, last - first + 1));
}

double parse_double(const std::string& text, const std::string& where) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value))
        throw DataError(where + ": cannot parse number '" + text + "'");
    return value;
}

std::ifstream open_input(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw DataError("file not found: " + path.string());
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    return in;
}

void expect_header(std::istream& in, const std::filesystem::path& path, std::string_view header) {
    std::string line;
    if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line) != header)
        throw DataError(path.string() + ":1: expected header '" + std::string(header) + "', got '" +
                        line + "'");
}

}  // namespace

// -- time ---------------------------------------------------------------------

Timestamp parse_timestamp(std::string_view text) {
    // YYYY-MM-DD[T| ]HH[:MM[:SS]][Z]
    std::string s = trim(text);
    if (!s.empty() && (s.back() == 'Z' || s.back() == 'z')) s.pop_back();
    if (s.size() < 13 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' '))
        throw DataError("malformed timestamp '" + std::string(text) + "'");
    const int year = parse_int_field(std::string_view(s).substr(0, 4), "year");
    const int month = parse_int_field(std::string_view(s).substr(5, 2), "month");
    const int day = parse_int_field(std::string_view(s).substr(8, 2), "day");
    const int hour = parse_int_field(std::string_view(s).substr(11, 2), "hour");
    int minute = 0, second = 0;
    if (s.size() >= 16) {
        if (s[13] != ':') throw DataError("malformed timestamp '" + std::string(text) + "'");
        minute = parse_int_field(std::string_view(s).substr(14, 2), "minute");
    }
    if (s.size() >= 19) {
        if (s[16] != ':') throw DataError("malformed timestamp '" + std::string(text) + "'");
        second = parse_int_field(std::string_view(s).substr(17, 2), "second");
    }
    if (s.size() != 13 && s.size() != 16 && s.size() != 19)
        throw DataError("malformed timestamp '" + std::string(text) + "'");
    const chr::year_month_day ymd{chr::year{year}, chr::month{unsigned(month)}, chr::day{unsigned(day)}};
    if (!ymd.ok() || hour > 23 || minute > 59 || second > 59)
        throw DataError("invalid date/time '" + std::string(text) + "'");
    return chr::sys_days{ymd} + chr::hours{hour} + chr::minutes{minute} + chr::seconds{second};
}

std::string format_timestamp(Timestamp t) {
    const auto day = chr::floor<chr::days>(t);
    const chr::year_month_day ymd{day};
    const chr::hh_mm_ss hms{t - day};
    std::ostringstream out;
    out << std::setfill('0') << std::setw(4) << int(ymd.year()) << '-' << std::setw(2)
        << unsigned(ymd.month()) << '-' << std::setw(2) << unsigned(ymd.day()) << 'T' << std::setw(2)
        << hms.hours().count() << ':' << std::setw(2) << hms.minutes().count() << ':' << std::setw(2)
        << hms.seconds().count() << 'Z';
    return out.str();
}

TimeFeatures time_features(Timestamp t) {
    const auto day = chr::floor<chr::days>(t);
    const chr::year_month_day ymd{day};
    const chr::weekday wd{day};
    TimeFeatures f;
    f.month = int(unsigned(ymd.month())) - 1;
    f.day_of_week = int(wd.iso_encoding()) - 1;
    f.hour = int(chr::duration_cast<chr::hours>(t - day).count());
    return f;
}

// -- cities ---------------------------------------------------------------------

void validate_cities(std::span<const CityRecord> cities) {
    for (std::size_t i = 0; i < cities.size(); ++i) {
        const auto& c = cities[i];
        if (c.city_id != int(i))
            throw DataError("city ids must be contiguous 0..n-1 in order; row " + std::to_string(i + 2) +
                            " has id " + std::to_string(c.city_id));
        if (!(c.longitude >= -180.0 && c.longitude <= 180.0) || !(c.latitude >= -90.0 && c.latitude <= 90.0))
            throw DataError("city " + std::to_string(i) + " has out-of-range coordinates");
    }
}

// -- wind -----------------------------------------------------------------------

WindDirection parse_wind_direction(std::string_view token) {
    static constexpr std::array<std::string_view, 9> kTokens = {"N",  "NE", "E",  "SE",  "S",
                                                                "SW", "W",  "NW", "NONE"};
    for (std::size_t i = 0; i < kTokens.size(); ++i)
        if (token == kTokens[i]) return kAllWindDirections[i];
    throw DataError("unknown wind_direction '" + std::string(token) + "'");
}

std::string_view wind_direction_token(WindDirection direction) {
    switch (direction) {
        case WindDirection::N: return "N";
        case WindDirection::NE: return "NE";
        case WindDirection::E: return "E";
        case WindDirection::SE: return "SE";
        case WindDirection::S: return "S";
        case WindDirection::SW: return "SW";
        case WindDirection::W: return "W";
        case WindDirection::NW: return "NW";
        case WindDirection::None: return "NONE";
    }
    return "NONE";
}

std::array<int, 2> encode_wind_direction(WindDirection direction) {
    switch (direction) {
        case WindDirection::N: return {0, 1};
        case WindDirection::NE: return {1, 1};
        case WindDirection::E: return {1, 0};
        case WindDirection::SE: return {1, -1};
        case WindDirection::S: return {0, -1};
        case WindDirection::SW: return {-1, -1};
        case WindDirection::W: return {-1, 0};
        case WindDirection::NW: return {-1, 1};
        case WindDirection::None: return {0, 0};
    }
    return {0, 0};
}

WindDirection decode_wind_vector(int east, int north) {
    for (auto d : kAllWindDirections) {
        const auto v = encode_wind_direction(d);
        if (v[0] == east && v[1] == north) return d;
    }
    throw DataError("no wind direction encodes to [" + std::to_string(east) + "," + std::to_string(north) + "]");
}

// -- panel ------------------------------------------------------------------------

ObservationPanel::ObservationPanel(Timestamp start_, std::size_t n_cities_, std::size_t hours_)
    : start(start_),
      n_cities(n_cities_),
      hours(hours_),
      data(n_cities_ * hours_ * kRawFeatures, 0.0),
      filled(n_cities_ * hours_ * kRawFeatures, 0) {}

bool interpolate_series(std::span<double> values, std::span<std::uint8_t> filled) {
    std::vector<std::size_t> present;
    for (std::size_t i = 0; i < values.size(); ++i)
        if (!std::isnan(values[i])) present.push_back(i);
    if (present.size() < 2) return false;

    for (std::size_t i = 0; i < present.front(); ++i) {
        values[i] = values[present.front()];
        filled[i] = 1;
    }
    for (std::size_t i = present.back() + 1; i < values.size(); ++i) {
        values[i] = values[present.back()];
        filled[i] = 1;
    }
    for (std::size_t p = 0; p + 1 < present.size(); ++p) {
        const std::size_t lo = present[p], hi = present[p + 1];
        const double a = values[lo], b = values[hi];
        for (std::size_t i = lo + 1; i < hi; ++i) {
            const double frac = double(i - lo) / double(hi - lo);
            values[i] = a + (b - a) * frac;
            filled[i] = 1;
        }
    }
    return true;
}

void interpolate_missing(ObservationPanel& panel) {
    std::vector<std::string> failures;
    std::vector<double> series(panel.hours);
    std::vector<std::uint8_t> mask(panel.hours);
    for (std::size_t c = 0; c < panel.n_cities; ++c) {
        for (std::size_t f = 0; f < kRawFeatures; ++f) {
            for (std::size_t h = 0; h < panel.hours; ++h) {
                series[h] = panel.at(c, h, f);
                mask[h] = 0;
            }
            if (!interpolate_series(series, mask)) {
                failures.push_back("city " + std::to_string(c) + "/" + std::string(kFeatureNames[f]));
                continue;
            }
            for (std::size_t h = 0; h < panel.hours; ++h) {
                panel.at(c, h, f) = series[h];
                panel.filled[panel.offset(c, h, f)] |= mask[h];
            }
        }
    }
    if (!failures.empty()) {
        std::string msg = "fewer than two observed values in series:";
        for (const auto& f : failures) msg += " " + f;
        throw DataError(msg);
    }
}

// -- windows ----------------------------------------------------------------------

std::vector<double> history_of(const ObservationPanel& panel, const WindowedSample& sample) {
    std::vector<double> out(panel.n_cities * sample.tau_in * kRawFeatures);
    auto dst = out.begin();
    for (std::size_t c = 0; c < panel.n_cities; ++c) {
        const auto src = panel.data.begin() + std::ptrdiff_t(panel.offset(c, sample.start, 0));
        dst = std::copy(src, src + std::ptrdiff_t(sample.tau_in * kRawFeatures), dst);
    }
    return out;
}

std::vector<double> target_of(const ObservationPanel& panel, const WindowedSample& sample) {
    std::vector<double> out(panel.n_cities * sample.tau_out);
    for (std::size_t c = 0; c < panel.n_cities; ++c)
        for (std::size_t k = 0; k < sample.tau_out; ++k)
            out[c * sample.tau_out + k] = panel.at(c, sample.start + sample.tau_in + k, kAqi);
    return out;
}

std::size_t window_count(std::size_t hours, std::size_t tau_in, std::size_t tau_out, std::size_t step) {
    if (step == 0) throw DataError("window step must be positive");
    if (hours < tau_in + tau_out) return 0;
    return (hours - tau_in - tau_out) / step + 1;
}

std::vector<WindowedSample> make_windows(const ObservationPanel& panel, std::size_t tau_in,
                                         std::size_t tau_out, std::size_t step) {
    if (tau_in == 0 || tau_out == 0) throw DataError("window lengths must be positive");
    if (panel.hours < tau_in + tau_out)
        throw DataError("panel has " + std::to_string(panel.hours) + " hours; at least " +
                        std::to_string(tau_in + tau_out) + " are required");
    const std::size_t n = window_count(panel.hours, tau_in, tau_out, step);
    std::vector<WindowedSample> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        WindowedSample s;
        s.start = i * step;
        s.tau_in = tau_in;
        s.tau_out = tau_out;
        s.anchor_time = panel.time_at(s.anchor_hour());
        out.push_back(s);
    }
    return out;
}

Split chronological_split(std::span<const WindowedSample> samples) {
    const std::size_t n = samples.size();
    if (n < 10) throw DataError("need at least 10 samples to split, got " + std::to_string(n));
    const std::size_t train_end = n * 7 / 10;
    const std::size_t val_end = n * 8 / 10;
    Split split;
    split.train.assign(samples.begin(), samples.begin() + std::ptrdiff_t(train_end));
    split.validation.assign(samples.begin() + std::ptrdiff_t(train_end), samples.begin() + std::ptrdiff_t(val_end));
    split.test.assign(samples.begin() + std::ptrdiff_t(val_end), samples.end());
    return split;
}

// -- normalization ------------------------------------------------------------------

NormalizationStats fit_normalization(const ObservationPanel& panel, std::span<const WindowedSample> train) {
    if (train.empty()) throw DataError("cannot fit normalization on an empty training split");
    std::size_t first = train.front().start, last = 0;
    for (const auto& s : train) {
        first = std::min(first, s.start);
        last = std::max(last, s.start + s.tau_in + s.tau_out);
    }
    last = std::min(last, panel.hours);

    NormalizationStats stats;
    const double count = double(panel.n_cities * (last - first));
    for (std::size_t f = 0; f < kRawFeatures; ++f) {
        if (f == kWindEast || f == kWindNorth) {
            stats.mean[f] = 0.0;
            stats.stddev[f] = 1.0;
            continue;
        }
        double sum = 0.0;
        for (std::size_t c = 0; c < panel.n_cities; ++c)
            for (std::size_t h = first; h < last; ++h) sum += panel.at(c, h, f);
        const double mean = sum / count;
        double sq = 0.0;
        for (std::size_t c = 0; c < panel.n_cities; ++c)
            for (std::size_t h = first; h < last; ++h) {
                const double d = panel.at(c, h, f) - mean;
                sq += d * d;
            }
        const double sd = std::sqrt(sq / count);
        stats.mean[f] = mean;
        stats.stddev[f] = sd > 1e-12 * std::max(1.0, std::abs(mean)) ? sd : 1.0;
    }
    return stats;
}

ObservationPanel apply_normalization(const ObservationPanel& panel, const NormalizationStats& stats) {
    ObservationPanel out = panel;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        const std::size_t f = i % kRawFeatures;
        out.data[i] = stats.normalize(f, out.data[i]);
    }
    return out;
}

ObservationPanel remove_normalization(const ObservationPanel& panel, const NormalizationStats& stats) {
    ObservationPanel out = panel;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        const std::size_t f = i % kRawFeatures;
        out.data[i] = stats.denormalize(f, out.data[i]);
    }
    return out;
}

// -- synthetic ----------------------------------------------------------------------

SyntheticData generate_synthetic(const SyntheticConfig& config) {
    const std::size_t n = config.n_cities;
    const std::size_t k = config.n_groups;
    if (k < 1 || n < k) throw DataError("synthetic data needs n_cities >= n_groups >= 1");
    if (config.hours < 1) throw DataError("synthetic data needs at least one hour");

    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    // Cluster centres at least ~600 km apart where possible.
    std::vector<graph::Location> centres;
    for (std::size_t g = 0; g < k; ++g) {
        graph::Location best{};
        for (int attempt = 0; attempt < 1000; ++attempt) {
            best = {100.0 + 20.0 * unit(rng), 24.0 + 18.0 * unit(rng)};
            bool far = true;
            for (const auto& c : centres) far = far && graph::haversine_km(best, c) > 600.0;
            if (far) break;
        }
        centres.push_back(best);
    }

    SyntheticData out;
    out.cities.resize(n);
    std::vector<std::size_t> cluster(n);
    std::vector<graph::Location> locations(n);
    for (std::size_t i = 0; i < n; ++i) {
        cluster[i] = i % k;
        graph::Location loc{};
        for (int attempt = 0; attempt < 1000; ++attempt) {
            loc = {centres[cluster[i]][0] + 0.7 * gauss(rng), centres[cluster[i]][1] + 0.7 * gauss(rng)};
            bool clear = true;
            for (std::size_t j = 0; j < i; ++j) clear = clear && graph::haversine_km(loc, locations[j]) > 5.0;
            if (clear) break;
        }
        locations[i] = loc;
        out.cities[i] = {int(i), "city_" + std::to_string(i), loc[0], loc[1]};
    }

    // Teleconnections: a few cities follow the forcing of another cluster.
    out.groups_true.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) out.groups_true[i] = int(cluster[i]);
    if (k >= 2) {
        const std::size_t n_tele = n / 8;
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t t = 0; t < n_tele; ++t) {
            const std::size_t city = order[t];
            const std::size_t shift = 1 + std::size_t(unit(rng) * double(k - 1)) % (k - 1);
            out.groups_true[city] = int((cluster[city] + shift) % k);
        }
    }

    const auto graph = graph::build_city_graph(locations, 250.0);
    std::vector<double> base(n);
    for (auto& b : base) b = 60.0 + 30.0 * unit(rng);
    std::vector<double> group_phase(k);
    for (auto& p : group_phase) p = 6.0 * unit(rng);

    constexpr std::size_t kBurnIn = 48;
    std::vector<double> forcing(k, 0.0), aqi(base), next(n);
    for (std::size_t g = 0; g < k; ++g) forcing[g] = gauss(rng);

    out.panel = ObservationPanel(config.start, n, config.hours);
    const auto start_hour = time_features(config.start).hour;
    for (std::size_t step = 0; step < kBurnIn + config.hours; ++step) {
        const double hour_of_day = double((start_hour + long(step) - long(kBurnIn) + 24 * 1000) % 24);
        for (std::size_t g = 0; g < k; ++g) forcing[g] = 0.95 * forcing[g] + 0.35 * gauss(rng);

        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t g = std::size_t(out.groups_true[i]);
            const double cycle = std::sin(2.0 * std::numbers::pi * (hour_of_day + group_phase[g]) / 24.0);
            const double level = base[i] + 35.0 * forcing[g] + 10.0 * cycle;
            double diffusion = 0.0, weight_sum = 0.0;
            for (std::size_t e : graph.incoming[i]) {
                diffusion += graph.edges[e].weight * aqi[graph.edges[e].src];
                weight_sum += graph.edges[e].weight;
            }
            if (weight_sum > 0.0) diffusion = diffusion / weight_sum - aqi[i];
            next[i] = std::max(0.0, aqi[i] + 0.25 * (level - aqi[i]) + 0.15 * diffusion + 2.0 * gauss(rng));
        }
        aqi.swap(next);
        if (step < kBurnIn) continue;

        const std::size_t h = step - kBurnIn;
        for (std::size_t i = 0; i < n; ++i) {
            const double f = forcing[std::size_t(out.groups_true[i])];
            const double humidity = std::clamp(55.0 + 12.0 * f + 4.0 * gauss(rng), 5.0, 100.0);
            const double rainfall = std::max(0.0, 0.2 * (humidity - 70.0) + 0.5 * gauss(rng));
            const double pressure = 1012.0 - 4.0 * f + 1.5 * gauss(rng);
            const double temperature =
                15.0 + 7.0 * std::sin(2.0 * std::numbers::pi * (hour_of_day - 9.0) / 24.0) - 2.0 * f + gauss(rng);
            const double wind_speed = std::abs(2.5 - 0.8 * f + 0.8 * gauss(rng));
            WindDirection dir = WindDirection::None;
            if (wind_speed >= 0.5) {
                // Stagnant high-forcing episodes bring southerly flow.
                const double angle = std::numbers::pi / 2.0 * (1.0 - f) + 0.6 * gauss(rng);
                const long sector = std::lround(angle / (std::numbers::pi / 4.0));
                static constexpr std::array<WindDirection, 8> kByAngle = {
                    WindDirection::E, WindDirection::NE, WindDirection::N,  WindDirection::NW,
                    WindDirection::W, WindDirection::SW, WindDirection::S, WindDirection::SE};
                dir = kByAngle[std::size_t(((sector % 8) + 8) % 8)];
            }
            const auto wind = encode_wind_direction(dir);
            const std::array<double, kRawFeatures> row = {
                aqi[i], humidity, rainfall, pressure, temperature, wind_speed, double(wind[0]), double(wind[1])};
            for (std::size_t f2 = 0; f2 < kRawFeatures; ++f2) out.panel.at(i, h, f2) = row[f2];
        }
    }
    return out;
}

// -- file I/O -------------------------------------------------------------------------

std::vector<CityRecord> read_cities_csv(const std::filesystem::path& path) {
    auto in = open_input(path);
    expect_header(in, path, "city_id,name,longitude,latitude");
    std::vector<CityRecord> cities;
    std::string line;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto where = path.filename().string() + ":" + std::to_string(row);
        const auto fields = split_csv_line(line);
        if (fields.size() != 4) throw DataError(where + ": expected 4 fields");
        CityRecord c;
        c.city_id = int(parse_double(trim(fields[0]), where));
        c.name = trim(fields[1]);
        c.longitude = parse_double(trim(fields[2]), where);
        c.latitude = parse_double(trim(fields[3]), where);
        cities.push_back(std::move(c));
    }
    if (cities.empty()) throw DataError(path.string() + ": no cities");
    std::sort(cities.begin(), cities.end(), [](const auto& a, const auto& b) { return a.city_id < b.city_id; });
    validate_cities(cities);
    return cities;
}

ObservationPanel read_observations_csv(const std::filesystem::path& path, std::size_t n_cities) {
    auto in = open_input(path);
    expect_header(in, path,
                  "city_id,timestamp,aqi,humidity,rainfall,pressure,temperature,wind_speed,wind_direction");

    struct Row {
        std::size_t city;
        Timestamp time;
        std::array<double, kRawFeatures> values;
    };
    std::vector<Row> rows;
    std::string line;
    std::size_t row_no = 1;
    while (std::getline(in, line)) {
        ++row_no;
        if (trim(line).empty()) continue;
        const auto where = path.filename().string() + ":" + std::to_string(row_no);
        const auto fields = split_csv_line(line);
        if (fields.size() != 9) throw DataError(where + ": expected 9 fields, got " + std::to_string(fields.size()));
        const double id = parse_double(trim(fields[0]), where);
        if (id < 0 || id >= double(n_cities) || id != std::floor(id))
            throw DataError(where + ": unknown city_id " + trim(fields[0]));
        Row r{};
        r.city = std::size_t(id);
        try {
            r.time = parse_timestamp(fields[1]);
        } catch (const DataError& e) {
            throw DataError(where + ": " + e.what());
        }
        if ((r.time.time_since_epoch().count() % 3600) != 0)
            throw DataError(where + ": timestamp not on an hour boundary");
        for (std::size_t f = 0; f < 6; ++f) {
            const auto cell = trim(fields[2 + f]);
            r.values[f] = cell.empty() ? kNaN : parse_double(cell, where);
        }
        const auto token = trim(fields[8]);
        if (token.empty()) {
            r.values[kWindEast] = r.values[kWindNorth] = kNaN;
        } else {
            try {
                const auto v = encode_wind_direction(parse_wind_direction(token));
                r.values[kWindEast] = v[0];
                r.values[kWindNorth] = v[1];
            } catch (const DataError& e) {
                throw DataError(where + ": " + e.what());
            }
        }
        rows.push_back(r);
    }
    if (rows.empty()) throw DataError(path.string() + ": no observations");

    auto [lo, hi] = std::minmax_element(rows.begin(), rows.end(),
                                        [](const Row& a, const Row& b) { return a.time < b.time; });
    const Timestamp start = lo->time;
    const auto hours = std::size_t(chr::duration_cast<chr::hours>(hi->time - start).count()) + 1;

    ObservationPanel panel(start, n_cities, hours);
    std::fill(panel.data.begin(), panel.data.end(), kNaN);
    std::vector<std::uint8_t> seen(n_cities * hours, 0);
    for (const auto& r : rows) {
        const auto h = std::size_t(chr::duration_cast<chr::hours>(r.time - start).count());
        if (seen[r.city * hours + h])
            throw DataError(path.string() + ": duplicate observation for city " + std::to_string(r.city) +
                            " at " + format_timestamp(r.time));
        seen[r.city * hours + h] = 1;
        for (std::size_t f = 0; f < kRawFeatures; ++f) panel.at(r.city, h, f) = r.values[f];
    }
    return panel;
}

std::vector<int> read_groups_csv(const std::filesystem::path& path, std::size_t n_cities) {
    auto in = open_input(path);
    expect_header(in, path, "city_id,group_id");
    std::vector<int> groups(n_cities, -1);
    std::string line;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto where = path.filename().string() + ":" + std::to_string(row);
        const auto fields = split_csv_line(line);
        if (fields.size() != 2) throw DataError(where + ": expected 2 fields");
        const double id = parse_double(trim(fields[0]), where);
        if (id < 0 || id >= double(n_cities)) throw DataError(where + ": unknown city_id");
        groups[std::size_t(id)] = int(parse_double(trim(fields[1]), where));
    }
    return groups;
}

void write_cities_csv(const std::filesystem::path& path, std::span<const CityRecord> cities) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << "city_id,name,longitude,latitude\n" << std::fixed << std::setprecision(6);
    for (const auto& c : cities) out << c.city_id << ',' << c.name << ',' << c.longitude << ',' << c.latitude << '\n';
}

void write_observations_csv(const std::filesystem::path& path, const ObservationPanel& panel) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << "city_id,timestamp,aqi,humidity,rainfall,pressure,temperature,wind_speed,wind_direction\n";
    out << std::fixed << std::setprecision(4);
    for (std::size_t c = 0; c < panel.n_cities; ++c) {
        for (std::size_t h = 0; h < panel.hours; ++h) {
            out << c << ',' << format_timestamp(panel.time_at(h));
            for (std::size_t f = 0; f < 6; ++f) {
                out << ',';
                const double v = panel.at(c, h, f);
                if (!std::isnan(v)) out << v;
            }
            out << ',';
            const double east = panel.at(c, h, kWindEast), north = panel.at(c, h, kWindNorth);
            if (!std::isnan(east) && !std::isnan(north))
                out << wind_direction_token(decode_wind_vector(int(std::lround(east)), int(std::lround(north))));
            out << '\n';
        }
    }
}

void write_groups_csv(const std::filesystem::path& path, std::span<const int> groups) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << "city_id,group_id\n";
    for (std::size_t i = 0; i < groups.size(); ++i) out << i << ',' << groups[i] << '\n';
}

Dataset load_dataset(const std::filesystem::path& dir) {
    Dataset ds;
    ds.cities = read_cities_csv(dir / "cities.csv");
    ds.panel = read_observations_csv(dir / "observations.csv", ds.cities.size());
    interpolate_missing(ds.panel);
    return ds;
}

}  // namespace hiergnn::data
