#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hiergnn::data {

/// Raised for malformed input files and invalid dataset requests.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// UTC time point with one-second resolution; the panel works on hour boundaries.
using Timestamp = std::chrono::sys_seconds;

Timestamp parse_timestamp(std::string_view text);
/// ISO-8601 "YYYY-MM-DDTHH:MM:SSZ".
std::string format_timestamp(Timestamp t);

struct CityRecord {
    int city_id = 0;
    std::string name;
    double longitude = 0.0;
    double latitude = 0.0;
};

/// Throws DataError when ids are not 0..n-1 in order or coordinates are out of range.
void validate_cities(std::span<const CityRecord> cities);

enum class WindDirection { N, NE, E, SE, S, SW, W, NW, None };

inline constexpr std::array<WindDirection, 9> kAllWindDirections = {
    WindDirection::N,  WindDirection::NE, WindDirection::E,  WindDirection::SE,  WindDirection::S,
    WindDirection::SW, WindDirection::W,  WindDirection::NW, WindDirection::None};

/// Accepts N, NE, E, SE, S, SW, W, NW, NONE.
WindDirection parse_wind_direction(std::string_view token);
std::string_view wind_direction_token(WindDirection direction);
/// Two-component (east, north) encoding with entries in {-1, 0, 1}.
std::array<int, 2> encode_wind_direction(WindDirection direction);
WindDirection decode_wind_vector(int east, int north);

/// Per-hour raw feature layout of a panel.
enum Feature : std::size_t {
    kAqi = 0,
    kHumidity,
    kRainfall,
    kPressure,
    kTemperature,
    kWindSpeed,
    kWindEast,
    kWindNorth,
};
inline constexpr std::size_t kRawFeatures = 8;
inline constexpr std::array<std::string_view, kRawFeatures> kFeatureNames = {
    "aqi", "humidity", "rainfall", "pressure", "temperature", "wind_speed", "wind_east", "wind_north"};

/// Dense hourly panel, laid out [city][hour][feature].
struct ObservationPanel {
    Timestamp start{};
    std::size_t n_cities = 0;
    std::size_t hours = 0;
    std::vector<double> data;
    /// 1 where the value was filled by interpolation.
    std::vector<std::uint8_t> filled;

    ObservationPanel() = default;
    ObservationPanel(Timestamp start, std::size_t n_cities, std::size_t hours);

    std::size_t offset(std::size_t city, std::size_t hour, std::size_t feature) const {
        return (city * hours + hour) * kRawFeatures + feature;
    }
    double at(std::size_t city, std::size_t hour, std::size_t feature) const {
        return data[offset(city, hour, feature)];
    }
    double& at(std::size_t city, std::size_t hour, std::size_t feature) {
        return data[offset(city, hour, feature)];
    }
    Timestamp time_at(std::size_t hour) const { return start + std::chrono::hours(hour); }
};

/// Fills NaN holes in one series in place: linear between present neighbours,
/// nearest present value at the ends. Marks filled cells. Returns false when
/// fewer than two values are present (series left untouched).
bool interpolate_series(std::span<double> values, std::span<std::uint8_t> filled);

/// Applies interpolate_series to every city/feature series of the panel.
/// Throws DataError listing every series with fewer than two present values.
void interpolate_missing(ObservationPanel& panel);

struct TimeFeatures {
    int month = 0;        // 0..11
    int day_of_week = 0;  // 0..6, Monday = 0
    int hour = 0;         // 0..23
    bool operator==(const TimeFeatures&) const = default;
};

TimeFeatures time_features(Timestamp t);

/// A sliding window over a panel. History covers hours
/// [start, start + tau_in), the target the following tau_out hours.
struct WindowedSample {
    std::size_t start = 0;
    std::size_t tau_in = 0;
    std::size_t tau_out = 0;
    Timestamp anchor_time{};  // last history hour

    std::size_t anchor_hour() const { return start + tau_in - 1; }
};

/// [n_cities x tau_in x kRawFeatures], row-major.
std::vector<double> history_of(const ObservationPanel& panel, const WindowedSample& sample);
/// [n_cities x tau_out] AQI values.
std::vector<double> target_of(const ObservationPanel& panel, const WindowedSample& sample);

std::size_t window_count(std::size_t hours, std::size_t tau_in, std::size_t tau_out, std::size_t step);
std::vector<WindowedSample> make_windows(const ObservationPanel& panel, std::size_t tau_in,
                                         std::size_t tau_out, std::size_t step = 1);

struct Split {
    std::vector<WindowedSample> train;
    std::vector<WindowedSample> validation;
    std::vector<WindowedSample> test;
};

/// 70/10/20 chronological split with boundaries floor(0.7 n) and floor(0.8 n).
Split chronological_split(std::span<const WindowedSample> samples);

struct NormalizationStats {
    std::array<double, kRawFeatures> mean{};
    std::array<double, kRawFeatures> stddev{};

    double normalize(std::size_t feature, double value) const {
        return (value - mean[feature]) / stddev[feature];
    }
    double denormalize(std::size_t feature, double value) const {
        return value * stddev[feature] + mean[feature];
    }
};

/// z-score statistics over every panel hour touched by the training windows.
/// Wind components are left unscaled (mean 0, stddev 1); zero-variance
/// features get stddev 1.
NormalizationStats fit_normalization(const ObservationPanel& panel,
                                     std::span<const WindowedSample> train);
ObservationPanel apply_normalization(const ObservationPanel& panel, const NormalizationStats& stats);
ObservationPanel remove_normalization(const ObservationPanel& panel, const NormalizationStats& stats);

struct SyntheticConfig {
    std::size_t n_cities = 20;
    std::size_t n_groups = 4;
    std::size_t hours = 720;
    std::uint64_t seed = 0;
    Timestamp start = parse_timestamp("2017-01-01T00:00:00Z");
};

struct SyntheticData {
    std::vector<CityRecord> cities;
    ObservationPanel panel;
    std::vector<int> groups_true;
};

/// Clustered cities with a few cross-cluster members; AQI follows damped
/// diffusion on the 250 km city graph driven by one forcing signal per
/// group plus a daily cycle. Weather tracks the same forcing.
SyntheticData generate_synthetic(const SyntheticConfig& config);

// -- file I/O -----------------------------------------------------------------

std::vector<CityRecord> read_cities_csv(const std::filesystem::path& path);
/// Reads observations.csv into a raw panel (NaN for missing cells) covering
/// the hour range of the file. Throws DataError with the row number for
/// schema violations.
ObservationPanel read_observations_csv(const std::filesystem::path& path, std::size_t n_cities);
std::vector<int> read_groups_csv(const std::filesystem::path& path, std::size_t n_cities);

void write_cities_csv(const std::filesystem::path& path, std::span<const CityRecord> cities);
void write_observations_csv(const std::filesystem::path& path, const ObservationPanel& panel);
void write_groups_csv(const std::filesystem::path& path, std::span<const int> groups);

struct Dataset {
    std::vector<CityRecord> cities;
    ObservationPanel panel;  // interpolated, raw units
};

/// cities.csv + observations.csv from a directory, interpolated.
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace hiergnn::data
