#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "falldet/detector.hpp"
#include "falldet/pose.hpp"

namespace falldet {

enum class Label { Fall, ADL };

std::string_view to_string(Label label);  // "fall" / "adl"
std::optional<Label> label_from_string(std::string_view name);

struct VideoRecord {
  std::string id;
  Label label = Label::ADL;
  std::string stream_path;
};

/// Stream failure for one video (unreadable file, bad line, out-of-order frames).
class StreamError : public std::runtime_error {
 public:
  StreamError(std::string video_id, const std::string& detail);
  const std::string& video_id() const noexcept { return video_id_; }

 private:
  std::string video_id_;
};

class ManifestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// {"videos":[{"id":…, "label":"fall"|"adl", "stream":"<path>"}…]}
/// Relative stream paths resolve against the manifest's directory.
std::vector<VideoRecord> load_manifest(const std::string& path);
std::vector<VideoRecord> manifest_from_json(const nlohmann::json& doc, const std::string& base_dir = {});

/// Fall iff the detector raises at least one alert over the video. Streams frames from disk.
Label classify_video(const VideoRecord& record, const DetectorConfig& config);
Label classify_frames(std::span<const PoseFrame> frames, const DetectorConfig& config);

struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  void add(Label truth, Label predicted);
  std::uint64_t total() const { return tp + tn + fp + fn; }

  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  friend ConfusionMatrix operator+(ConfusionMatrix a, const ConfusionMatrix& b) { return a += b; }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// Serial reference: one video at a time, in manifest order.
ConfusionMatrix evaluate_serial(std::span<const VideoRecord> manifest, const DetectorConfig& config);

/// Videos classified in parallel (OpenMP when available). Counts equal evaluate_serial's.
/// On failure rethrows the StreamError of the first failing video in manifest order.
ConfusionMatrix evaluate(std::span<const VideoRecord> manifest, const DetectorConfig& config);

/// Ratios with no denominator are empty rather than 0 or 1.
struct MetricsReport {
  std::optional<double> sensitivity;
  std::optional<double> specificity;
  std::optional<double> precision;
  std::optional<double> false_positive_rate;
  std::optional<double> false_negative_rate;
  std::optional<double> accuracy;
  std::optional<double> f1;

  /// Names of the undefined metrics, in report order.
  std::vector<std::string> undefined() const;
};

inline constexpr std::array<std::string_view, 7> kMetricNames = {
    "sensitivity",         "specificity", "precision", "false_positive_rate",
    "false_negative_rate", "accuracy",    "f1",
};

MetricsReport metrics_from_counts(const ConfusionMatrix& cm);

/// Values in kMetricNames order.
std::array<std::optional<double>, 7> metric_values(const MetricsReport& report);

/// Counts, the seven metrics at full precision (null when undefined), and the config.
nlohmann::ordered_json report_to_json(const ConfusionMatrix& cm, const MetricsReport& metrics,
                                      const DetectorConfig& config);

/// Human-readable matrix and metrics rounded to 4 decimals.
std::string format_report(const ConfusionMatrix& cm, const MetricsReport& metrics);

// Threshold sweeps.

struct SweepGrid {
  std::vector<double> confidence_threshold;
  std::vector<double> threshold_y;
  std::vector<double> threshold_x;
  std::vector<std::uint32_t> min_counter;
};

/// Axes absent from the document take the single value from `base`.
/// Throws ConfigError on empty axes or out-of-range values.
SweepGrid grid_from_json(const nlohmann::json& doc, const DetectorConfig& base);

/// Grid points sorted by (confidence_threshold, threshold_y, threshold_x, min_counter).
std::vector<DetectorConfig> expand_grid(const SweepGrid& grid, const DetectorConfig& base);

struct SweepRow {
  DetectorConfig config;
  ConfusionMatrix counts;
};

/// Loads each stream once, then evaluates every grid point (parallel over points x videos).
std::vector<SweepRow> sweep(std::span<const VideoRecord> manifest, std::span<const DetectorConfig> points);

}  // namespace falldet
