#include "falldet/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "omp.hpp"

namespace falldet {

#pragma omp declare reduction(cm_sum : ConfusionMatrix : omp_out += omp_in)

namespace {

std::optional<double> ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

std::vector<PoseFrame> load_video_frames(const VideoRecord& record) {
  try {
    return read_frames_file(record.stream_path);
  } catch (const std::exception& e) {
    throw StreamError(record.id, e.what());
  }
}

template <typename T>
std::vector<T> sorted_unique(std::vector<T> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

std::string_view to_string(Label label) { return label == Label::Fall ? "fall" : "adl"; }

std::optional<Label> label_from_string(std::string_view name) {
  if (name == "fall") return Label::Fall;
  if (name == "adl") return Label::ADL;
  return std::nullopt;
}

StreamError::StreamError(std::string video_id, const std::string& detail)
    : std::runtime_error("video '" + video_id + "': " + detail), video_id_(std::move(video_id)) {}

std::vector<VideoRecord> manifest_from_json(const nlohmann::json& doc, const std::string& base_dir) {
  if (!doc.is_object() || !doc.contains("videos") || !doc["videos"].is_array()) {
    throw ManifestError("manifest must be an object with a \"videos\" array");
  }
  std::vector<VideoRecord> records;
  std::set<std::string> seen;
  for (const auto& entry : doc["videos"]) {
    if (!entry.is_object()) throw ManifestError("manifest entry must be an object");
    for (const char* key : {"id", "label", "stream"}) {
      if (!entry.contains(key) || !entry[key].is_string()) {
        throw ManifestError(std::string("manifest entry missing string field '") + key + "'");
      }
    }
    VideoRecord r;
    r.id = entry["id"].get<std::string>();
    const auto label = label_from_string(entry["label"].get<std::string>());
    if (!label) throw ManifestError("video '" + r.id + "': label must be \"fall\" or \"adl\"");
    r.label = *label;
    std::filesystem::path stream = entry["stream"].get<std::string>();
    if (stream.is_relative() && !base_dir.empty()) stream = std::filesystem::path(base_dir) / stream;
    r.stream_path = stream.string();
    if (!seen.insert(r.id).second) throw ManifestError("duplicate video id '" + r.id + "'");
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<VideoRecord> load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ManifestError("cannot open manifest '" + path + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ManifestError("manifest '" + path + "' is not valid JSON: " + e.what());
  }
  return manifest_from_json(doc, std::filesystem::path(path).parent_path().string());
}

Label classify_frames(std::span<const PoseFrame> frames, const DetectorConfig& config) {
  Detector detector(config);
  bool alerted = false;
  for (const PoseFrame& f : frames) alerted |= detector.push(f).alert_fired;
  return alerted ? Label::Fall : Label::ADL;
}

Label classify_video(const VideoRecord& record, const DetectorConfig& config) {
  std::ifstream in(record.stream_path);
  if (!in) throw StreamError(record.id, "cannot open stream file '" + record.stream_path + "'");
  Detector detector(config);
  bool alerted = false;
  try {
    FrameReader reader(in);
    // The whole stream is read even after an alert so that bad trailing lines still surface.
    while (auto frame = reader.next()) alerted |= detector.push(*frame).alert_fired;
  } catch (const std::exception& e) {
    throw StreamError(record.id, e.what());
  }
  return alerted ? Label::Fall : Label::ADL;
}

void ConfusionMatrix::add(Label truth, Label predicted) {
  if (truth == Label::Fall) {
    ++(predicted == Label::Fall ? tp : fn);
  } else {
    ++(predicted == Label::ADL ? tn : fp);
  }
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  tp += other.tp;
  tn += other.tn;
  fp += other.fp;
  fn += other.fn;
  return *this;
}

ConfusionMatrix evaluate_serial(std::span<const VideoRecord> manifest, const DetectorConfig& config) {
  validate(config);
  ConfusionMatrix cm;
  for (const VideoRecord& r : manifest) cm.add(r.label, classify_video(r, config));
  return cm;
}

ConfusionMatrix evaluate(std::span<const VideoRecord> manifest, const DetectorConfig& config) {
  validate(config);
  const auto n = static_cast<std::ptrdiff_t>(manifest.size());
  std::vector<std::exception_ptr> errors(manifest.size());
  ConfusionMatrix cm;

#pragma omp parallel for schedule(dynamic) reduction(cm_sum : cm)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const VideoRecord& r = manifest[static_cast<std::size_t>(i)];
    try {
      cm.add(r.label, classify_video(r, config));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }

  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return cm;
}

std::vector<std::string> MetricsReport::undefined() const {
  std::vector<std::string> names;
  const auto values = metric_values(*this);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!values[i]) names.emplace_back(kMetricNames[i]);
  }
  return names;
}

MetricsReport metrics_from_counts(const ConfusionMatrix& cm) {
  MetricsReport m;
  m.sensitivity = ratio(cm.tp, cm.tp + cm.fn);
  m.specificity = ratio(cm.tn, cm.fp + cm.tn);
  m.precision = ratio(cm.tp, cm.tp + cm.fp);
  m.false_positive_rate = ratio(cm.fp, cm.fp + cm.tn);
  m.false_negative_rate = ratio(cm.fn, cm.fn + cm.tp);
  m.accuracy = ratio(cm.tp + cm.tn, cm.total());
  m.f1 = ratio(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn);
  return m;
}

std::array<std::optional<double>, 7> metric_values(const MetricsReport& m) {
  return {m.sensitivity,         m.specificity, m.precision, m.false_positive_rate,
          m.false_negative_rate, m.accuracy,    m.f1};
}

nlohmann::ordered_json report_to_json(const ConfusionMatrix& cm, const MetricsReport& metrics,
                                      const DetectorConfig& config) {
  nlohmann::ordered_json doc;
  doc["counts"] = {{"tp", cm.tp}, {"tn", cm.tn}, {"fp", cm.fp}, {"fn", cm.fn}};
  auto& m = doc["metrics"] = nlohmann::ordered_json::object();
  const auto values = metric_values(metrics);
  for (std::size_t i = 0; i < values.size(); ++i) {
    m[std::string(kMetricNames[i])] = values[i] ? nlohmann::ordered_json(*values[i]) : nlohmann::ordered_json();
  }
  doc["undefined_metrics"] = metrics.undefined();
  doc["config"] = config_to_json(config);
  doc["config_digest"] = config_digest(config);
  return doc;
}

std::string format_report(const ConfusionMatrix& cm, const MetricsReport& metrics) {
  std::ostringstream out;
  char line[128];
  out << "confusion matrix (videos)\n";
  std::snprintf(line, sizeof line, "%-14s %14s %14s\n", "", "predicted fall", "predicted adl");
  out << line;
  std::snprintf(line, sizeof line, "%-14s %14llu %14llu\n", "actual fall",
                static_cast<unsigned long long>(cm.tp), static_cast<unsigned long long>(cm.fn));
  out << line;
  std::snprintf(line, sizeof line, "%-14s %14llu %14llu\n", "actual adl",
                static_cast<unsigned long long>(cm.fp), static_cast<unsigned long long>(cm.tn));
  out << line;
  const auto values = metric_values(metrics);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::string name(kMetricNames[i]);
    if (values[i]) {
      std::snprintf(line, sizeof line, "%-20s %.4f\n", name.c_str(), *values[i]);
    } else {
      std::snprintf(line, sizeof line, "%-20s %s\n", name.c_str(), "undefined");
    }
    out << line;
  }
  return out.str();
}

SweepGrid grid_from_json(const nlohmann::json& doc, const DetectorConfig& base) {
  if (!doc.is_object()) throw ConfigError("grid must be a JSON object");
  SweepGrid grid{{base.confidence_threshold}, {base.threshold_y}, {base.threshold_x}, {base.min_counter}};

  auto unit_axis = [](const nlohmann::json& v, const std::string& key) {
    if (!v.is_array() || v.empty()) throw ConfigError("grid axis '" + key + "' must be a nonempty array");
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) throw ConfigError("grid axis '" + key + "' holds a non-number");
      const double d = x.get<double>();
      if (!(d >= 0.0 && d <= 1.0)) {
        throw ConfigError("grid axis '" + key + "' value " + x.dump() + " outside [0,1]");
      }
      out.push_back(d);
    }
    return sorted_unique(std::move(out));
  };

  for (const auto& [key, value] : doc.items()) {
    if (key == "confidence_threshold") {
      grid.confidence_threshold = unit_axis(value, key);
    } else if (key == "threshold_y") {
      grid.threshold_y = unit_axis(value, key);
    } else if (key == "threshold_x") {
      grid.threshold_x = unit_axis(value, key);
    } else if (key == "min_counter") {
      if (!value.is_array() || value.empty()) {
        throw ConfigError("grid axis 'min_counter' must be a nonempty array");
      }
      std::vector<std::uint32_t> counters;
      for (const auto& x : value) {
        if (!x.is_number_integer() || x.get<std::int64_t>() < 1 || x.get<std::int64_t>() > UINT32_MAX) {
          throw ConfigError("grid axis 'min_counter' must hold positive integers");
        }
        counters.push_back(x.get<std::uint32_t>());
      }
      grid.min_counter = sorted_unique(std::move(counters));
    } else {
      throw ConfigError("unknown grid axis '" + key + "'");
    }
  }
  return grid;
}

std::vector<DetectorConfig> expand_grid(const SweepGrid& grid, const DetectorConfig& base) {
  std::vector<DetectorConfig> points;
  for (double c : grid.confidence_threshold) {
    for (double y : grid.threshold_y) {
      for (double x : grid.threshold_x) {
        for (std::uint32_t m : grid.min_counter) {
          DetectorConfig cfg = base;
          cfg.confidence_threshold = c;
          cfg.threshold_y = y;
          cfg.threshold_x = x;
          cfg.min_counter = m;
          validate(cfg);
          points.push_back(cfg);
        }
      }
    }
  }
  std::stable_sort(points.begin(), points.end(), [](const DetectorConfig& a, const DetectorConfig& b) {
    return std::tie(a.confidence_threshold, a.threshold_y, a.threshold_x, a.min_counter) <
           std::tie(b.confidence_threshold, b.threshold_y, b.threshold_x, b.min_counter);
  });
  return points;
}

std::vector<SweepRow> sweep(std::span<const VideoRecord> manifest, std::span<const DetectorConfig> points) {
  for (const DetectorConfig& p : points) validate(p);

  const auto n_videos = static_cast<std::ptrdiff_t>(manifest.size());
  std::vector<std::vector<PoseFrame>> streams(manifest.size());
  std::vector<std::exception_ptr> errors(manifest.size());

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t v = 0; v < n_videos; ++v) {
    try {
      streams[static_cast<std::size_t>(v)] = load_video_frames(manifest[static_cast<std::size_t>(v)]);
    } catch (...) {
      errors[static_cast<std::size_t>(v)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  // predictions[p * n_videos + v]
  const auto n_points = static_cast<std::ptrdiff_t>(points.size());
  std::vector<Label> predictions(points.size() * manifest.size());

#pragma omp parallel for collapse(2) schedule(dynamic)
  for (std::ptrdiff_t p = 0; p < n_points; ++p) {
    for (std::ptrdiff_t v = 0; v < n_videos; ++v) {
      predictions[static_cast<std::size_t>(p * n_videos + v)] =
          classify_frames(streams[static_cast<std::size_t>(v)], points[static_cast<std::size_t>(p)]);
    }
  }

  std::vector<SweepRow> rows;
  rows.reserve(points.size());
  for (std::size_t p = 0; p < points.size(); ++p) {
    SweepRow row{points[p], {}};
    for (std::size_t v = 0; v < manifest.size(); ++v) {
      row.counts.add(manifest[v].label, predictions[p * manifest.size() + v]);
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace falldet
