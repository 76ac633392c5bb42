#include "falldet/detector.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace falldet {

namespace {

constexpr std::size_t kUpperCount = to_index(KeypointId::RightWrist) + 1;
constexpr std::size_t kLowerCount = kNumKeypoints - kUpperCount;

template <std::size_t N>
struct GatedSet {
  std::array<const Keypoint*, N> items{};
  std::size_t size = 0;

  std::span<const Keypoint* const> view() const { return {items.data(), size}; }
};

struct GatedBody {
  GatedSet<kUpperCount> upper;
  GatedSet<kLowerCount> lower;
};

GatedBody gate(const PoseFrame& frame, double threshold) {
  GatedBody body;
  for (const Keypoint& k : frame.keypoints) {
    if (!(k.confidence > threshold)) continue;
    if (is_upper_body(k.id)) {
      body.upper.items[body.upper.size++] = &k;
    } else {
      body.lower.items[body.lower.size++] = &k;
    }
  }
  return body;
}

bool horizontal_pair(double uy, double ux, double ly, double lx, const DetectorConfig& c) {
  return std::abs(uy - ly) <= c.threshold_y + kDifferenceTolerance &&
         std::abs(ux - lx) > c.threshold_x + kDifferenceTolerance;
}

struct Point {
  double y = 0.0;
  double x = 0.0;
};

Point mean_point(std::span<const Keypoint* const> pts) {
  Point sum;
  for (const Keypoint* k : pts) {
    sum.y += k->y;
    sum.x += k->x;
  }
  const auto n = static_cast<double>(pts.size());
  return {sum.y / n, sum.x / n};
}

void require_unit(double v, const char* field) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw ConfigError(std::string(field) + " must be in [0,1], got " + std::to_string(v));
  }
}

StepResult step_at(const DetectorState& state, const PoseFrame& frame, const DetectorConfig& config,
                   std::size_t position) {
  if (state.last_frame_index && frame.frame_index <= *state.last_frame_index) {
    throw OutOfOrderFrame(position, frame.frame_index, *state.last_frame_index);
  }
  StepResult out{state, {}};
  FrameVerdict& v = out.verdict;
  v.frame_index = frame.frame_index;
  v.bed_filtered = bed_filter(frame, config);
  v.candidate = !v.bed_filtered && fall_candidate(frame, config);

  DetectorState& next = out.state;
  next.last_frame_index = frame.frame_index;
  if (v.candidate) {
    next.counter = state.counter + 1;
  } else {
    next.counter = 0;
    next.alert_latched = false;
  }
  v.alert_fired = next.counter == config.min_counter && !next.alert_latched;
  if (v.alert_fired) next.alert_latched = true;
  v.counter_after = next.counter;
  return out;
}

}  // namespace

std::string_view to_string(PairPolicy policy) {
  switch (policy) {
    case PairPolicy::AnyPair:
      return "AnyPair";
    case PairPolicy::AllPairs:
      return "AllPairs";
    case PairPolicy::Centroid:
      return "Centroid";
  }
  return "AnyPair";
}

std::optional<PairPolicy> pair_policy_from_string(std::string_view name) {
  for (PairPolicy p : {PairPolicy::AnyPair, PairPolicy::AllPairs, PairPolicy::Centroid}) {
    if (to_string(p) == name) return p;
  }
  return std::nullopt;
}

void validate(const DetectorConfig& config) {
  require_unit(config.confidence_threshold, "confidence_threshold");
  require_unit(config.threshold_y, "threshold_y");
  require_unit(config.threshold_x, "threshold_x");
  if (config.min_counter < 1) throw ConfigError("min_counter must be >= 1");
  if (config.bed_top_y) require_unit(*config.bed_top_y, "bed_top_y");
}

DetectorConfig config_from_json(const nlohmann::json& doc, DetectorConfig base) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  auto number = [](const nlohmann::json& v, const std::string& key) {
    if (!v.is_number()) throw ConfigError(key + " must be a number");
    return v.get<double>();
  };
  for (const auto& [key, value] : doc.items()) {
    if (key == "confidence_threshold") {
      base.confidence_threshold = number(value, key);
    } else if (key == "threshold_y") {
      base.threshold_y = number(value, key);
    } else if (key == "threshold_x") {
      base.threshold_x = number(value, key);
    } else if (key == "min_counter") {
      if (!value.is_number_integer() || value.get<std::int64_t>() < 1 ||
          value.get<std::int64_t>() > UINT32_MAX) {
        throw ConfigError("min_counter must be a positive integer");
      }
      base.min_counter = value.get<std::uint32_t>();
    } else if (key == "bed_top_y") {
      base.bed_top_y = value.is_null() ? std::nullopt : std::optional<double>(number(value, key));
    } else if (key == "pair_policy") {
      const auto policy = value.is_string() ? pair_policy_from_string(value.get<std::string>())
                                            : std::nullopt;
      if (!policy) throw ConfigError("pair_policy must be one of AnyPair, AllPairs, Centroid");
      base.pair_policy = *policy;
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  validate(base);
  return base;
}

DetectorConfig load_config_file(const std::string& path, DetectorConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(doc, base);
}

nlohmann::ordered_json config_to_json(const DetectorConfig& config) {
  nlohmann::ordered_json doc;
  doc["confidence_threshold"] = config.confidence_threshold;
  doc["threshold_y"] = config.threshold_y;
  doc["threshold_x"] = config.threshold_x;
  doc["min_counter"] = config.min_counter;
  doc["bed_top_y"] = config.bed_top_y ? nlohmann::ordered_json(*config.bed_top_y) : nlohmann::ordered_json();
  doc["pair_policy"] = std::string(to_string(config.pair_policy));
  return doc;
}

std::string config_digest(const DetectorConfig& config) {
  // FNV-1a, 64 bit.
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : config_to_json(config).dump()) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

std::string verdict_to_jsonl(const FrameVerdict& v) {
  nlohmann::ordered_json doc;
  doc["frame_index"] = v.frame_index;
  doc["bed_filtered"] = v.bed_filtered;
  doc["candidate"] = v.candidate;
  doc["counter"] = v.counter_after;
  doc["alert"] = v.alert_fired;
  return doc.dump();
}

OutOfOrderFrame::OutOfOrderFrame(std::size_t position, std::uint64_t frame_index,
                                 std::uint64_t last_index)
    : std::runtime_error("frame " + std::to_string(position) + ": frame_index " +
                         std::to_string(frame_index) + " does not increase past " +
                         std::to_string(last_index)),
      position_(position) {}

bool bed_filter(const PoseFrame& frame, const DetectorConfig& config) {
  if (!config.bed_top_y) return false;
  const double bed = *config.bed_top_y;
  bool any = false;
  for (const Keypoint& k : frame.keypoints) {
    if (!is_upper_body(k.id) || !(k.confidence > config.confidence_threshold)) continue;
    if (!(k.y > bed)) return false;
    any = true;
  }
  return any;
}

bool fall_candidate(const PoseFrame& frame, const DetectorConfig& config) {
  const GatedBody body = gate(frame, config.confidence_threshold);
  if (body.upper.size == 0 || body.lower.size == 0) return false;

  switch (config.pair_policy) {
    case PairPolicy::AnyPair:
      for (const Keypoint* u : body.upper.view()) {
        for (const Keypoint* l : body.lower.view()) {
          if (horizontal_pair(u->y, u->x, l->y, l->x, config)) return true;
        }
      }
      return false;
    case PairPolicy::AllPairs:
      for (const Keypoint* u : body.upper.view()) {
        for (const Keypoint* l : body.lower.view()) {
          if (!horizontal_pair(u->y, u->x, l->y, l->x, config)) return false;
        }
      }
      return true;
    case PairPolicy::Centroid: {
      const Point u = mean_point(body.upper.view());
      const Point l = mean_point(body.lower.view());
      return horizontal_pair(u.y, u.x, l.y, l.x, config);
    }
  }
  return false;
}

StepResult step(const DetectorState& state, const PoseFrame& frame, const DetectorConfig& config) {
  return step_at(state, frame, config, 0);
}

std::vector<FrameVerdict> run_stream(std::span<const PoseFrame> frames, const DetectorConfig& config) {
  std::vector<FrameVerdict> verdicts;
  verdicts.reserve(frames.size());
  DetectorState state;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    StepResult r = step_at(state, frames[i], config, i);
    state = r.state;
    verdicts.push_back(r.verdict);
  }
  return verdicts;
}

Detector::Detector(DetectorConfig config) : config_(config) { validate(config_); }

FrameVerdict Detector::push(const PoseFrame& frame) {
  StepResult r = step_at(state_, frame, config_, position_);
  state_ = r.state;
  ++position_;
  return r.verdict;
}

}  // namespace falldet
