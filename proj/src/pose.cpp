#include "falldet/pose.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace falldet {

namespace {

constexpr std::array<std::string_view, kNumKeypoints> kNames = {
    "nose",          "left_eye",       "right_eye",  "left_ear",    "right_ear",  "left_shoulder",
    "right_shoulder", "left_elbow",    "right_elbow", "left_wrist", "right_wrist", "left_hip",
    "right_hip",     "left_knee",      "right_knee", "left_ankle",  "right_ankle",
};

std::string where(std::size_t line) {
  return line == 0 ? std::string{} : "line " + std::to_string(line) + ": ";
}

[[noreturn]] void schema_fail(std::size_t line, const std::string& field, const std::string& msg) {
  throw SchemaError(line, field, where(line) + field + ": " + msg);
}

bool in_unit_range(double v) { return v >= 0.0 && v <= 1.0; }

double unit_value(const nlohmann::json& v, std::size_t line, const std::string& field) {
  if (!v.is_number()) schema_fail(line, field, "expected a number");
  const double d = v.get<double>();
  if (!in_unit_range(d)) schema_fail(line, field, "value " + v.dump() + " outside [0,1]");
  return d;
}

std::uint64_t uint_value(const nlohmann::json& v, std::size_t line, const std::string& field) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return v.get<std::uint64_t>();
  schema_fail(line, field, "expected a nonnegative integer");
}

}  // namespace

std::string_view keypoint_name(KeypointId id) { return kNames[to_index(id)]; }

std::optional<KeypointId> keypoint_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == name) return static_cast<KeypointId>(i);
  }
  return std::nullopt;
}

PoseFrame make_frame(std::uint64_t frame_index, std::optional<std::uint64_t> timestamp_ms,
                     const std::array<std::array<double, 3>, kNumKeypoints>& triples) {
  PoseFrame f;
  f.frame_index = frame_index;
  f.timestamp_ms = timestamp_ms;
  for (std::size_t i = 0; i < kNumKeypoints; ++i) {
    f.keypoints[i] = Keypoint{static_cast<KeypointId>(i), triples[i][0], triples[i][1], triples[i][2]};
  }
  return f;
}

StreamFormatError::StreamFormatError(std::size_t line, std::string field, const std::string& what)
    : std::runtime_error(what), line_(line), field_(std::move(field)) {}

void validate_frame(const PoseFrame& frame, std::size_t line) {
  for (std::size_t i = 0; i < kNumKeypoints; ++i) {
    const Keypoint& k = frame.keypoints[i];
    const std::string base = "keypoints[" + std::to_string(i) + "]";
    if (to_index(k.id) != i) schema_fail(line, base, "keypoint out of index order");
    if (!in_unit_range(k.y)) schema_fail(line, base + ".y", "outside [0,1]");
    if (!in_unit_range(k.x)) schema_fail(line, base + ".x", "outside [0,1]");
    if (!in_unit_range(k.confidence)) schema_fail(line, base + ".confidence", "outside [0,1]");
  }
}

PoseFrame parse_frame(std::string_view text, std::size_t line) {
  using json = nlohmann::json;

  // nlohmann keeps the last of duplicate keys silently; reject them here instead.
  std::vector<std::set<std::string>> open_objects;
  const json::parser_callback_t on_event = [&](int, json::parse_event_t event, json& parsed) {
    switch (event) {
      case json::parse_event_t::object_start:
        open_objects.emplace_back();
        break;
      case json::parse_event_t::object_end:
        if (!open_objects.empty()) open_objects.pop_back();
        break;
      case json::parse_event_t::key: {
        const auto& key = parsed.get_ref<const std::string&>();
        if (!open_objects.empty() && !open_objects.back().insert(key).second) {
          schema_fail(line, key, "duplicate key");
        }
        break;
      }
      default:
        break;
    }
    return true;
  };

  json doc;
  try {
    doc = json::parse(text.begin(), text.end(), on_event);
  } catch (const json::parse_error& e) {
    throw MalformedLine(line, "", where(line) + "not valid JSON: " + e.what());
  }
  if (!doc.is_object()) throw MalformedLine(line, "", where(line) + "expected a JSON object");

  for (const char* key : {"frame_index", "timestamp_ms", "keypoints"}) {
    if (!doc.contains(key)) schema_fail(line, key, "missing field");
  }
  if (doc.size() != 3) {
    for (const auto& [key, _] : doc.items()) {
      if (key != "frame_index" && key != "timestamp_ms" && key != "keypoints") {
        schema_fail(line, key, "unexpected field");
      }
    }
  }

  PoseFrame frame;
  frame.frame_index = uint_value(doc["frame_index"], line, "frame_index");
  if (const auto& ts = doc["timestamp_ms"]; !ts.is_null()) {
    frame.timestamp_ms = uint_value(ts, line, "timestamp_ms");
  }

  const auto& kps = doc["keypoints"];
  if (!kps.is_array()) schema_fail(line, "keypoints", "expected an array");
  if (kps.size() != kNumKeypoints) {
    const std::string field =
        kps.size() < kNumKeypoints ? "keypoints[" + std::to_string(kps.size()) + "]" : "keypoints";
    schema_fail(line, field,
                "expected 17 keypoints, got " + std::to_string(kps.size()) +
                    (kps.size() < kNumKeypoints
                         ? " (missing " + std::string(kNames[kps.size()]) + " onward)"
                         : ""));
  }
  for (std::size_t i = 0; i < kNumKeypoints; ++i) {
    const std::string base = "keypoints[" + std::to_string(i) + "]";
    const auto& triple = kps[i];
    if (!triple.is_array() || triple.size() != 3) {
      schema_fail(line, base, "expected [y, x, confidence]");
    }
    frame.keypoints[i] = Keypoint{static_cast<KeypointId>(i), unit_value(triple[0], line, base + ".y"),
                                  unit_value(triple[1], line, base + ".x"),
                                  unit_value(triple[2], line, base + ".confidence")};
  }
  return frame;
}

std::string serialize_frame(const PoseFrame& frame) {
  nlohmann::ordered_json doc;
  doc["frame_index"] = frame.frame_index;
  doc["timestamp_ms"] = frame.timestamp_ms ? nlohmann::ordered_json(*frame.timestamp_ms) : nlohmann::ordered_json();
  auto& kps = doc["keypoints"] = nlohmann::ordered_json::array();
  for (const Keypoint& k : frame.keypoints) kps.push_back({k.y, k.x, k.confidence});
  return doc.dump();
}

std::vector<Keypoint> confident_keypoints(const PoseFrame& frame, double threshold) {
  std::vector<Keypoint> out;
  for (const Keypoint& k : frame.keypoints) {
    if (k.confidence > threshold) out.push_back(k);
  }
  return out;
}

std::optional<PoseFrame> FrameReader::next() {
  if (!std::getline(in_, buffer_)) return std::nullopt;
  ++line_;
  PoseFrame frame = parse_frame(buffer_, line_);
  if (last_index_ && frame.frame_index <= *last_index_) {
    throw DecreasingIndex(line_, "frame_index",
                          where(line_) + "frame_index " + std::to_string(frame.frame_index) +
                              " does not increase past " + std::to_string(*last_index_));
  }
  last_index_ = frame.frame_index;
  return frame;
}

std::vector<PoseFrame> read_frames(std::istream& in) {
  FrameReader reader(in);
  std::vector<PoseFrame> frames;
  while (auto f = reader.next()) frames.push_back(std::move(*f));
  return frames;
}

std::vector<PoseFrame> read_frames_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open stream file '" + path + "'");
  return read_frames(in);
}

}  // namespace falldet
