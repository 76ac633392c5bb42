#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace falldet {

inline constexpr std::size_t kNumKeypoints = 17;

/// Keypoint order emitted by the pose estimator. Values are the stream indices.
enum class KeypointId : std::uint8_t {
  Nose = 0,
  LeftEye,
  RightEye,
  LeftEar,
  RightEar,
  LeftShoulder,
  RightShoulder,
  LeftElbow,
  RightElbow,
  LeftWrist,
  RightWrist,
  LeftHip,
  RightHip,
  LeftKnee,
  RightKnee,
  LeftAnkle,
  RightAnkle,
};

std::string_view keypoint_name(KeypointId id);
std::optional<KeypointId> keypoint_from_name(std::string_view name);

constexpr std::size_t to_index(KeypointId id) { return static_cast<std::size_t>(id); }

/// Nose, eyes, ears, shoulders, elbows and wrists.
constexpr bool is_upper_body(KeypointId id) { return to_index(id) <= to_index(KeypointId::RightWrist); }
/// Hips, knees and ankles.
constexpr bool is_lower_body(KeypointId id) { return !is_upper_body(id); }

/// Normalized image coordinates: origin top-left, y grows downward, all in [0,1].
struct Keypoint {
  KeypointId id = KeypointId::Nose;
  double y = 0.0;
  double x = 0.0;
  double confidence = 0.0;

  friend bool operator==(const Keypoint&, const Keypoint&) = default;
};

struct PoseFrame {
  std::uint64_t frame_index = 0;
  std::optional<std::uint64_t> timestamp_ms;
  std::array<Keypoint, kNumKeypoints> keypoints{};

  const Keypoint& operator[](KeypointId id) const { return keypoints[to_index(id)]; }

  friend bool operator==(const PoseFrame&, const PoseFrame&) = default;
};

/// Builds a frame from (y, x, confidence) triples in index order. Does not validate.
PoseFrame make_frame(std::uint64_t frame_index, std::optional<std::uint64_t> timestamp_ms,
                     const std::array<std::array<double, 3>, kNumKeypoints>& triples);

// Errors raised by the stream codec. line == 0 means "not from a stream".

class StreamFormatError : public std::runtime_error {
 public:
  StreamFormatError(std::size_t line, std::string field, const std::string& what);
  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

/// Not a JSON object.
class MalformedLine : public StreamFormatError {
 public:
  using StreamFormatError::StreamFormatError;
};

/// Valid JSON but violates the frame schema.
class SchemaError : public StreamFormatError {
 public:
  using StreamFormatError::StreamFormatError;
};

/// frame_index did not strictly increase.
class DecreasingIndex : public StreamFormatError {
 public:
  using StreamFormatError::StreamFormatError;
};

/// Throws SchemaError when any keypoint is out of order or any value leaves [0,1].
void validate_frame(const PoseFrame& frame, std::size_t line = 0);

PoseFrame parse_frame(std::string_view line, std::size_t line_number = 0);

/// One line, no terminator. Numbers use the shortest decimal that round-trips the double.
std::string serialize_frame(const PoseFrame& frame);

/// Keypoints with confidence strictly greater than threshold, in index order.
std::vector<Keypoint> confident_keypoints(const PoseFrame& frame, double threshold);

/// Incremental JSONL reader. Holds one frame at a time.
class FrameReader {
 public:
  explicit FrameReader(std::istream& in) : in_(in) {}

  /// Next frame, or nullopt at end of input. Throws StreamFormatError subclasses.
  std::optional<PoseFrame> next();

  std::size_t line_number() const noexcept { return line_; }

 private:
  std::istream& in_;
  std::size_t line_ = 0;
  std::optional<std::uint64_t> last_index_;
  std::string buffer_;
};

std::vector<PoseFrame> read_frames(std::istream& in);
std::vector<PoseFrame> read_frames_file(const std::string& path);

}  // namespace falldet
