#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "falldet/pose.hpp"

namespace falldet {

/// Slack applied to coordinate differences before comparing them with
/// threshold_y (inclusive) and threshold_x (strict), so decimal inputs such as
/// 0.55 - 0.5 meet their thresholds exactly as written. Far below the
/// resolution of pose estimator output.
inline constexpr double kDifferenceTolerance = 1e-12;

/// How upper-body/lower-body keypoint pairs are combined into one frame decision.
enum class PairPolicy {
  AnyPair,   ///< some (upper, lower) pair passes both tests
  AllPairs,  ///< every pair passes; both sides nonempty
  Centroid,  ///< the mean upper point against the mean lower point
};

std::string_view to_string(PairPolicy policy);
std::optional<PairPolicy> pair_policy_from_string(std::string_view name);

struct DetectorConfig {
  double confidence_threshold = 0.5;
  double threshold_y = 0.05;
  double threshold_x = 0.5;
  std::uint32_t min_counter = 2;
  /// Approximate image y of the top of the bed. Absent disables bed suppression.
  std::optional<double> bed_top_y;
  PairPolicy pair_policy = PairPolicy::AnyPair;

  friend bool operator==(const DetectorConfig&, const DetectorConfig&) = default;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Throws ConfigError naming the offending field.
void validate(const DetectorConfig& config);

/// Keys are the field names; absent keys keep the values already in `base`.
DetectorConfig config_from_json(const nlohmann::json& doc, DetectorConfig base = {});
DetectorConfig load_config_file(const std::string& path, DetectorConfig base = {});
nlohmann::ordered_json config_to_json(const DetectorConfig& config);

/// Stable 16-hex-digit digest of the canonical config JSON.
std::string config_digest(const DetectorConfig& config);

struct DetectorState {
  std::uint32_t counter = 0;
  bool alert_latched = false;
  std::optional<std::uint64_t> last_frame_index;

  friend bool operator==(const DetectorState&, const DetectorState&) = default;
};

struct FrameVerdict {
  std::uint64_t frame_index = 0;
  bool bed_filtered = false;
  bool candidate = false;
  std::uint32_t counter_after = 0;
  bool alert_fired = false;

  friend bool operator==(const FrameVerdict&, const FrameVerdict&) = default;
};

/// {"frame_index":…, "bed_filtered":…, "candidate":…, "counter":…, "alert":…}
std::string verdict_to_jsonl(const FrameVerdict& verdict);

class OutOfOrderFrame : public std::runtime_error {
 public:
  OutOfOrderFrame(std::size_t position, std::uint64_t frame_index, std::uint64_t last_index);
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// True when every confident upper-body keypoint lies below the bed line (greater y).
/// Needs at least one such keypoint; always false with no bed line configured.
bool bed_filter(const PoseFrame& frame, const DetectorConfig& config);

/// The horizontal-body test between confident upper- and lower-body keypoints:
/// |dy| <= threshold_y and |dx| > threshold_x, combined per config.pair_policy.
bool fall_candidate(const PoseFrame& frame, const DetectorConfig& config);

struct StepResult {
  DetectorState state;
  FrameVerdict verdict;
};

/// One debounce transition. Pure; throws OutOfOrderFrame if the frame does not
/// advance past state.last_frame_index.
StepResult step(const DetectorState& state, const PoseFrame& frame, const DetectorConfig& config);

std::vector<FrameVerdict> run_stream(std::span<const PoseFrame> frames, const DetectorConfig& config);

/// Owns a DetectorState for incremental use.
class Detector {
 public:
  explicit Detector(DetectorConfig config);

  FrameVerdict push(const PoseFrame& frame);
  void reset() { state_ = {}; }

  const DetectorState& state() const noexcept { return state_; }
  const DetectorConfig& config() const noexcept { return config_; }

 private:
  DetectorConfig config_;
  DetectorState state_;
  std::size_t position_ = 0;
};

}  // namespace falldet
