#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "falldet/detector.hpp"
#include "falldet/evaluation.hpp"
#include "falldet/pose.hpp"

namespace falldet::synth {

enum class ScenarioKind {
  Standing,
  Walking,
  LyingFloor,
  LyingBed,
  FallForward,
  FallBackward,
  FallSide,
  NoisyGlitch,
};

inline constexpr ScenarioKind kAllKinds[] = {
    ScenarioKind::Standing,    ScenarioKind::Walking,      ScenarioKind::LyingFloor,
    ScenarioKind::LyingBed,    ScenarioKind::FallForward,  ScenarioKind::FallBackward,
    ScenarioKind::FallSide,    ScenarioKind::NoisyGlitch,
};

/// snake_case name, e.g. "fall_side".
std::string_view to_string(ScenarioKind kind);
/// Accepts snake_case ("fall_side") or the enumerator spelling ("FallSide").
std::optional<ScenarioKind> kind_from_string(std::string_view name);

/// Ground-truth label of a generated stream. Lying on the floor counts as a fall.
Label intended_label(ScenarioKind kind);

/// Bed line used by the LyingBed template. Every LyingBed upper-body keypoint lies below it.
inline constexpr double kTemplateBedTopY = 0.5;

/// Frames per second assumed for timestamps.
inline constexpr std::uint64_t kFramesPerSecond = 30;

struct Scenario {
  ScenarioKind kind = ScenarioKind::Standing;
  std::uint32_t frames = 1;
  std::uint64_t seed = 0;
  double noise_amplitude = 0.01;
};

class ScenarioError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

void validate(const Scenario& scenario);

/// Deterministic for equal scenarios. frame_index runs 0..frames-1.
///
/// Fall kinds end with max(2, floor(0.4 * frames)) horizontal frames (capped at
/// `frames`) that are candidates under any pair policy at default thresholds;
/// FallForward/Backward/Side reach them through an upright-to-crouched transition
/// whose frames are never candidates. LyingFloor is horizontal throughout.
/// Standing and Walking frames never are candidates. NoisyGlitch alternates
/// horizontal and upright frames, starting horizontal.
std::vector<PoseFrame> generate(const Scenario& scenario);

/// Named generator: std::mt19937_64 mapped to doubles via the top 53 bits.
class Rng {
 public:
  static constexpr std::string_view kName = "mt19937_64/u53/v1";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1).
  double unit();
  /// Uniform in [-1, 1).
  double symmetric() { return 2.0 * unit() - 1.0; }
  /// Uniform integer in [lo, hi].
  std::uint64_t between(std::uint64_t lo, std::uint64_t hi);

 private:
  std::mt19937_64 engine_;
};

/// Concatenated segments of random scenario kinds interleaved with unstructured
/// frames (random geometry, confidences clustered around 0.5, exact threshold
/// values). frame_index strictly increases with random gaps.
std::vector<PoseFrame> random_stream(std::uint64_t seed, std::size_t frames);

/// Brute-force reference for run_stream. Evaluates all 11 x 6 upper/lower index
/// pairs with no early exit and replays the counter rules; shares no code with
/// the detector.
std::vector<FrameVerdict> oracle_verdicts(std::span<const PoseFrame> frames, const DetectorConfig& config);

}  // namespace falldet::synth
