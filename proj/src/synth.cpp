#include "falldet/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace falldet::synth {

namespace {

using Geometry = std::array<std::array<double, 2>, kNumKeypoints>;  // (y, x) per keypoint

// Upright reference pose.
constexpr Geometry kUpright = {{
    {0.22416662, 0.579579},   {0.20926172, 0.5974146}, {0.20485064, 0.5642889},
    {0.22323, 0.6126661},     {0.21771489, 0.5370738}, {0.3235461, 0.6375601},
    {0.2964768, 0.48282918},  {0.43468294, 0.63684213}, {0.42770475, 0.4406372},
    {0.54110587, 0.6462866},  {0.5392799, 0.42464092}, {0.54277164, 0.57565194},
    {0.53679305, 0.48321638}, {0.69595444, 0.609515},  {0.7019378, 0.46842176},
    {0.85588527, 0.56420994}, {0.8588409, 0.47616798},
}};

constexpr std::array<double, kNumKeypoints> kConfidence = {
    0.7201656, 0.8043867,  0.5905826, 0.7964257,  0.7529471, 0.8950565,
    0.65825576, 0.7667525, 0.8829603, 0.6282949,  0.8215329, 0.85804665,
    0.88962007, 0.8796475, 0.6786141, 0.7951814,  0.82729894,
};

// Horizontal body, head on the left. Upper-body x in [0.05, 0.18], lower-body x in
// [0.80, 0.95], all y inside a 0.02 band centred on `level`.
Geometry horizontal(double level, bool head_left) {
  constexpr std::array<double, kNumKeypoints> x = {
      0.05, 0.06, 0.06, 0.08, 0.08, 0.12, 0.12, 0.15, 0.15,
      0.18, 0.18, 0.80, 0.80, 0.88, 0.88, 0.95, 0.95,
  };
  // Left-side keypoints sit slightly higher in the image than right-side ones.
  constexpr std::array<double, kNumKeypoints> dy = {
      0.0,   -0.01, 0.01, -0.01, 0.01, -0.01, 0.01, -0.01, 0.01,
      -0.01, 0.01,  -0.01, 0.01, -0.01, 0.01, -0.01, 0.01,
  };
  Geometry g{};
  for (std::size_t i = 0; i < kNumKeypoints; ++i) {
    g[i] = {level + dy[i], head_left ? x[i] : 1.0 - x[i]};
  }
  return g;
}

// Upright x with y squeezed into [0.66, 0.86]: the body has dropped but not spread out.
Geometry crouched() {
  Geometry g = kUpright;
  for (auto& p : g) p[0] = 0.66 + (p[0] - 0.20) * 0.3;
  return g;
}

// Sitting on a bed whose top is at kTemplateBedTopY; every upper-body y >= 0.565.
Geometry sitting_on_bed() {
  constexpr std::array<double, kNumKeypoints> y = {
      0.57, 0.565, 0.565, 0.57, 0.57, 0.62, 0.62, 0.68, 0.68,
      0.72, 0.72,  0.75,  0.75, 0.74, 0.74, 0.85, 0.85,
  };
  Geometry g = kUpright;
  for (std::size_t i = 0; i < kNumKeypoints; ++i) g[i][0] = y[i];
  return g;
}

Geometry lerp(const Geometry& a, const Geometry& b, double t) {
  Geometry g{};
  for (std::size_t i = 0; i < kNumKeypoints; ++i) {
    for (std::size_t c = 0; c < 2; ++c) g[i][c] = a[i][c] + (b[i][c] - a[i][c]) * t;
  }
  return g;
}

// Vertical jitter allowed on horizontal frames: band 0.02 + 2 * 0.0125 stays within 0.05.
constexpr double kHorizontalJitterY = 0.0125;

PoseFrame emit(std::uint64_t index, const Geometry& g, Rng& rng, double noise_y, double noise_x) {
  PoseFrame f;
  f.frame_index = index;
  f.timestamp_ms = index * 1000 / kFramesPerSecond;
  for (std::size_t i = 0; i < kNumKeypoints; ++i) {
    const double y = g[i][0] + noise_y * rng.symmetric();
    const double x = g[i][1] + noise_x * rng.symmetric();
    f.keypoints[i] = Keypoint{static_cast<KeypointId>(i), std::clamp(y, 0.0, 1.0),
                              std::clamp(x, 0.0, 1.0), kConfidence[i]};
  }
  return f;
}

std::vector<PoseFrame> fall_sequence(const Scenario& s, const Geometry& start, const Geometry& bend,
                                     const Geometry& end) {
  Rng rng(s.seed);
  const double a = s.noise_amplitude;
  const std::uint32_t n = s.frames;
  const std::uint32_t lying = std::min(n, std::max<std::uint32_t>(2, n * 2 / 5));
  const std::uint32_t pre = n - lying;
  const std::uint32_t transition = (pre + 1) / 2;
  const std::uint32_t hold = pre - transition;

  std::vector<PoseFrame> frames;
  frames.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    if (i < hold) {
      frames.push_back(emit(i, start, rng, a, a));
    } else if (i < pre) {
      const double t = static_cast<double>(i - hold + 1) / transition;
      frames.push_back(emit(i, lerp(start, bend, t), rng, a, a));
    } else {
      frames.push_back(emit(i, end, rng, std::min(a, kHorizontalJitterY), a));
    }
  }
  return frames;
}

}  // namespace

double Rng::unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::uint64_t Rng::between(std::uint64_t lo, std::uint64_t hi) {
  return lo + static_cast<std::uint64_t>(unit() * static_cast<double>(hi - lo + 1));
}

std::string_view to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::Standing:
      return "standing";
    case ScenarioKind::Walking:
      return "walking";
    case ScenarioKind::LyingFloor:
      return "lying_floor";
    case ScenarioKind::LyingBed:
      return "lying_bed";
    case ScenarioKind::FallForward:
      return "fall_forward";
    case ScenarioKind::FallBackward:
      return "fall_backward";
    case ScenarioKind::FallSide:
      return "fall_side";
    case ScenarioKind::NoisyGlitch:
      return "noisy_glitch";
  }
  return "standing";
}

std::optional<ScenarioKind> kind_from_string(std::string_view name) {
  std::string snake;
  for (std::size_t i = 0; i < name.size(); ++i) {
    const char c = name[i];
    if (c >= 'A' && c <= 'Z') {
      if (i > 0) snake.push_back('_');
      snake.push_back(static_cast<char>(c - 'A' + 'a'));
    } else {
      snake.push_back(c);
    }
  }
  for (ScenarioKind k : kAllKinds) {
    if (to_string(k) == snake) return k;
  }
  return std::nullopt;
}

Label intended_label(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::LyingFloor:
    case ScenarioKind::FallForward:
    case ScenarioKind::FallBackward:
    case ScenarioKind::FallSide:
      return Label::Fall;
    default:
      return Label::ADL;
  }
}

void validate(const Scenario& s) {
  if (s.frames < 1) throw ScenarioError("frames must be >= 1");
  if (!(s.noise_amplitude >= 0.0 && s.noise_amplitude <= 0.05)) {
    throw ScenarioError("noise_amplitude must be in [0, 0.05]");
  }
}

std::vector<PoseFrame> generate(const Scenario& s) {
  validate(s);
  const double a = s.noise_amplitude;
  switch (s.kind) {
    case ScenarioKind::FallSide:
      return fall_sequence(s, kUpright, crouched(), horizontal(0.38, true));
    case ScenarioKind::FallForward:
      return fall_sequence(s, kUpright, crouched(), horizontal(0.40, false));
    case ScenarioKind::FallBackward:
      return fall_sequence(s, kUpright, crouched(), horizontal(0.42, true));
    case ScenarioKind::LyingBed:
      return fall_sequence(s, sitting_on_bed(), horizontal(0.61, true), horizontal(0.61, true));
    default:
      break;
  }

  Rng rng(s.seed);
  std::vector<PoseFrame> frames;
  frames.reserve(s.frames);
  // Floor-level poses sit above a 0.5 bed line in image coordinates: the bed filter
  // suppresses frames whose upper body lies past the line.
  const Geometry floor = horizontal(0.36, false);
  for (std::uint32_t i = 0; i < s.frames; ++i) {
    switch (s.kind) {
      case ScenarioKind::Standing:
        frames.push_back(emit(i, kUpright, rng, a, a));
        break;
      case ScenarioKind::Walking: {
        // Keyframes: enter at the left, leave at the right; ankles alternate stride.
        const double t = s.frames > 1 ? static_cast<double>(i) / (s.frames - 1) : 0.5;
        const double offset = -0.25 + 0.5 * t;
        const double stride = i % 2 == 0 ? 0.03 : -0.03;
        Geometry g = kUpright;
        for (auto& p : g) p[1] += offset;
        g[to_index(KeypointId::LeftAnkle)][1] += stride;
        g[to_index(KeypointId::RightAnkle)][1] -= stride;
        frames.push_back(emit(i, g, rng, a, a));
        break;
      }
      case ScenarioKind::LyingFloor:
        frames.push_back(emit(i, floor, rng, std::min(a, kHorizontalJitterY), a));
        break;
      case ScenarioKind::NoisyGlitch:
        if (i % 2 == 0) {
          frames.push_back(emit(i, horizontal(0.80, true), rng, std::min(a, kHorizontalJitterY), a));
        } else {
          frames.push_back(emit(i, kUpright, rng, a, a));
        }
        break;
      default:
        break;
    }
  }
  return frames;
}

std::vector<PoseFrame> random_stream(std::uint64_t seed, std::size_t count) {
  Rng rng(seed);
  std::vector<PoseFrame> out;
  out.reserve(count);
  std::uint64_t next_index = rng.between(0, 5);

  auto append = [&](PoseFrame f) {
    f.frame_index = next_index;
    f.timestamp_ms = next_index * 1000 / kFramesPerSecond;
    next_index += rng.between(1, 3);
    out.push_back(f);
  };

  auto random_confidence = [&]() {
    switch (rng.between(0, 5)) {
      case 0:
        return 0.5;
      case 1:
        return 0.0;
      case 2:
        return 1.0;
      case 3:
        return 0.45 + 0.1 * rng.unit();
      default:
        return rng.unit();
    }
  };

  while (out.size() < count) {
    const auto mode = rng.between(0, 9);
    if (mode < 6) {
      Scenario s;
      s.kind = kAllKinds[rng.between(0, std::size(kAllKinds) - 1)];
      s.frames = static_cast<std::uint32_t>(rng.between(1, 12));
      s.seed = rng.between(0, UINT32_MAX);
      s.noise_amplitude = 0.05 * rng.unit();
      const bool drop_keypoints = rng.between(0, 3) == 0;
      for (PoseFrame f : generate(s)) {
        if (out.size() >= count) break;
        if (drop_keypoints) {
          for (Keypoint& k : f.keypoints) {
            if (rng.between(0, 4) == 0) k.confidence = random_confidence();
          }
        }
        append(f);
      }
    } else {
      const auto len = rng.between(1, 6);
      for (std::uint64_t j = 0; j < len && out.size() < count; ++j) {
        PoseFrame f;
        // Two loose clusters so both the y test and the x test are sometimes met.
        const double upper_y = rng.unit();
        const double upper_x = rng.unit();
        const double lower_y = rng.between(0, 1) == 0 ? upper_y : rng.unit();
        const double lower_x = rng.unit();
        for (std::size_t i = 0; i < kNumKeypoints; ++i) {
          const auto id = static_cast<KeypointId>(i);
          const double cy = is_upper_body(id) ? upper_y : lower_y;
          const double cx = is_upper_body(id) ? upper_x : lower_x;
          const double spread = 0.08 * rng.unit();
          f.keypoints[i] = Keypoint{id, std::clamp(cy + spread * rng.symmetric(), 0.0, 1.0),
                                    std::clamp(cx + spread * rng.symmetric(), 0.0, 1.0),
                                    random_confidence()};
        }
        append(f);
      }
    }
  }
  return out;
}

std::vector<FrameVerdict> oracle_verdicts(std::span<const PoseFrame> frames, const DetectorConfig& config) {
  std::vector<FrameVerdict> verdicts;
  std::uint32_t run = 0;
  std::optional<std::uint64_t> previous;

  for (std::size_t pos = 0; pos < frames.size(); ++pos) {
    const PoseFrame& f = frames[pos];
    if (previous && f.frame_index <= *previous) {
      throw OutOfOrderFrame(pos, f.frame_index, *previous);
    }
    previous = f.frame_index;

    std::array<bool, kNumKeypoints> usable{};
    for (std::size_t i = 0; i < kNumKeypoints; ++i) {
      usable[i] = f.keypoints[i].confidence > config.confidence_threshold;
    }

    std::size_t upper_usable = 0;
    std::size_t upper_below_bed = 0;
    double upper_sum_y = 0.0, upper_sum_x = 0.0, lower_sum_y = 0.0, lower_sum_x = 0.0;
    std::size_t lower_usable = 0;
    for (std::size_t i = 0; i <= 10; ++i) {
      if (!usable[i]) continue;
      ++upper_usable;
      upper_sum_y += f.keypoints[i].y;
      upper_sum_x += f.keypoints[i].x;
      if (config.bed_top_y && f.keypoints[i].y > *config.bed_top_y) ++upper_below_bed;
    }
    for (std::size_t i = 11; i <= 16; ++i) {
      if (!usable[i]) continue;
      ++lower_usable;
      lower_sum_y += f.keypoints[i].y;
      lower_sum_x += f.keypoints[i].x;
    }
    const bool suppressed = config.bed_top_y.has_value() && upper_usable > 0 &&
                            upper_below_bed == upper_usable;

    std::size_t pairs = 0;
    std::size_t passing = 0;
    for (std::size_t u = 0; u <= 10; ++u) {
      for (std::size_t l = 11; l <= 16; ++l) {
        if (!usable[u] || !usable[l]) continue;
        ++pairs;
        const double dy = std::fabs(f.keypoints[u].y - f.keypoints[l].y);
        const double dx = std::fabs(f.keypoints[u].x - f.keypoints[l].x);
        if (dy <= config.threshold_y + kDifferenceTolerance && dx > config.threshold_x + kDifferenceTolerance) {
          ++passing;
        }
      }
    }

    bool geometric = false;
    switch (config.pair_policy) {
      case PairPolicy::AnyPair:
        geometric = passing > 0;
        break;
      case PairPolicy::AllPairs:
        geometric = pairs > 0 && passing == pairs;
        break;
      case PairPolicy::Centroid:
        if (upper_usable > 0 && lower_usable > 0) {
          const double uy = upper_sum_y / static_cast<double>(upper_usable);
          const double ux = upper_sum_x / static_cast<double>(upper_usable);
          const double ly = lower_sum_y / static_cast<double>(lower_usable);
          const double lx = lower_sum_x / static_cast<double>(lower_usable);
          geometric = std::fabs(uy - ly) <= config.threshold_y + kDifferenceTolerance &&
                      std::fabs(ux - lx) > config.threshold_x + kDifferenceTolerance;
        }
        break;
    }

    const bool candidate = !suppressed && geometric;
    run = candidate ? run + 1 : 0;
    // A run passes through min_counter exactly once, so this fires once per run.
    verdicts.push_back(FrameVerdict{f.frame_index, suppressed, candidate, run, run == config.min_counter});
  }
  return verdicts;
}

}  // namespace falldet::synth
