#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "falldet/pose.hpp"

namespace falldet::testing {

/// Upright 17-keypoint reference frame.
inline PoseFrame reference_frame(std::uint64_t index = 0) {
  return make_frame(index, std::nullopt,
                    {{
                        {0.22416662, 0.579579, 0.7201656},
                        {0.20926172, 0.5974146, 0.8043867},
                        {0.20485064, 0.5642889, 0.5905826},
                        {0.22323, 0.6126661, 0.7964257},
                        {0.21771489, 0.5370738, 0.7529471},
                        {0.3235461, 0.6375601, 0.8950565},
                        {0.2964768, 0.48282918, 0.65825576},
                        {0.43468294, 0.63684213, 0.7667525},
                        {0.42770475, 0.4406372, 0.8829603},
                        {0.54110587, 0.6462866, 0.6282949},
                        {0.5392799, 0.42464092, 0.8215329},
                        {0.54277164, 0.57565194, 0.85804665},
                        {0.53679305, 0.48321638, 0.88962007},
                        {0.69595444, 0.609515, 0.8796475},
                        {0.7019378, 0.46842176, 0.6786141},
                        {0.85588527, 0.56420994, 0.7951814},
                        {0.8588409, 0.47616798, 0.82729894},
                    }});
}

inline const char* kReferenceLine =
    R"({"frame_index":0,"timestamp_ms":null,"keypoints":[)"
    R"([0.22416662,0.579579,0.7201656],[0.20926172,0.5974146,0.8043867],)"
    R"([0.20485064,0.5642889,0.5905826],[0.22323,0.6126661,0.7964257],)"
    R"([0.21771489,0.5370738,0.7529471],[0.3235461,0.6375601,0.8950565],)"
    R"([0.2964768,0.48282918,0.65825576],[0.43468294,0.63684213,0.7667525],)"
    R"([0.42770475,0.4406372,0.8829603],[0.54110587,0.6462866,0.6282949],)"
    R"([0.5392799,0.42464092,0.8215329],[0.54277164,0.57565194,0.85804665],)"
    R"([0.53679305,0.48321638,0.88962007],[0.69595444,0.609515,0.8796475],)"
    R"([0.7019378,0.46842176,0.6786141],[0.85588527,0.56420994,0.7951814],)"
    R"([0.8588409,0.47616798,0.82729894]]})";

/// Every keypoint at the same (y, x, confidence).
inline PoseFrame uniform_frame(std::uint64_t index, double y, double x, double confidence) {
  PoseFrame f;
  f.frame_index = index;
  for (std::size_t i = 0; i < kNumKeypoints; ++i) {
    f.keypoints[i] = Keypoint{static_cast<KeypointId>(i), y, x, confidence};
  }
  return f;
}

/// Upper body at (upper_y, upper_x), lower body at (lower_y, lower_x).
inline PoseFrame split_frame(std::uint64_t index, double upper_y, double upper_x, double lower_y,
                             double lower_x, double confidence) {
  PoseFrame f;
  f.frame_index = index;
  for (std::size_t i = 0; i < kNumKeypoints; ++i) {
    const auto id = static_cast<KeypointId>(i);
    const bool upper = is_upper_body(id);
    f.keypoints[i] = Keypoint{id, upper ? upper_y : lower_y, upper ? upper_x : lower_x, confidence};
  }
  return f;
}

/// Lying on the floor: upper body at (0.80, 0.10), lower body at (0.80, 0.70).
inline PoseFrame lying_frame(std::uint64_t index) { return split_frame(index, 0.80, 0.10, 0.80, 0.70, 0.9); }

inline PoseFrame standing_frame(std::uint64_t index) { return reference_frame(index); }

/// Unit-range keypoints drawn from `rng`; confidences include exact 0, 0.5 and 1.
inline PoseFrame random_frame(std::mt19937_64& rng, std::uint64_t index) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, 9);
  PoseFrame f;
  f.frame_index = index;
  if (pick(rng) < 5) f.timestamp_ms = rng() % 10'000'000;
  for (std::size_t i = 0; i < kNumKeypoints; ++i) {
    double c = unit(rng);
    switch (pick(rng)) {
      case 0: c = 0.0; break;
      case 1: c = 0.5; break;
      case 2: c = 1.0; break;
      default: break;
    }
    f.keypoints[i] = Keypoint{static_cast<KeypointId>(i), unit(rng), unit(rng), c};
  }
  return f;
}

/// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("falldet_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_stream(const std::filesystem::path& p, const std::vector<PoseFrame>& frames) {
  std::ofstream out(p);
  for (const auto& f : frames) out << serialize_frame(f) << '\n';
}

}  // namespace falldet::testing
