#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "falldet/evaluation.hpp"
#include "falldet/pose.hpp"
#include "falldet/synth.hpp"

namespace falldet::testing {

/// 16 fall and 16 ADL synthetic videos: four of each scenario kind.
/// Writes one JSONL stream per video plus manifest.json into `dir`; returns the manifest path.
inline std::filesystem::path write_synthetic_dataset(const std::filesystem::path& dir, std::uint64_t seed = 2024) {
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json manifest;
  manifest["videos"] = nlohmann::ordered_json::array();
  int n = 0;
  for (synth::ScenarioKind kind : synth::kAllKinds) {
    for (int variant = 0; variant < 4; ++variant, ++n) {
      const synth::Scenario s{kind, static_cast<std::uint32_t>(20 + 10 * variant), seed + 97 * n,
                              0.0125 * variant};
      const std::string id = std::string(synth::to_string(kind)) + "_" + std::to_string(variant);
      std::ofstream out(dir / (id + ".jsonl"));
      for (const PoseFrame& f : synth::generate(s)) out << serialize_frame(f) << '\n';
      manifest["videos"].push_back(
          {{"id", id}, {"label", std::string(to_string(synth::intended_label(kind)))}, {"stream", id + ".jsonl"}});
    }
  }
  const auto path = dir / "manifest.json";
  std::ofstream(path) << manifest.dump(2) << '\n';
  return path;
}

}  // namespace falldet::testing
