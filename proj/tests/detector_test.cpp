#include <gtest/gtest.h>

#include <random>

#include "falldet/detector.hpp"
#include "falldet/synth.hpp"
#include "fixtures.hpp"

using namespace falldet;
using falldet::testing::lying_frame;
using falldet::testing::split_frame;
using falldet::testing::standing_frame;
using falldet::testing::reference_frame;
using falldet::testing::uniform_frame;

namespace {

DetectorConfig with_bed(double bed) {
  DetectorConfig c;
  c.bed_top_y = bed;
  return c;
}

DetectorConfig with_policy(PairPolicy p) {
  DetectorConfig c;
  c.pair_policy = p;
  return c;
}

std::vector<FrameVerdict> stepwise(std::span<const PoseFrame> frames, const DetectorConfig& config) {
  Detector d(config);
  std::vector<FrameVerdict> out;
  for (const auto& f : frames) out.push_back(d.push(f));
  return out;
}

}  // namespace

TEST(DetectorConfig, DefaultThresholds) {
  const DetectorConfig c;
  EXPECT_EQ(c.confidence_threshold, 0.5);
  EXPECT_EQ(c.threshold_y, 0.05);
  EXPECT_EQ(c.threshold_x, 0.5);
  EXPECT_EQ(c.min_counter, 2u);
  EXPECT_FALSE(c.bed_top_y.has_value());
  EXPECT_EQ(c.pair_policy, PairPolicy::AnyPair);
}

TEST(DetectorConfig, ValidationAndJson) {
  DetectorConfig c;
  c.threshold_x = 1.2;
  EXPECT_THROW(validate(c), ConfigError);
  c = {};
  c.min_counter = 0;
  EXPECT_THROW(validate(c), ConfigError);
  c = {};
  c.bed_top_y = -0.1;
  EXPECT_THROW(validate(c), ConfigError);

  const auto parsed = config_from_json(nlohmann::json::parse(
      R"({"threshold_y":0.07,"bed_top_y":0.5,"pair_policy":"Centroid","min_counter":3})"));
  EXPECT_EQ(parsed.threshold_y, 0.07);
  EXPECT_EQ(parsed.bed_top_y, 0.5);
  EXPECT_EQ(parsed.pair_policy, PairPolicy::Centroid);
  EXPECT_EQ(parsed.min_counter, 3u);
  EXPECT_EQ(parsed.threshold_x, 0.5);

  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"thresholdy":0.1})")), ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"min_counter":0})")), ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"min_counter":1.5})")), ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"pair_policy":"Some"})")), ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"confidence_threshold":2})")), ConfigError);

  EXPECT_EQ(config_from_json(config_to_json(parsed)), parsed);
}

TEST(DetectorConfig, DigestIsStableAndSensitive) {
  const DetectorConfig a;
  DetectorConfig b;
  b.bed_top_y = 0.5;
  EXPECT_EQ(config_digest(a), config_digest(DetectorConfig{}));
  EXPECT_NE(config_digest(a), config_digest(b));
  EXPECT_EQ(config_digest(a).size(), 16u);
}

TEST(BedFilter, SuppressesWhenAllUpperBodyBelowBedLine) {
  const PoseFrame f = split_frame(0, 0.6, 0.2, 0.6, 0.8, 0.9);
  EXPECT_TRUE(bed_filter(f, with_bed(0.5)));
}

TEST(BedFilter, DisabledWithoutBedLine) {
  EXPECT_FALSE(bed_filter(split_frame(0, 0.6, 0.2, 0.6, 0.8, 0.9), DetectorConfig{}));
  EXPECT_FALSE(bed_filter(reference_frame(), DetectorConfig{}));
}

TEST(BedFilter, ReferenceNotSuppressed) { EXPECT_FALSE(bed_filter(reference_frame(), with_bed(0.5))); }

TEST(BedFilter, OneConfidentKeypointAboveLineBlocksSuppression) {
  PoseFrame f = split_frame(0, 0.6, 0.2, 0.6, 0.8, 0.9);
  f.keypoints[to_index(KeypointId::LeftWrist)].y = 0.4;
  EXPECT_FALSE(bed_filter(f, with_bed(0.5)));
  // The same keypoint below the confidence gate is ignored.
  f.keypoints[to_index(KeypointId::LeftWrist)].confidence = 0.5;
  EXPECT_TRUE(bed_filter(f, with_bed(0.5)));
}

TEST(BedFilter, BoundaryAndEmptyCases) {
  // y equal to the bed line is not "greater than".
  EXPECT_FALSE(bed_filter(split_frame(0, 0.5, 0.2, 0.6, 0.8, 0.9), with_bed(0.5)));
  // No confident upper-body keypoint: nothing to suppress on.
  EXPECT_FALSE(bed_filter(uniform_frame(0, 0.9, 0.5, 0.1), with_bed(0.5)));
  // Lower body is irrelevant.
  EXPECT_TRUE(bed_filter(split_frame(0, 0.7, 0.2, 0.1, 0.8, 0.9), with_bed(0.5)));
}

TEST(FallCandidate, ReferenceStandingIsNotCandidate) {
  for (PairPolicy p : {PairPolicy::AnyPair, PairPolicy::AllPairs, PairPolicy::Centroid}) {
    EXPECT_FALSE(fall_candidate(reference_frame(), with_policy(p)));
  }
}

TEST(FallCandidate, ReferenceMaxHorizontalGap) {
  // Largest |dx| over all 11 x 6 upper/lower pairs.
  const PoseFrame f = reference_frame();
  double max_dx = 0.0;
  for (std::size_t u = 0; u <= 10; ++u) {
    for (std::size_t l = 11; l <= 16; ++l) {
      max_dx = std::max(max_dx, std::abs(f.keypoints[u].x - f.keypoints[l].x));
    }
  }
  EXPECT_NEAR(max_dx, 0.18487408, 1e-8);
  EXPECT_LT(max_dx, 0.5);
}

TEST(FallCandidate, SyntheticLyingPose) {
  for (PairPolicy p : {PairPolicy::AnyPair, PairPolicy::AllPairs, PairPolicy::Centroid}) {
    EXPECT_TRUE(fall_candidate(lying_frame(0), with_policy(p)));
  }
}

TEST(FallCandidate, NoConfidentKeypoints) {
  PoseFrame f = lying_frame(0);
  for (auto& k : f.keypoints) k.confidence = 0.0;
  EXPECT_FALSE(fall_candidate(f, DetectorConfig{}));
}

TEST(FallCandidate, OneSideMissing) {
  PoseFrame f = lying_frame(0);
  for (auto& k : f.keypoints) {
    if (is_lower_body(k.id)) k.confidence = 0.2;
  }
  for (PairPolicy p : {PairPolicy::AnyPair, PairPolicy::AllPairs, PairPolicy::Centroid}) {
    EXPECT_FALSE(fall_candidate(f, with_policy(p)));
  }
}

TEST(FallCandidate, BoundarySemantics) {
  // |dy| = 0.05 is inclusive, |dx| = 0.51 is past the strict bound.
  const PoseFrame f = split_frame(0, 0.5, 0.0, 0.55, 0.51, 1.0);
  EXPECT_TRUE(fall_candidate(f, DetectorConfig{}));
  // |dx| exactly 0.5 fails the strict test.
  EXPECT_FALSE(fall_candidate(split_frame(0, 0.5, 0.25, 0.5, 0.75, 1.0), DetectorConfig{}));
  // 0.8 - 0.3 rounds to 0.5000000000000001 in binary but is exactly 0.5 as written.
  EXPECT_FALSE(fall_candidate(split_frame(0, 0.5, 0.3, 0.5, 0.8, 1.0), DetectorConfig{}));
  // |dy| = 0.06 fails.
  EXPECT_FALSE(fall_candidate(split_frame(0, 0.5, 0.0, 0.56, 0.9, 1.0), DetectorConfig{}));
}

TEST(FallCandidate, AbsoluteVerticalDifference) {
  // Upper body below lower body by 0.04 still counts as level.
  EXPECT_TRUE(fall_candidate(split_frame(0, 0.84, 0.1, 0.80, 0.8, 0.9), DetectorConfig{}));
  EXPECT_TRUE(fall_candidate(split_frame(0, 0.80, 0.1, 0.84, 0.8, 0.9), DetectorConfig{}));
}

TEST(FallCandidate, PolicyDifferences) {
  // One wrist reaches past the hips; everything else is upright.
  PoseFrame f = reference_frame();
  auto& wrist = f.keypoints[to_index(KeypointId::LeftWrist)];
  wrist.y = 0.54;
  wrist.x = 0.99;
  auto& hip = f.keypoints[to_index(KeypointId::RightHip)];
  hip.y = 0.54;
  hip.x = 0.45;
  EXPECT_TRUE(fall_candidate(f, with_policy(PairPolicy::AnyPair)));
  EXPECT_FALSE(fall_candidate(f, with_policy(PairPolicy::AllPairs)));
  EXPECT_FALSE(fall_candidate(f, with_policy(PairPolicy::Centroid)));
}

TEST(Step, TwoLyingFramesRaiseOneAlert) {
  const DetectorConfig c;
  auto r1 = step({}, lying_frame(0), c);
  EXPECT_TRUE(r1.verdict.candidate);
  EXPECT_EQ(r1.verdict.counter_after, 1u);
  EXPECT_FALSE(r1.verdict.alert_fired);
  auto r2 = step(r1.state, lying_frame(1), c);
  EXPECT_TRUE(r2.verdict.candidate);
  EXPECT_EQ(r2.verdict.counter_after, 2u);
  EXPECT_TRUE(r2.verdict.alert_fired);
  EXPECT_TRUE(r2.state.alert_latched);
}

TEST(Step, InterruptionResetsCounter) {
  const std::vector<PoseFrame> frames = {lying_frame(0), standing_frame(1), lying_frame(2)};
  const auto v = run_stream(frames, DetectorConfig{});
  ASSERT_EQ(v.size(), 3u);
  EXPECT_EQ(v[0].counter_after, 1u);
  EXPECT_EQ(v[1].counter_after, 0u);
  EXPECT_EQ(v[2].counter_after, 1u);
  for (const auto& x : v) EXPECT_FALSE(x.alert_fired);
}

TEST(Step, AlertLatchesForTheRun) {
  const std::vector<PoseFrame> frames = {lying_frame(0), lying_frame(1), lying_frame(2), lying_frame(3)};
  const auto v = run_stream(frames, DetectorConfig{});
  std::vector<bool> alerts;
  for (const auto& x : v) alerts.push_back(x.alert_fired);
  EXPECT_EQ(alerts, (std::vector<bool>{false, true, false, false}));
  EXPECT_EQ(v[3].counter_after, 4u);
}

TEST(Step, NewRunAfterResetCanAlertAgain) {
  const std::vector<PoseFrame> frames = {lying_frame(0), lying_frame(1), standing_frame(2), lying_frame(3),
                                         lying_frame(4)};
  const auto v = run_stream(frames, DetectorConfig{});
  EXPECT_TRUE(v[1].alert_fired);
  EXPECT_TRUE(v[4].alert_fired);
}

TEST(Step, BedFilteredFrameResetsCounter) {
  // Lying at y = 0.8 with the bed line at 0.5: every upper-body keypoint is below it.
  const std::vector<PoseFrame> frames = {lying_frame(0), lying_frame(1)};
  const auto v = run_stream(frames, with_bed(0.5));
  for (const auto& x : v) {
    EXPECT_TRUE(x.bed_filtered);
    EXPECT_FALSE(x.candidate);
    EXPECT_EQ(x.counter_after, 0u);
  }
}

TEST(Step, MinCounterOneFiresOnFirstFrame) {
  DetectorConfig c;
  c.min_counter = 1;
  const std::vector<PoseFrame> frames = {lying_frame(0), lying_frame(1)};
  const auto v = run_stream(frames, c);
  EXPECT_TRUE(v[0].alert_fired);
  EXPECT_FALSE(v[1].alert_fired);
}

TEST(Step, OutOfOrderFrameRejected) {
  auto r = step({}, lying_frame(5), DetectorConfig{});
  EXPECT_THROW(step(r.state, lying_frame(5), DetectorConfig{}), OutOfOrderFrame);
  EXPECT_THROW(step(r.state, lying_frame(4), DetectorConfig{}), OutOfOrderFrame);
  const std::vector<PoseFrame> frames = {lying_frame(0), lying_frame(2), lying_frame(1)};
  try {
    run_stream(frames, DetectorConfig{});
    FAIL();
  } catch (const OutOfOrderFrame& e) {
    EXPECT_EQ(e.position(), 2u);
  }
}

TEST(RunStream, EmptyAndSingleton) {
  EXPECT_TRUE(run_stream({}, DetectorConfig{}).empty());
  const std::vector<PoseFrame> one = {lying_frame(9)};
  const auto v = run_stream(one, DetectorConfig{});
  ASSERT_EQ(v.size(), 1u);
  EXPECT_LE(v[0].counter_after, 1u);
  EXPECT_FALSE(v[0].alert_fired);
}

TEST(Verdict, JsonlShape) {
  const FrameVerdict v{7, false, true, 2, true};
  EXPECT_EQ(verdict_to_jsonl(v), R"({"frame_index":7,"bed_filtered":false,"candidate":true,"counter":2,"alert":true})");
}

// Properties over seeded random streams.

class DetectorProperties : public ::testing::TestWithParam<PairPolicy> {};

TEST_P(DetectorProperties, CounterDynamicsAndAlertRule) {
  std::mt19937_64 rng(99);
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    DetectorConfig c;
    c.pair_policy = GetParam();
    c.min_counter = 1 + static_cast<std::uint32_t>(rng() % 4);
    if (rng() % 2) c.bed_top_y = 0.3 + 0.4 * static_cast<double>(rng() % 1000) / 1000.0;
    const auto frames = synth::random_stream(seed, 60);
    const auto v = run_stream(frames, c);
    ASSERT_EQ(v, stepwise(frames, c));
    ASSERT_EQ(v, run_stream(frames, c));

    std::uint32_t before = 0;
    bool fired_in_run = false;
    for (const auto& x : v) {
      ASSERT_TRUE(x.counter_after == 0 || x.counter_after == before + 1);
      if (x.bed_filtered) {
        ASSERT_FALSE(x.candidate);
        ASSERT_EQ(x.counter_after, 0u);
      }
      if (x.counter_after == 0) fired_in_run = false;
      const bool expect_alert = x.counter_after == c.min_counter && !fired_in_run;
      ASSERT_EQ(x.alert_fired, expect_alert);
      if (x.alert_fired) {
        ASSERT_EQ(x.counter_after, c.min_counter);
        fired_in_run = true;
      }
      before = x.counter_after;
    }
  }
}

INSTANTIATE_TEST_SUITE_P(AllPolicies, DetectorProperties,
                         ::testing::Values(PairPolicy::AnyPair, PairPolicy::AllPairs, PairPolicy::Centroid));

TEST(DetectorInvariants, AnyPairAddingConfidentKeypointNeverRemovesCandidate) {
  std::mt19937_64 rng(3);
  const DetectorConfig c;
  for (int n = 0; n < 5000; ++n) {
    PoseFrame f = falldet::testing::random_frame(rng, 0);
    const std::size_t i = rng() % kNumKeypoints;
    f.keypoints[i].confidence = 0.2;
    const bool before = fall_candidate(f, c);
    f.keypoints[i].confidence = 0.9;
    const bool after = fall_candidate(f, c);
    ASSERT_TRUE(!before || after);
  }
}

TEST(DetectorInvariants, AnyPairThresholdMonotonicity) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int n = 0; n < 3000; ++n) {
    const auto frames = synth::random_stream(rng(), 1);
    DetectorConfig c;
    c.threshold_y = 0.1 * unit(rng);
    c.threshold_x = unit(rng);
    if (!fall_candidate(frames[0], c)) continue;
    DetectorConfig looser = c;
    looser.threshold_y = c.threshold_y + 0.1 * unit(rng);
    looser.threshold_x = c.threshold_x * unit(rng);
    ASSERT_TRUE(fall_candidate(frames[0], looser));
  }
}

TEST(DetectorInvariants, HorizontalMirrorInvariance) {
  std::mt19937_64 rng(8);
  for (PairPolicy p : {PairPolicy::AnyPair, PairPolicy::AllPairs, PairPolicy::Centroid}) {
    const auto frames = synth::random_stream(rng(), 2000);
    for (const auto& f : frames) {
      PoseFrame mirrored = f;
      for (auto& k : mirrored.keypoints) k.x = 1.0 - k.x;
      const auto cfg = with_policy(p);
      // 1 - x can round by an ulp, so frames with a gap within 1e-9 of threshold_x are skipped.
      bool near_boundary = false;
      double upper_x = 0.0, lower_x = 0.0;
      int nu = 0, nl = 0;
      for (std::size_t u = 0; u <= 10; ++u) {
        if (f.keypoints[u].confidence > cfg.confidence_threshold) upper_x += f.keypoints[u].x, ++nu;
        for (std::size_t l = 11; l <= 16; ++l) {
          near_boundary |= std::abs(std::abs(f.keypoints[u].x - f.keypoints[l].x) - cfg.threshold_x) < 1e-9;
        }
      }
      for (std::size_t l = 11; l <= 16; ++l) {
        if (f.keypoints[l].confidence > cfg.confidence_threshold) lower_x += f.keypoints[l].x, ++nl;
      }
      if (nu > 0 && nl > 0) {
        near_boundary |= std::abs(std::abs(upper_x / nu - lower_x / nl) - cfg.threshold_x) < 1e-9;
      }
      if (!near_boundary) ASSERT_EQ(fall_candidate(f, cfg), fall_candidate(mirrored, cfg));
    }
  }
}
