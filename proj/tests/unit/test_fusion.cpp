#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "retarget/fusion.hpp"

using namespace retarget;

namespace {

Vec3 random_point(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(rng), u(rng), u(rng)};
}

Quat random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return Quat(n(rng), n(rng), n(rng), n(rng)).normalized();
}

KeypointCandidate candidate(const Vec3& p, double conf = 0.001) {
  KeypointCandidate c;
  c.position = p;
  c.confidence = conf;
  return c;
}

}  // namespace

TEST_CASE("softmax probabilities") {
  CHECK(softmax_probabilities({0.3}, 500.0) == std::vector<double>{1.0});

  const auto p = softmax_probabilities({0.001, 0.002}, 500.0);
  const double expected0 = 1.0 / (1.0 + std::exp(-0.5));
  CHECK(p[0] == doctest::Approx(expected0).epsilon(1e-14));
  CHECK(p[0] == doctest::Approx(0.622).epsilon(1e-3));
  CHECK(p[1] == doctest::Approx(0.378).epsilon(1e-3));

  const auto equal = softmax_probabilities({0.01, 0.01, 0.01, 0.01}, 500.0);
  for (double v : equal) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 0.05);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> d(5);
    for (double& v : d) v = u(rng);
    const double shift = u(rng);
    std::vector<double> shifted = d;
    for (double& v : shifted) v += shift;
    const auto a = softmax_probabilities(d, 500.0);
    const auto b = softmax_probabilities(shifted, 500.0);
    double total = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(std::abs(a[i] - b[i]) <= 1e-12);
      total += a[i];
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
    const auto min_it = std::min_element(d.begin(), d.end());
    CHECK(a[static_cast<std::size_t>(min_it - d.begin())] == *std::max_element(a.begin(), a.end()));
  }

  CHECK_THROWS_AS(softmax_probabilities({}, 500.0), std::invalid_argument);
  CHECK_THROWS_AS(softmax_probabilities({std::nan("")}, 500.0), std::invalid_argument);
  CHECK_THROWS_AS(softmax_probabilities({0.1}, 0.0), std::invalid_argument);
}

TEST_CASE("candidate selection") {
  const SelectionConfig cfg;
  const Vec3 prev(0.1, 0.2, 0.3);

  SUBCASE("a 10 cm outlier is rejected") {
    const std::vector<KeypointCandidate> c{candidate(prev + Vec3(0.001, 0, 0)), candidate(prev + Vec3(0, 0.0015, 0)),
                                           candidate(prev + Vec3(0.1, 0, 0))};
    const Selection s = select_candidates(c, prev, cfg);
    CHECK(s.accepted == std::vector<std::size_t>{0, 1});
    CHECK(s.probabilities[2] < 1e-20);
  }
  SUBCASE("a single passing candidate is accepted") {
    const Selection s = select_candidates({candidate(prev + Vec3(0.05, 0, 0))}, prev, cfg);
    CHECK(s.accepted == std::vector<std::size_t>{0});
    CHECK(s.probabilities[0] == 1.0);
  }
  SUBCASE("the confidence gate can empty the set") {
    const Selection s = select_candidates({candidate(prev, 0.02), candidate(prev, 0.5)}, prev, cfg);
    CHECK(s.accepted.empty());
  }
  SUBCASE("bootstrap accepts every confident candidate") {
    const Selection s = select_candidates({candidate(prev), candidate(prev + Vec3(0.2, 0, 0)), candidate(prev, 0.05)},
                                          std::nullopt, cfg);
    CHECK(s.accepted == std::vector<std::size_t>{0, 1});
  }
  SUBCASE("accepted candidates always exceed p_min") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 500; ++trial) {
      std::vector<KeypointCandidate> c;
      for (int i = 0; i < 6; ++i) c.push_back(candidate(prev + random_point(rng, 0.01)));
      const Selection s = select_candidates(c, prev, cfg);
      for (std::size_t i = 0; i < c.size(); ++i) {
        const bool accepted = std::find(s.accepted.begin(), s.accepted.end(), i) != s.accepted.end();
        CHECK(accepted == (s.probabilities[i] > cfg.p_min));
      }
    }
  }
}

TEST_CASE("rolling buffer keeps the most recent entries") {
  RollingBuffer b(3);
  for (int i = 0; i < 5; ++i) b.push(Vec3::Constant(i));
  CHECK(b.size() == 3);
  const auto pts = b.points();
  CHECK(pts[0] == Vec3::Constant(2));
  CHECK(pts[2] == Vec3::Constant(4));
  CHECK_THROWS_AS(RollingBuffer(0), std::invalid_argument);
}

TEST_CASE("geometric median") {
  SUBCASE("identical points") {
    const std::vector<Vec3> pts(4, Vec3(0.1, -0.2, 0.3));
    CHECK(geometric_median(pts).point == pts[0]);
  }
  SUBCASE("collinear points give the one-dimensional median") {
    const std::vector<Vec3> pts{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(10, 0, 0)};
    CHECK(geometric_median(pts).point == Vec3(1, 0, 0));
  }
  SUBCASE("even collinear sets land within the median interval") {
    const std::vector<Vec3> pts{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0), Vec3(10, 0, 0)};
    const Vec3 m = geometric_median(pts).point;
    CHECK(m.x() >= 1.0 - 1e-9);
    CHECK(m.x() <= 2.0 + 1e-9);
    CHECK(m.tail<2>().norm() <= 1e-9);
  }
  SUBCASE("twenty random points agree with the subgradient oracle") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 3; ++trial) {
      std::vector<Vec3> pts;
      for (int i = 0; i < 20; ++i) pts.push_back(random_point(rng, 0.1));
      const MedianResult r = geometric_median(pts);
      CHECK(r.converged);
      CHECK((r.point - oracle::subgradient_median(pts)).norm() <= 1e-6);
    }
  }
  SUBCASE("never worse than the centroid or any input point; monotone objective") {
    std::mt19937_64 rng(4);
    MedianOptions opts;
    opts.record_objective = true;
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<Vec3> pts;
      const int n = 3 + trial % 30;
      for (int i = 0; i < n; ++i) pts.push_back(random_point(rng, 0.05));
      if (trial % 4 == 0) pts.push_back(pts[0]);  // duplicates
      const MedianResult r = geometric_median(pts, opts);
      Vec3 centroid = Vec3::Zero();
      for (const Vec3& p : pts) centroid += p;
      centroid /= static_cast<double>(pts.size());
      CHECK(r.objective <= sum_of_distances(pts, centroid) + 1e-15);
      for (const Vec3& p : pts) CHECK(r.objective <= sum_of_distances(pts, p) + 1e-15);
      for (std::size_t k = 1; k < r.objective_history.size(); ++k) {
        CHECK(r.objective_history[k] <= r.objective_history[k - 1] * (1.0 + 1e-14));
      }
    }
  }
  SUBCASE("a dominant input point is returned exactly") {
    std::vector<Vec3> pts(5, Vec3(0.01, 0.02, 0.03));
    pts.push_back(Vec3(1, 0, 0));
    pts.push_back(Vec3(0, 1, 0));
    CHECK(geometric_median(pts).point == pts[0]);
  }
  SUBCASE("iteration cap is reported") {
    std::mt19937_64 rng(5);
    std::vector<Vec3> pts;
    for (int i = 0; i < 10; ++i) pts.push_back(random_point(rng, 1.0));
    MedianOptions opts;
    opts.max_iters = 1;
    opts.tol = 1e-15;
    const MedianResult r = geometric_median(pts, opts);
    CHECK_FALSE(r.converged);
    CHECK(r.iterations == 1);
  }
  CHECK_THROWS_AS(geometric_median({}), std::invalid_argument);
}

TEST_CASE("palm frame from three keypoints") {
  const Pose id = frame_from_palm_keypoints(Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0));
  CHECK(id.rotation_matrix().isApprox(Mat3::Identity(), 1e-15));
  CHECK(id.translation == Vec3::Zero());

  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 500; ++trial) {
    const Vec3 a = random_point(rng, 0.3), b = random_point(rng, 0.3), c = random_point(rng, 0.3);
    if (0.5 * (b - a).cross(c - a).norm() < 1e-4) continue;
    const Pose base = frame_from_palm_keypoints(a, b, c);
    CHECK(orthonormality_residual(base.rotation_matrix()) <= 1e-9);
    Pose t;
    t.rotation = random_rotation(rng);
    t.translation = random_point(rng, 1.0);
    const Pose moved = frame_from_palm_keypoints(t * a, t * b, t * c);
    const Pose expected = t * base;
    CHECK((moved.rotation_matrix() - expected.rotation_matrix()).norm() <= 1e-9);
    CHECK((moved.translation - expected.translation).norm() <= 1e-12);
  }
  // rotating the canonical triangle yields exactly that rotation
  const Quat r = random_rotation(rng);
  const Pose rotated = frame_from_palm_keypoints(Vec3::Zero(), r * Vec3(1, 0, 0), r * Vec3(0, 1, 0));
  CHECK((rotated.rotation_matrix() - r.toRotationMatrix()).norm() <= 1e-9);

  CHECK_THROWS_AS(frame_from_palm_keypoints(Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0)), DegenerateGeometryError);
  CHECK_THROWS_AS(frame_from_palm_keypoints(Vec3(0, 0, 0), Vec3(0, 0, 0), Vec3(0, 1, 0)), DegenerateGeometryError);
}

TEST_CASE("bounding-box segmentation") {
  std::mt19937_64 rng(7);
  Pose hand;
  hand.rotation = random_rotation(rng);
  hand.translation = Vec3(0.1, 0.2, 0.5);
  const Vec3 dims(0.2, 0.12, 0.05);
  CHECK(segment_hand_points({hand.translation}, hand, dims).size() == 1);
  CHECK(segment_hand_points({hand.translation + 10.0 * Vec3(0.2, 0.12, 0.05)}, hand, dims).empty());

  std::vector<Vec3> cloud;
  for (int i = 0; i < 5000; ++i) cloud.push_back(hand.translation + random_point(rng, 0.15));
  const auto kept = segment_hand_points(cloud, hand, dims);
  std::vector<Vec3> expected;
  const Mat3 rt = hand.rotation_matrix().transpose();
  for (const Vec3& p : cloud) {
    const Vec3 local = rt * (p - hand.translation);
    if (std::abs(local.x()) <= 0.1 && std::abs(local.y()) <= 0.06 && std::abs(local.z()) <= 0.025) expected.push_back(p);
  }
  CHECK(kept == expected);
  CHECK(segment_hand_points(kept, hand, dims) == kept);
  CHECK_THROWS_AS(segment_hand_points(cloud, hand, Vec3(0.1, 0.0, 0.1)), std::invalid_argument);
}

TEST_CASE("TTA mean and spread") {
  const TtaStatistics single = tta_confidence({Vec3(1, 2, 3)});
  CHECK(single.mean == Vec3(1, 2, 3));
  CHECK(single.std == 0.0);
  const TtaStatistics sym = tta_confidence({Vec3(0.1, -0.2, 0.3), Vec3(-0.1, 0.2, -0.3)});
  CHECK(sym.mean.norm() == 0.0);

  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Vec3> preds;
    for (int i = 0; i < 1 + trial % 12; ++i) preds.push_back(random_point(rng, 0.02));
    double mean[3] = {0, 0, 0};
    for (const Vec3& p : preds) {
      for (int a = 0; a < 3; ++a) mean[a] += p[a];
    }
    for (double& m : mean) m /= static_cast<double>(preds.size());
    double var_sum = 0.0;
    for (int a = 0; a < 3; ++a) {
      double v = 0.0;
      for (const Vec3& p : preds) v += (p[a] - mean[a]) * (p[a] - mean[a]);
      var_sum += v / static_cast<double>(preds.size());
    }
    const TtaStatistics s = tta_confidence(preds);
    CHECK(std::abs(s.std - std::sqrt(var_sum / 3.0)) <= 1e-12);
    CHECK(std::abs(s.mean.x() - mean[0]) <= 1e-12);
  }
  CHECK_THROWS_AS(tta_confidence({}), std::invalid_argument);
}

TEST_CASE("keypoint fuser") {
  std::mt19937_64 rng(9);
  KeypointPayload frame;
  for (std::size_t k = 0; k < kKeypointCount; ++k) frame.keypoints.push_back(random_point(rng, 0.2));

  SUBCASE("without candidates the direct observation passes through") {
    KeypointFuser fuser;
    CHECK(fuser.update(frame) == frame.keypoints);
  }
  SUBCASE("outlier candidates never move the estimate") {
    KeypointFuser fuser;
    for (int step = 0; step < 20; ++step) {
      KeypointPayload f = frame;
      for (std::size_t k = 0; k < kKeypointCount; ++k) {
        for (int cam = 0; cam < 3; ++cam) {
          KeypointCandidate c = candidate(frame.keypoints[k] + random_point(rng, 0.0005));
          c.keypoint = static_cast<int>(k);
          c.camera = cam;
          if (step > 0 && cam == 2) c.position = frame.keypoints[k] + Vec3(0.1, 0, 0);
          f.candidates.push_back(c);
        }
      }
      const auto fused = fuser.update(f);
      for (std::size_t k = 0; k < kKeypointCount; ++k) CHECK((fused[k] - frame.keypoints[k]).norm() <= 0.002);
    }
    CHECK(fuser.rejected() >= 19 * kKeypointCount);
  }
  SUBCASE("wrong keypoint count") {
    KeypointFuser fuser;
    KeypointPayload bad = frame;
    bad.keypoints.pop_back();
    CHECK_THROWS_AS(fuser.update(bad), DimensionError);
  }
}

TEST_CASE("fusion config JSON") {
  FusionConfig c;
  c.selection.p_min = 0.3;
  c.buffer_capacity = 7;
  const FusionConfig back = fusion_config_from_json(nlohmann::json::parse(to_json(c).dump()));
  CHECK(back.selection.p_min == 0.3);
  CHECK(back.buffer_capacity == 7);
  CHECK_THROWS_AS(fusion_config_from_json(nlohmann::json{{"buffer_capacity", 0}}), std::invalid_argument);
}
