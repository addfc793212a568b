#include <doctest.h>

#include <cstdio>

#include "oracle.hpp"
#include "sdx/motionseg.hpp"

using namespace sdx;

namespace {

Vec identity_params() {
  Vec a(8);
  a << 0, 1, 0, 0, 0, 1, 0, 0;
  return a;
}

Vec gentle_homography(std::uint64_t seed) {
  Rng rng(seed);
  Vec a = identity_params();
  a[0] += rng.uniform(-2.0, 2.0);    // translation x
  a[3] += rng.uniform(-2.0, 2.0);    // translation y
  a[1] += rng.uniform(-0.02, 0.02);  // slight affine part
  a[2] += rng.uniform(-0.02, 0.02);
  a[4] += rng.uniform(-0.02, 0.02);
  a[5] += rng.uniform(-0.02, 0.02);
  a[6] = rng.uniform(-1e-4, 1e-4);   // perspective terms
  a[7] = rng.uniform(-1e-4, 1e-4);
  return a;
}

struct MotionScene {
  FlowField flow;
  std::vector<std::uint8_t> truth;  // column-major, like the solvers' masks
  Vec a;
  double outlier_area = 0.0;
};

MotionScene make_scene(int rows, int cols, double rect_fraction, std::uint64_t seed) {
  MotionScene scene;
  scene.a = gentle_homography(seed);
  scene.flow = homography_flow(scene.a, rows, cols);
  scene.truth.assign(rows * cols, 0);
  if (rect_fraction > 0.0) {
    Rng rng(seed + 1);
    const int h = std::max(2, static_cast<int>(rows * std::sqrt(rect_fraction)));
    const int w = std::max(2, static_cast<int>(cols * std::sqrt(rect_fraction)));
    const int r0 = rng.index(rows - h);
    const int c0 = rng.index(cols - w);
    const double du = rng.uniform(4.0, 8.0) * (rng.uniform() < 0.5 ? 1.0 : -1.0);
    const double dv = rng.uniform(4.0, 8.0) * (rng.uniform() < 0.5 ? 1.0 : -1.0);
    for (int c = c0; c < c0 + w; ++c)
      for (int r = r0; r < r0 + h; ++r) {
        scene.flow.u(r, c) = du;
        scene.flow.v(r, c) = dv;
        scene.truth[r + c * rows] = 1;
      }
    scene.outlier_area = static_cast<double>(h * w) / (rows * cols);
  }
  return scene;
}

double mask_iou(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
  int inter = 0, uni = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    inter += a[i] && b[i];
    uni += a[i] || b[i];
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / uni;
}

}  // namespace

TEST_CASE("system rows match the stacked perspective equations") {
  FlowField flow;
  flow.rows = 4;
  flow.cols = 4;
  flow.u = Mat::Zero(4, 4);
  flow.v = Mat::Zero(4, 4);
  flow.u(3, 2) = 1.0;  // pixel x=2, y=3
  const HomographySystem sys = build_system(flow);
  const int idx = 3 + 2 * 4;  // column-major
  Vec expected(8);
  expected << 1, 2, 3, 0, 0, 0, -2.0 * 3.0, -3.0 * 3.0;
  CHECK((sys.px.row(idx).transpose() - expected).cwiseAbs().maxCoeff() == 0.0);
  CHECK(sys.bx[idx] == doctest::Approx(3.0));
  CHECK(sys.by[idx] == doctest::Approx(3.0));
}

TEST_CASE("identity and translation flows satisfy their systems exactly") {
  FlowField zero;
  zero.rows = 6;
  zero.cols = 5;
  zero.u = Mat::Zero(6, 5);
  zero.v = Mat::Zero(6, 5);
  const HomographySystem sys = build_system(zero);
  const Vec id = identity_params();
  CHECK((sys.px * id - sys.bx).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((sys.py * id - sys.by).cwiseAbs().maxCoeff() < 1e-12);

  FlowField shift = zero;
  shift.u.setConstant(2.5);
  shift.v.setConstant(-1.0);
  const HomographySystem sys2 = build_system(shift);
  Vec translation(8);
  translation << 2.5, 1, 0, -1.0, 0, 1, 0, 0;
  CHECK((sys2.px * translation - sys2.bx).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((sys2.py * translation - sys2.by).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("global lsq recovers a synthetic homography to high accuracy") {
  for (std::uint64_t seed : {3u, 4u, 5u}) {
    const MotionScene scene = make_scene(24, 32, 0.0, seed);
    const Vec a = fit_global_lsq(build_system(scene.flow));
    CHECK((a - scene.a).cwiseAbs().maxCoeff() / scene.a.cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("normalized and raw solves agree on the predicted flow") {
  const MotionScene scene = make_scene(20, 26, 0.0, 6);
  const HomographySystem sys = build_system(scene.flow);
  const Vec a_norm = fit_global_lsq(sys, true);
  const Vec a_raw = fit_global_lsq(sys, false);
  const FlowField f1 = homography_flow(a_norm, 20, 26);
  const FlowField f2 = homography_flow(a_raw, 20, 26);
  CHECK((f1.u - f2.u).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((f1.v - f2.v).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("noisy flow residuals land near the noise level") {
  MotionScene scene = make_scene(24, 24, 0.0, 8);
  Rng rng(9);
  const double sigma = 0.1;
  for (int r = 0; r < 24; ++r)
    for (int c = 0; c < 24; ++c) {
      scene.flow.u(r, c) += rng.normal(0.0, sigma);
      scene.flow.v(r, c) += rng.normal(0.0, sigma);
    }
  const HomographySystem sys = build_system(scene.flow);
  const Vec a = fit_global_lsq(sys);
  const double rmse = std::sqrt(((sys.px * a - sys.bx).squaredNorm() +
                                 (sys.py * a - sys.by).squaredNorm()) /
                                (2.0 * 24 * 24));
  CHECK(rmse == doctest::Approx(sigma).epsilon(0.25));
}

TEST_CASE("degenerate flow raises a degeneracy error") {
  FlowField flow;
  flow.rows = 1;
  flow.cols = 3;  // three collinear pixels cannot pin down eight parameters
  flow.u = Mat::Zero(1, 3);
  flow.v = Mat::Zero(1, 3);
  CHECK_THROWS_AS(fit_global_lsq(build_system(flow)), DegeneracyError);
}

TEST_CASE("outlier-free flow keeps the mask empty and matches lsq") {
  const MotionScene scene = make_scene(24, 32, 0.0, 11);
  MotionSegConfig cfg;
  const MotionSegResult result = motion_masked_segment(scene.flow, cfg);
  for (auto w : result.w_binary) CHECK(w == 0);
  const Vec lsq = fit_global_lsq(build_system(scene.flow));
  CHECK((result.a - lsq).norm() / lsq.norm() < 1e-4);
}

TEST_CASE("an injected moving rectangle is segmented accurately") {
  const MotionScene scene = make_scene(32, 40, 0.12, 13);
  MotionSegConfig cfg;
  const MotionSegResult result = motion_masked_segment(scene.flow, cfg);
  CHECK(mask_iou(result.w_binary, scene.truth) >= 0.9);
  // The mask is shared: a single w vector drives both channels by contract.
  CHECK(result.w_continuous.size() == 32 * 40);
}

TEST_CASE("masked fit beats the thresholded lsq baseline on large outliers") {
  for (std::uint64_t seed : {17u, 18u, 19u}) {
    const MotionScene scene = make_scene(32, 40, 0.2, seed);
    REQUIRE(scene.outlier_area >= 0.15);
    MotionSegConfig cfg;
    const MotionSegResult masked = motion_masked_segment(scene.flow, cfg);
    double best_baseline = 0.0;
    for (double threshold : {0.5, 1.0, 2.0})
      best_baseline =
          std::max(best_baseline, mask_iou(lsq_threshold_baseline(scene.flow, threshold),
                                           scene.truth));
    CHECK(mask_iou(masked.w_binary, scene.truth) > best_baseline);
  }
}

TEST_CASE("affine switch fits six parameters and zeroes the rest") {
  FlowField flow;
  flow.rows = 16;
  flow.cols = 16;
  flow.u.setConstant(16, 16, 1.5);
  flow.v.setConstant(16, 16, -0.5);
  MotionSegConfig cfg;
  cfg.affine = true;
  const MotionSegResult result = motion_masked_segment(flow, cfg);
  CHECK(result.a[6] == 0.0);
  CHECK(result.a[7] == 0.0);
  CHECK(result.a[0] == doctest::Approx(1.5).epsilon(1e-6));
  CHECK(result.a[3] == doctest::Approx(-0.5).epsilon(1e-6));
}

TEST_CASE("flow files round trip in both formats") {
  const MotionScene scene = make_scene(7, 9, 0.1, 23);
  const std::string flo = "/tmp/sdx_flow_test.flo";
  save_flow_flo(scene.flow, flo);
  const FlowField from_flo = load_flow(flo);
  CHECK((from_flo.u - scene.flow.u).cwiseAbs().maxCoeff() < 1e-6);  // float storage
  CHECK((from_flo.v - scene.flow.v).cwiseAbs().maxCoeff() < 1e-6);
  std::remove(flo.c_str());

  const std::string csv = "/tmp/sdx_flow_test.csv";
  save_flow_csv(scene.flow, csv);
  const FlowField from_csv = load_flow(csv);
  CHECK((from_csv.u - scene.flow.u).cwiseAbs().maxCoeff() == 0.0);
  CHECK((from_csv.v - scene.flow.v).cwiseAbs().maxCoeff() == 0.0);
  std::remove(csv.c_str());
}
