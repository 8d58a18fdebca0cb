#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Geometry>

#include "oracles.hpp"
#include "teamnav/voxel_map.hpp"

using namespace teamnav;

namespace {
VoxelMap single_voxel(VoxelKey k = {0, 0, 0}) {
  VoxelMap m;
  m.insert(k);
  return m;
}
}  // namespace

TEST_CASE("voxel centers and keys") {
  VoxelMap m(0.2, Vec3(1.0, -1.0, 0.0));
  const VoxelKey k = m.key_of(Vec3(1.05, -0.95, 0.39));
  CHECK(k == VoxelKey{0, 0, 1});
  CHECK((m.center(k) - Vec3(1.1, -0.9, 0.3)).norm() < 1e-12);
  CHECK(m.key_of(Vec3(0.99, -1.01, -0.01)) == VoxelKey{-1, -1, -1});
}

TEST_CASE("insert_box marks centers inside the closed box") {
  VoxelMap m;
  CHECK(m.insert_box(Vec3(0, 0, 0), Vec3(1, 1, 1)) == 125);
  CHECK(m.insert_box(Vec3(0, 0, 0), Vec3(1, 1, 1)) == 0);
  CHECK_THROWS(m.insert_box(Vec3(1, 0, 0), Vec3(0, 1, 1)));
}

TEST_CASE("discover adds truth voxels within the horizon") {
  VoxelMap truth;
  truth.insert_box(Vec3(2, -0.2, 0.8), Vec3(2.4, 0.2, 1.2));
  VoxelMap known;

  SUBCASE("far away leaves the known map unchanged") {
    CHECK(discover(truth, known, Vec3(-10, 0, 1), 3.0).empty());
    CHECK(known.empty());
  }
  SUBCASE("boundary inclusion") {
    VoxelMap one = single_voxel();
    const Vec3 c = one.center({0, 0, 0});
    VoxelMap k2;
    CHECK(discover(one, k2, c + Vec3(3.0 - 1e-9, 0, 0), 3.0).size() == 1);
  }
  SUBCASE("repeated calls equal the union of per-call discoveries") {
    std::set<VoxelKey> uni;
    for (double x = -1.0; x <= 5.0; x += 0.37) {
      VoxelMap alone;
      for (const auto& k : discover(truth, alone, Vec3(x, 0.5, 1.0), 1.5)) uni.insert(k);
      discover(truth, known, Vec3(x, 0.5, 1.0), 1.5);
    }
    CHECK(known.occupied() == uni);
  }
  SUBCASE("idempotent and monotone") {
    discover(truth, known, Vec3(1, 0, 1), 1.5);
    const auto before = known.occupied();
    CHECK(discover(truth, known, Vec3(1, 0, 1), 1.5).empty());
    CHECK(known.occupied() == before);
    discover(truth, known, Vec3(5, 5, 5), 1.5);
    for (const auto& k : before) CHECK(known.contains(k));
  }
  SUBCASE("grid mismatch") {
    VoxelMap coarse(0.5);
    CHECK_THROWS(discover(truth, coarse, Vec3::Zero(), 3.0));
  }
}

TEST_CASE("repulsion boundary values") {
  const RepulsionParams rp;
  const VoxelMap m = single_voxel();
  const Vec3 c = m.center({0, 0, 0});
  CHECK(std::abs(repulsion_force(c, m, rp).norm() - 25.0) < 1e-9);
  CHECK(repulsion_force(c, m, rp).normalized().isApprox(Vec3::UnitZ()));
  CHECK(repulsion_force(c + Vec3(3.0, 0, 0), m, rp).norm() == 0.0);
  CHECK(repulsion_force(c + Vec3(0, 4.0, 0), m, rp).norm() == 0.0);
  CHECK(std::abs(repulsion_force(c + Vec3(1.5, 0, 0), m, rp).norm() - oracle::kRepulsionAt1p5) < 1e-9);
  CHECK(std::abs(repulsion_magnitude(1.5, rp) - oracle::repulsion(1.5)) < 1e-12);
}

TEST_CASE("repulsion magnitude is continuous and strictly decreasing on [0, h]") {
  const RepulsionParams rp;
  double prev = repulsion_magnitude(0.0, rp);
  CHECK(prev == doctest::Approx(25.0).epsilon(1e-12));
  for (int i = 1; i <= 1000; ++i) {
    const double d = 3.0 * i / 1000.0;
    const double m = repulsion_magnitude(d, rp);
    if (i < 1000) CHECK(m < prev);
    CHECK(prev - m <= 40.1 * 0.003);  // |m'| peaks at d = 0: F_s (lambda + e^h / (e^h - 1))
    prev = m;
  }
  CHECK(std::abs(prev) < 1e-12);
}

TEST_CASE("repulsion points away from the voxel and is additive") {
  const RepulsionParams rp;
  VoxelMap a, b, ab;
  a.insert_box(Vec3(0, 0, 0), Vec3(0.4, 0.4, 0.4));
  b.insert_box(Vec3(1.0, 0, 0), Vec3(1.4, 0.2, 0.2));
  for (const auto& k : a.occupied()) ab.insert(k);
  for (const auto& k : b.occupied()) ab.insert(k);
  const Vec3 p(0.7, 1.1, 0.5);
  CHECK((repulsion_force(p, ab, rp) - repulsion_force(p, a, rp) - repulsion_force(p, b, rp)).norm() < 1e-12);

  const VoxelMap one = single_voxel();
  const Vec3 c = one.center({0, 0, 0});
  const Vec3 off(0.6, -0.3, 0.2);
  CHECK(repulsion_force(c + off, one, rp).normalized().isApprox(off.normalized(), 1e-12));
}

TEST_CASE("repulsion is radially symmetric about a voxel") {
  const RepulsionParams rp;
  const VoxelMap m = single_voxel();
  const Vec3 c = m.center({0, 0, 0});
  const Vec3 off(0.9, 0.4, -0.3);
  const Vec3 f = repulsion_force(c + off, m, rp);
  for (const auto& axis : {Vec3(Vec3::UnitX()), Vec3(1, 1, 0).normalized(), Vec3(0.2, -0.5, 1).normalized()}) {
    const Eigen::AngleAxisd rot(0.7, axis);
    const Vec3 fr = repulsion_force(c + rot * off, m, rp);
    CHECK((fr - rot * f).norm() < 1e-9);
  }
}

TEST_CASE("segment_free") {
  VoxelMap empty;
  CHECK(segment_free(empty, Vec3(0, 0, 0), Vec3(10, 0, 0), 0.3));

  const VoxelMap m = single_voxel();
  const Vec3 c = m.center({0, 0, 0});
  CHECK_FALSE(segment_free(m, c - Vec3(1, 0, 0), c + Vec3(1, 0, 0), 0.3));
  CHECK(segment_free(m, c + Vec3(-1, 0.35, 0), c + Vec3(1, 0.35, 0), 0.3));
  CHECK_FALSE(segment_free(m, c + Vec3(-1, 0.29, 0), c + Vec3(1, 0.29, 0), 0.3));
}

TEST_CASE("segment_free agrees with exact point-segment distance") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  VoxelMap m;
  for (int i = 0; i < 6; ++i) m.insert(m.key_of(Vec3(u(rng), u(rng), u(rng))));
  for (int trial = 0; trial < 300; ++trial) {
    const Vec3 a(u(rng), u(rng), u(rng)), b(u(rng), u(rng), u(rng));
    double dmin = 1e9;
    for (const auto& k : m.occupied()) dmin = std::min(dmin, point_segment_distance(m.center(k), a, b));
    if (std::abs(dmin - 0.3) < 1e-6) continue;
    CHECK(segment_free(m, a, b, 0.3) == (dmin >= 0.3));
  }
}

TEST_CASE("point_segment_distance") {
  CHECK(point_segment_distance(Vec3(0, 1, 0), Vec3(-1, 0, 0), Vec3(1, 0, 0)) == doctest::Approx(1.0));
  CHECK(point_segment_distance(Vec3(3, 0, 0), Vec3(-1, 0, 0), Vec3(1, 0, 0)) == doctest::Approx(2.0));
  CHECK(point_segment_distance(Vec3(0, 0, 2), Vec3(1, 1, 1), Vec3(1, 1, 1)) == doctest::Approx(std::sqrt(3.0)));
}
