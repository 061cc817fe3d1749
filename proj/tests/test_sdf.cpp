#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ergocover/sdf.hpp"
#include "support/oracles.hpp"

using namespace ergocover;

namespace {

/// FD check that the (unit) gradient points along the local ascent of the
/// value field.
void check_gradient_direction(const Sdf& sdf, const Vec3& x, double tol) {
  const double h = 1e-6;
  Vec3 fd;
  for (int i = 0; i < 3; ++i) {
    Vec3 dp = x, dm = x;
    dp(i) += h;
    dm(i) -= h;
    fd(i) = (sdf.value(dp) - sdf.value(dm)) / (2 * h);
  }
  fd.normalize();
  CHECK((sdf.grad(x) - fd).norm() < tol);
}

Eigen::MatrixX3d fibonacci_sphere(int n, double radius) {
  Eigen::MatrixX3d pts(n, 3);
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    const double y = 1.0 - 2.0 * (i + 0.5) / n;
    const double r = std::sqrt(std::max(0.0, 1.0 - y * y));
    const double a = golden * i;
    pts.row(i) = radius * Eigen::RowVector3d(r * std::cos(a), y, r * std::sin(a));
  }
  return pts;
}

}  // namespace

TEST_CASE("sphere: radial closed form") {
  SphereSdf sdf(Vec3::Zero(), 1.0);
  const auto s = sdf.eval(Vec3(2, 0, 0));
  CHECK(s.value == doctest::Approx(1.0));
  CHECK((s.grad - Vec3(1, 0, 0)).norm() < 1e-15);
  CHECK(std::abs(sdf.value(Vec3(0, 1, 0))) < 1e-15);
  CHECK_THROWS_AS(sdf.eval(Vec3::Zero()), Error);  // medial axis
}

TEST_CASE("torus: on-surface zero and unit gradient") {
  TorusSdf sdf(Vec3::Zero(), 2.0, 0.5);
  CHECK(std::abs(sdf.value(Vec3(2.5, 0, 0))) < 1e-12);
  CHECK(std::abs(sdf.value(Vec3(0, 2.0, 0.5))) < 1e-12);
  CHECK(sdf.value(Vec3(4, 0, 0)) == doctest::Approx(1.5));

  Rng rng(7);
  for (int i = 0; i < 50; ++i) {
    const Vec3 x(rng.uniform(-3.5, 3.5), rng.uniform(-3.5, 3.5),
                 rng.uniform(-1.5, 1.5));
    if (std::hypot(x.x(), x.y()) < 0.3) continue;  // stay off the axis
    const auto s = sdf.eval(x);
    CHECK(std::abs(s.grad.norm() - 1.0) < 1e-12);
    check_gradient_direction(sdf, x, 1e-6);
  }
  CHECK_THROWS_AS(sdf.eval(Vec3(0, 0, 0.2)), Error);   // symmetry axis
  CHECK_THROWS_AS(sdf.eval(Vec3(2.0, 0, 0)), Error);   // core circle
}

TEST_CASE("plane and cylinder and rounded box gradients") {
  PlaneSdf plane(Vec3(0, 0, 2), 1.0);  // normalizes the input normal
  CHECK(plane.value(Vec3(5, 5, 1)) == doctest::Approx(0.0));
  CHECK(plane.value(Vec3(0, 0, 2)) == doctest::Approx(1.0));
  CHECK((plane.grad(Vec3(9, 9, 9)) - Vec3(0, 0, 1)).norm() < 1e-15);

  CappedCylinderSdf cyl(Vec3::Zero(), 1.0, 0.5);
  CHECK(cyl.value(Vec3(1, 0, 0)) == doctest::Approx(0.0));
  CHECK(cyl.value(Vec3(0, 0, 0.5)) == doctest::Approx(0.0));
  CHECK(cyl.value(Vec3(3, 0, 0)) == doctest::Approx(2.0));
  CHECK(cyl.value(Vec3(0.2, 0, 3.0)) == doctest::Approx(2.5));

  RoundedBoxSdf box(Vec3::Zero(), Vec3(1, 1, 1), 0.1);
  CHECK(box.value(Vec3(1, 0, 0)) == doctest::Approx(-0.1));
  CHECK(box.value(Vec3(2, 0, 0)) == doctest::Approx(0.9));

  Rng rng(11);
  int interior_checks = 0;
  for (int i = 0; i < 80; ++i) {
    const Vec3 x(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
    // Keep clear of gradient kinks (edges of the piecewise regions).
    if (std::abs(std::hypot(x.x(), x.y()) - 1.0) > 0.05 &&
        std::abs(std::abs(x.z()) - 0.5) > 0.05 &&
        std::hypot(x.x(), x.y()) > 0.05) {
      check_gradient_direction(cyl, x, 1e-5);
      ++interior_checks;
    }
  }
  CHECK(interior_checks > 20);
}

TEST_CASE("grid sdf of a sphere agrees with the analytic value within 2h") {
  const double radius = 1.0;
  const auto cloud = fibonacci_sphere(1500, radius);
  const auto grid = GridSdf::from_cloud(cloud, 48);
  const SphereSdf analytic(Vec3::Zero(), radius);
  const double h = grid.cell_size();

  Rng rng(13);
  int checked = 0;
  for (int i = 0; i < 300; ++i) {
    const Vec3 x(rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2),
                 rng.uniform(-1.2, 1.2));
    const double exact = analytic.value(x);
    if (exact < -0.5 * radius) continue;  // skip near the medial axis
    const auto s = grid.eval(x);
    CHECK(std::abs(s.value - exact) < 2.0 * h);
    ++checked;
  }
  CHECK(checked > 100);

  // Gradient is normalized and points outward away from the center.
  const auto s = grid.eval(Vec3(0.9, 0.2, -0.1));
  CHECK(std::abs(s.grad.norm() - 1.0) < 1e-12);
  CHECK(s.grad.dot(Vec3(0.9, 0.2, -0.1).normalized()) > 0.9);
}

TEST_CASE("grid sdf clamps out-of-bounds queries and flags them") {
  std::vector<double> values(8, 0.0);
  // 2x2x2 grid of a linear field f = z.
  int k = 0;
  for (int ix = 0; ix < 2; ++ix)
    for (int iy = 0; iy < 2; ++iy)
      for (int iz = 0; iz < 2; ++iz) values[k++] = iz;
  GridSdf grid(Vec3::Zero(), Vec3::Ones(), Eigen::Vector3i(2, 2, 2), values);

  const auto inside = grid.eval(Vec3(0.5, 0.5, 0.25));
  CHECK_FALSE(inside.clamped);
  CHECK(inside.value == doctest::Approx(0.25));
  CHECK((inside.grad - Vec3(0, 0, 1)).norm() < 1e-12);

  const auto outside = grid.eval(Vec3(0.5, 0.5, 7.0));
  CHECK(outside.clamped);
  CHECK(outside.value == doctest::Approx(1.0));
}

TEST_CASE("grid sdf binary cache round-trips bit-exactly") {
  const auto cloud = fibonacci_sphere(400, 0.7);
  const auto grid = GridSdf::from_cloud(cloud, 16);
  const std::string path = "/tmp/ergocover_test_sdf.bin";
  grid.save(path);
  const auto loaded = GridSdf::load(path);
  CHECK(loaded.resolution() == grid.resolution());
  CHECK((loaded.lower() - grid.lower()).norm() == 0.0);
  CHECK(loaded.values() == grid.values());
  Rng rng(17);
  for (int i = 0; i < 20; ++i) {
    const Vec3 x(rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8),
                 rng.uniform(-0.8, 0.8));
    CHECK(loaded.value(x) == grid.value(x));
  }
}

TEST_CASE("normal estimation points outward on a sphere") {
  const auto cloud = fibonacci_sphere(800, 1.0);
  const auto normals = estimate_normals(cloud, 20);
  for (int i = 0; i < cloud.rows(); i += 37) {
    const Vec3 n = normals.row(i);
    const Vec3 radial = cloud.row(i).normalized();
    CHECK(n.dot(radial) > 0.95);
  }
}
