#include "ergocover/sdf.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace ergocover {

namespace {

constexpr double kMedialTol = 1e-8;

SdfSample finish(double value, const Eigen::Vector3d& raw_grad,
                 bool clamped = false) {
  const double n = raw_grad.norm();
  if (n < kMedialTol)
    throw Error("Sdf: gradient vanishes at the query point (medial axis)");
  return SdfSample{value, raw_grad / n, clamped};
}

}  // namespace

// --- SphereSdf ---------------------------------------------------------------

SphereSdf::SphereSdf(const Eigen::Vector3d& center, double radius)
    : center_(center), radius_(radius) {
  if (radius <= 0.0) throw Error("SphereSdf: radius must be positive");
}

SdfSample SphereSdf::eval(const Eigen::Vector3d& x) const {
  const Eigen::Vector3d d = x - center_;
  return finish(d.norm() - radius_, d);
}

// --- TorusSdf ----------------------------------------------------------------

TorusSdf::TorusSdf(const Eigen::Vector3d& center, double major_radius,
                   double minor_radius)
    : center_(center), major_(major_radius), minor_(minor_radius) {
  if (major_radius <= 0.0 || minor_radius <= 0.0 || minor_radius >= major_radius)
    throw Error("TorusSdf: need 0 < minor < major");
}

SdfSample TorusSdf::eval(const Eigen::Vector3d& x) const {
  const Eigen::Vector3d d = x - center_;
  const double rho = std::hypot(d.x(), d.y());
  if (rho < kMedialTol)
    throw Error("TorusSdf: query on the symmetry axis (medial axis)");
  const Eigen::Vector2d q(rho - major_, d.z());
  const double qn = q.norm();
  if (qn < kMedialTol)
    throw Error("TorusSdf: query on the core circle (medial axis)");
  Eigen::Vector3d g;
  g.x() = (q.x() / qn) * (d.x() / rho);
  g.y() = (q.x() / qn) * (d.y() / rho);
  g.z() = q.y() / qn;
  return finish(qn - minor_, g);
}

// --- CappedCylinderSdf --------------------------------------------------------

CappedCylinderSdf::CappedCylinderSdf(const Eigen::Vector3d& center,
                                     double radius, double half_height)
    : center_(center), radius_(radius), half_height_(half_height) {
  if (radius <= 0.0 || half_height <= 0.0)
    throw Error("CappedCylinderSdf: radius and half_height must be positive");
}

SdfSample CappedCylinderSdf::eval(const Eigen::Vector3d& x) const {
  const Eigen::Vector3d d = x - center_;
  const double rho = std::hypot(d.x(), d.y());
  const double dr = rho - radius_;          // radial excess
  const double dz = std::abs(d.z()) - half_height_;  // axial excess
  const double sz = d.z() >= 0.0 ? 1.0 : -1.0;

  Eigen::Vector3d rho_hat = Eigen::Vector3d::Zero();
  if (rho >= kMedialTol) rho_hat = Eigen::Vector3d(d.x() / rho, d.y() / rho, 0.0);

  if (dr <= 0.0 && dz <= 0.0) {
    // Inside: nearest face wins.
    if (dr >= dz) {
      if (rho < kMedialTol)
        throw Error("CappedCylinderSdf: query on the axis (medial axis)");
      return finish(dr, rho_hat);
    }
    return finish(dz, Eigen::Vector3d(0.0, 0.0, sz));
  }
  const double ox = std::max(dr, 0.0);
  const double oz = std::max(dz, 0.0);
  const double dist = std::hypot(ox, oz);
  if (ox > 0.0 && rho < kMedialTol)
    throw Error("CappedCylinderSdf: query on the axis (medial axis)");
  return finish(dist, ox * rho_hat + Eigen::Vector3d(0.0, 0.0, oz * sz));
}

// --- PlaneSdf ----------------------------------------------------------------

PlaneSdf::PlaneSdf(const Eigen::Vector3d& normal, double offset)
    : normal_(normal.normalized()), offset_(offset) {
  if (normal.norm() < kMedialTol) throw Error("PlaneSdf: zero normal");
}

SdfSample PlaneSdf::eval(const Eigen::Vector3d& x) const {
  return SdfSample{normal_.dot(x) - offset_, normal_, false};
}

// --- RoundedBoxSdf -------------------------------------------------------------

RoundedBoxSdf::RoundedBoxSdf(const Eigen::Vector3d& center,
                             const Eigen::Vector3d& half_extents,
                             double corner_radius)
    : center_(center), half_extents_(half_extents), corner_(corner_radius) {
  if ((half_extents.array() <= 0.0).any() || corner_radius < 0.0)
    throw Error("RoundedBoxSdf: invalid extents");
}

SdfSample RoundedBoxSdf::eval(const Eigen::Vector3d& x) const {
  const Eigen::Vector3d d = x - center_;
  const Eigen::Vector3d q = d.cwiseAbs() - half_extents_;
  const Eigen::Vector3d outside = q.cwiseMax(0.0);
  const double out_norm = outside.norm();
  auto sgn = [](double v) { return v >= 0.0 ? 1.0 : -1.0; };
  if (out_norm > 0.0) {
    Eigen::Vector3d g;
    for (int i = 0; i < 3; ++i) g(i) = sgn(d(i)) * outside(i);
    return finish(out_norm + std::min(q.maxCoeff(), 0.0) - corner_, g);
  }
  int axis;
  const double inside = q.maxCoeff(&axis);
  Eigen::Vector3d g = Eigen::Vector3d::Zero();
  g(axis) = sgn(d(axis));
  return finish(inside - corner_, g);
}

// --- normals -----------------------------------------------------------------

Eigen::MatrixX3d estimate_normals(const Eigen::MatrixX3d& points,
                                  int neighbors) {
  const int n = static_cast<int>(points.rows());
  if (n < 4) throw Error("estimate_normals: need at least 4 points");
  neighbors = std::min(neighbors, n);
  KdTree tree(points);
  const Eigen::RowVector3d centroid = points.colwise().mean();
  Eigen::MatrixX3d normals(n, 3);
  for (int i = 0; i < n; ++i) {
    const auto nn = tree.knn(points.row(i), neighbors);
    Eigen::RowVector3d mean = Eigen::RowVector3d::Zero();
    for (const auto& h : nn) mean += points.row(h.index);
    mean /= static_cast<double>(nn.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& h : nn) {
      const Eigen::RowVector3d c = points.row(h.index) - mean;
      cov += c.transpose() * c;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    Eigen::Vector3d normal = eig.eigenvectors().col(0);  // smallest variance
    // Orient outward from the cloud centroid.
    if (normal.dot((points.row(i) - centroid).transpose()) < 0.0)
      normal = -normal;
    normals.row(i) = normal;
  }
  return normals;
}

// --- GridSdf ------------------------------------------------------------------

GridSdf::GridSdf(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi,
                 const Eigen::Vector3i& resolution, std::vector<double> values)
    : lo_(lo), hi_(hi), res_(resolution), values_(std::move(values)) {
  if ((res_.array() < 2).any()) throw Error("GridSdf: resolution must be >= 2");
  if (((hi_ - lo_).array() <= 0.0).any())
    throw Error("GridSdf: degenerate bounds");
  const std::size_t expected = static_cast<std::size_t>(res_.x()) * res_.y() *
                               static_cast<std::size_t>(res_.z());
  if (values_.size() != expected)
    throw Error("GridSdf: value array size does not match resolution");
  cell_ = (hi_ - lo_).cwiseQuotient((res_.cast<double>().array() - 1.0).matrix());
  build_gradients();
}

void GridSdf::build_gradients() {
  for (auto& g : grad_)
    g.assign(values_.size(), 0.0);
  const int nx = res_.x(), ny = res_.y(), nz = res_.z();
  auto idx = [&](int ix, int iy, int iz) {
    return (static_cast<std::size_t>(ix) * ny + iy) * nz + iz;
  };
  for (int ix = 0; ix < nx; ++ix) {
    for (int iy = 0; iy < ny; ++iy) {
      for (int iz = 0; iz < nz; ++iz) {
        // Central differences, one-sided at the borders.
        const int xm = std::max(ix - 1, 0), xp = std::min(ix + 1, nx - 1);
        const int ym = std::max(iy - 1, 0), yp = std::min(iy + 1, ny - 1);
        const int zm = std::max(iz - 1, 0), zp = std::min(iz + 1, nz - 1);
        const std::size_t here = idx(ix, iy, iz);
        grad_[0][here] = (at(xp, iy, iz) - at(xm, iy, iz)) / ((xp - xm) * cell_.x());
        grad_[1][here] = (at(ix, yp, iz) - at(ix, ym, iz)) / ((yp - ym) * cell_.y());
        grad_[2][here] = (at(ix, iy, zp) - at(ix, iy, zm)) / ((zp - zm) * cell_.z());
      }
    }
  }
}

GridSdf GridSdf::from_cloud(const Eigen::MatrixX3d& points, int resolution,
                            int normal_neighbors) {
  if (resolution < 2) throw Error("GridSdf: resolution must be >= 2");
  const Eigen::MatrixX3d normals = estimate_normals(points, normal_neighbors);
  KdTree tree(points);
  const Eigen::Vector3d cloud_lo = points.colwise().minCoeff();
  const Eigen::Vector3d cloud_hi = points.colwise().maxCoeff();
  const double pad = 0.15 * (cloud_hi - cloud_lo).maxCoeff();
  const Eigen::Vector3d lo = cloud_lo.array() - pad;
  const Eigen::Vector3d hi = cloud_hi.array() + pad;
  const Eigen::Vector3i res(resolution, resolution, resolution);
  const Eigen::Vector3d cell =
      (hi - lo).cwiseQuotient((res.cast<double>().array() - 1.0).matrix());

  std::vector<double> values(
      static_cast<std::size_t>(resolution) * resolution * resolution);
  std::size_t k = 0;
  for (int ix = 0; ix < resolution; ++ix) {
    for (int iy = 0; iy < resolution; ++iy) {
      for (int iz = 0; iz < resolution; ++iz, ++k) {
        const Eigen::Vector3d g =
            lo + Eigen::Vector3d(ix * cell.x(), iy * cell.y(), iz * cell.z());
        const auto nn = tree.knn(g, 1);
        const Eigen::Vector3d p = points.row(nn[0].index);
        const Eigen::Vector3d normal = normals.row(nn[0].index);
        const Eigen::Vector3d diff = g - p;
        const double sign = diff.dot(normal) >= 0.0 ? 1.0 : -1.0;
        values[k] = sign * diff.norm();
      }
    }
  }
  return GridSdf(lo, hi, res, std::move(values));
}

SdfSample GridSdf::eval(const Eigen::Vector3d& x) const {
  Eigen::Vector3d q = x;
  bool clamped = false;
  for (int i = 0; i < 3; ++i) {
    if (q(i) < lo_(i)) {
      q(i) = lo_(i);
      clamped = true;
    } else if (q(i) > hi_(i)) {
      q(i) = hi_(i);
      clamped = true;
    }
  }
  // Cell coordinates and trilinear weights.
  int cell_idx[3];
  double f[3];
  for (int i = 0; i < 3; ++i) {
    const double u = (q(i) - lo_(i)) / cell_(i);
    cell_idx[i] = std::min(static_cast<int>(u), res_(i) - 2);
    f[i] = u - cell_idx[i];
  }
  double value = 0.0;
  Eigen::Vector3d grad = Eigen::Vector3d::Zero();
  for (int dx = 0; dx < 2; ++dx) {
    for (int dy = 0; dy < 2; ++dy) {
      for (int dz = 0; dz < 2; ++dz) {
        const double w = (dx ? f[0] : 1.0 - f[0]) * (dy ? f[1] : 1.0 - f[1]) *
                         (dz ? f[2] : 1.0 - f[2]);
        if (w == 0.0) continue;
        const std::size_t id =
            (static_cast<std::size_t>(cell_idx[0] + dx) * res_.y() +
             (cell_idx[1] + dy)) *
                res_.z() +
            (cell_idx[2] + dz);
        value += w * values_[id];
        grad.x() += w * grad_[0][id];
        grad.y() += w * grad_[1][id];
        grad.z() += w * grad_[2][id];
      }
    }
  }
  return finish(value, grad, clamped);
}

void GridSdf::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("GridSdf::save: cannot open " + path);
  const char magic[8] = {'E', 'C', 'S', 'D', 'F', '0', '0', '1'};
  out.write(magic, 8);
  auto write_doubles = [&](const double* p, std::size_t n) {
    out.write(reinterpret_cast<const char*>(p), sizeof(double) * n);
  };
  write_doubles(lo_.data(), 3);
  write_doubles(hi_.data(), 3);
  std::int32_t res[3] = {res_.x(), res_.y(), res_.z()};
  out.write(reinterpret_cast<const char*>(res), sizeof(res));
  write_doubles(values_.data(), values_.size());
  if (!out) throw Error("GridSdf::save: write failed for " + path);
}

GridSdf GridSdf::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("GridSdf::load: cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, "ECSDF001", 8) != 0)
    throw Error("GridSdf::load: bad magic in " + path);
  Eigen::Vector3d lo, hi;
  in.read(reinterpret_cast<char*>(lo.data()), sizeof(double) * 3);
  in.read(reinterpret_cast<char*>(hi.data()), sizeof(double) * 3);
  std::int32_t res[3];
  in.read(reinterpret_cast<char*>(res), sizeof(res));
  if (!in) throw Error("GridSdf::load: truncated header in " + path);
  const std::size_t count = static_cast<std::size_t>(res[0]) * res[1] * res[2];
  std::vector<double> values(count);
  in.read(reinterpret_cast<char*>(values.data()), sizeof(double) * count);
  if (!in) throw Error("GridSdf::load: truncated values in " + path);
  return GridSdf(lo, hi, Eigen::Vector3i(res[0], res[1], res[2]),
                 std::move(values));
}

}  // namespace ergocover
