#include "softsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace softsim {

double MarkerError(std::span<const MarkerSeries> sim, std::span<const MarkerSeries> ref) {
  if (sim.size() != ref.size()) throw MismatchError("marker error: trajectory counts differ");
  double sum = 0.0;
  long count = 0;
  for (std::size_t j = 0; j < sim.size(); ++j) {
    if (sim[j].size() != ref[j].size())
      throw MismatchError("marker error: frame counts differ in trajectory " + std::to_string(j));
    for (std::size_t t = 0; t < sim[j].size(); ++t) {
      if (sim[j][t].size() != ref[j][t].size())
        throw MismatchError("marker error: marker counts differ at frame " + std::to_string(t));
      for (std::size_t i = 0; i < sim[j][t].size(); ++i) {
        sum += (sim[j][t][i] - ref[j][t][i]).norm();
        ++count;
      }
    }
  }
  if (count == 0) throw MismatchError("marker error: no markers to compare");
  return sum / static_cast<double>(count);
}

double MarkerError(const MarkerSeries& sim, const MarkerSeries& ref) {
  return MarkerError(std::span<const MarkerSeries>(&sim, 1), std::span<const MarkerSeries>(&ref, 1));
}

Nearest NearestBruteForce(std::span<const Vec3> cloud, const Vec3& query) {
  Nearest best;
  best.squared_distance = std::numeric_limits<double>::infinity();
  for (int i = 0; i < static_cast<int>(cloud.size()); ++i) {
    const double d = (cloud[i] - query).squaredNorm();
    if (d < best.squared_distance) best = {i, d};
  }
  return best;
}

GridIndex::GridIndex(std::span<const Vec3> cloud) : points_(cloud.begin(), cloud.end()) {
  if (points_.empty()) throw InputError("nearest-neighbour index needs a non-empty cloud");
  Vec3 lo = points_[0], hi = points_[0];
  for (const auto& p : points_) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Vec3 extent = hi - lo;
  const double n = static_cast<double>(points_.size());
  // Aim for about one point per cell on the bounding box.
  cell_ = std::max(extent.maxCoeff() / std::cbrt(n), 1e-12);
  const double volume = extent.cwiseMax(cell_).prod();
  cell_ = std::max(cell_, std::cbrt(volume / n));
  origin_ = lo;
  for (int a = 0; a < 3; ++a)
    dims_(a) = std::max(1, static_cast<int>(std::floor(extent(a) / cell_)) + 1);

  std::vector<int> counts(dims_.prod() + 1, 0);
  std::vector<int> cell_of(points_.size());
  for (std::size_t i = 0; i < points_.size(); ++i) {
    cell_of[i] = Flat(CellOf(points_[i]).cwiseMax(0).cwiseMin(dims_ - 1));
    ++counts[cell_of[i] + 1];
  }
  for (std::size_t c = 1; c < counts.size(); ++c) counts[c] += counts[c - 1];
  cell_start_ = counts;
  cell_items_.resize(points_.size());
  for (std::size_t i = 0; i < points_.size(); ++i)
    cell_items_[counts[cell_of[i]]++] = static_cast<int>(i);  // ascending index per cell
}

Eigen::Array3i GridIndex::CellOf(const Vec3& p) const {
  Eigen::Array3i c;
  for (int a = 0; a < 3; ++a) {
    const double f = std::floor((p(a) - origin_(a)) / cell_);
    c(a) = static_cast<int>(std::clamp(f, -1e8, 1e8));
  }
  return c;
}

Nearest GridIndex::Find(const Vec3& query) const {
  const Eigen::Array3i qc = CellOf(query);
  int r0 = 0, r_max = 0;
  for (int a = 0; a < 3; ++a) {
    r0 = std::max({r0, -qc(a), qc(a) - (dims_(a) - 1)});
    r_max = std::max({r_max, std::abs(qc(a)), std::abs(qc(a) - (dims_(a) - 1))});
  }
  Nearest best;
  best.squared_distance = std::numeric_limits<double>::infinity();
  for (int r = r0; r <= r_max; ++r) {
    const Eigen::Array3i lo = (qc - r).cwiseMax(0);
    const Eigen::Array3i hi = (qc + r).cwiseMin(dims_ - 1);
    for (int z = lo.z(); z <= hi.z(); ++z)
      for (int y = lo.y(); y <= hi.y(); ++y)
        for (int x = lo.x(); x <= hi.x(); ++x) {
          const Eigen::Array3i c(x, y, z);
          if ((c - qc).abs().maxCoeff() != r) continue;
          const int f = Flat(c);
          for (int k = cell_start_[f]; k < cell_start_[f + 1]; ++k) {
            const int i = cell_items_[k];
            const double d = (points_[i] - query).squaredNorm();
            if (d < best.squared_distance || (d == best.squared_distance && i < best.index))
              best = {i, d};
          }
        }
    // Cells beyond ring r are at least r cells away; stop once nothing there
    // can tie or beat the incumbent.
    const double bound = r * cell_;
    if (best.index >= 0 && best.squared_distance < bound * bound * (1.0 - 1e-9)) break;
  }
  return best;
}

namespace {

double MeanNearest(std::span<const Vec3> from, std::span<const Vec3> to, NearestMethod method) {
  double sum = 0.0;
  if (method == NearestMethod::kGrid) {
    const GridIndex index(to);
    for (const auto& p : from) sum += index.Find(p).squared_distance;
  } else {
    for (const auto& p : from) sum += NearestBruteForce(to, p).squared_distance;
  }
  return sum / static_cast<double>(from.size());
}

}  // namespace

double ChamferDistance(std::span<const Vec3> P, std::span<const Vec3> Q, NearestMethod method) {
  if (P.empty() || Q.empty()) throw InputError("Chamfer distance needs non-empty clouds");
  return MeanNearest(P, Q, method) + MeanNearest(Q, P, method);
}

double ChamferError(std::span<const CloudPair> series, NearestMethod method) {
  if (series.empty()) throw InputError("Chamfer error needs at least one frame");
  double sum = 0.0;
  for (const auto& frame : series) sum += std::sqrt(ChamferDistance(frame.sim, frame.ref, method));
  return sum / static_cast<double>(series.size());
}

}  // namespace softsim
