#pragma once

#include <span>
#include <vector>

#include "softsim/types.hpp"

namespace softsim {

// One trajectory: T frames of N marker positions (m).
using MarkerSeries = std::vector<std::vector<Vec3>>;

/// Mean Euclidean distance between simulated and reference markers over all
/// trajectories, frames and markers. Throws Error (mismatch) on shape mismatch.
double MarkerError(std::span<const MarkerSeries> sim, std::span<const MarkerSeries> ref);
double MarkerError(const MarkerSeries& sim, const MarkerSeries& ref);

struct Nearest {
  int index = -1;
  double squared_distance = 0.0;
};

/// Exhaustive search; ties go to the smaller index.
Nearest NearestBruteForce(std::span<const Vec3> cloud, const Vec3& query);

// Uniform-grid nearest-neighbour index. Returns exactly what the brute-force
// search returns, including tie-breaking.
class GridIndex {
 public:
  explicit GridIndex(std::span<const Vec3> cloud);
  Nearest Find(const Vec3& query) const;

 private:
  Eigen::Array3i CellOf(const Vec3& p) const;
  int Flat(const Eigen::Array3i& c) const { return (c.z() * dims_.y() + c.y()) * dims_.x() + c.x(); }

  std::vector<Vec3> points_;
  Vec3 origin_ = Vec3::Zero();
  double cell_ = 1.0;
  Eigen::Array3i dims_ = Eigen::Array3i::Ones();
  std::vector<int> cell_start_;  // CSR layout over cells
  std::vector<int> cell_items_;
};

enum class NearestMethod { kBruteForce, kGrid };

/// (1/|P|) sum_p min_q |p-q|^2 + (1/|Q|) sum_q min_p |q-p|^2.
double ChamferDistance(std::span<const Vec3> P, std::span<const Vec3> Q,
                       NearestMethod method = NearestMethod::kBruteForce);

// Simulated and reference clouds of one frame.
struct CloudPair {
  std::vector<Vec3> sim;
  std::vector<Vec3> ref;
};

/// Mean over frames of sqrt(ChamferDistance). The square root is taken per
/// frame before averaging. Throws Error on empty clouds.
double ChamferError(std::span<const CloudPair> series,
                    NearestMethod method = NearestMethod::kBruteForce);

}  // namespace softsim
