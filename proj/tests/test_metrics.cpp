#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "softsim/metrics.hpp"
#include "softsim/types.hpp"

namespace softsim {
namespace {

MarkerSeries One(const Vec3& p) { return {{p}}; }

TEST(MarkerError, Examples) {
  const MarkerSeries a = {{Vec3(1, 2, 3), Vec3(0, 0, 0)}, {Vec3(4, 5, 6), Vec3(1, 1, 1)}};
  EXPECT_EQ(MarkerError(a, a), 0.0);
  EXPECT_EQ(MarkerError(One(Vec3::Zero()), One(Vec3(3, 4, 0))), 5.0);
  const std::vector<MarkerSeries> sim = {One(Vec3::Zero()), One(Vec3::Zero())};
  const std::vector<MarkerSeries> ref = {One(Vec3(1, 0, 0)), One(Vec3(0, 3, 0))};
  EXPECT_EQ(MarkerError(sim, ref), 2.0);
}

TEST(MarkerError, ShapeMismatch) {
  const MarkerSeries a = {{Vec3::Zero()}};
  const MarkerSeries b = {{Vec3::Zero(), Vec3::Zero()}};
  const MarkerSeries c = {{Vec3::Zero()}, {Vec3::Zero()}};
  try {
    MarkerError(a, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), Error::Kind::kMismatch);
  }
  EXPECT_THROW(MarkerError(a, c), Error);
}

TEST(MarkerError, TranslationInvariantAndPositive) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  auto rv = [&] { return Vec3(n(rng), n(rng), n(rng)); };
  MarkerSeries a(5, std::vector<Vec3>(4)), b = a;
  for (auto& f : a) for (auto& p : f) p = rv();
  for (auto& f : b) for (auto& p : f) p = rv();
  const Vec3 shift = rv();
  MarkerSeries as = a, bs = b;
  for (auto& f : as) for (auto& p : f) p += shift;
  for (auto& f : bs) for (auto& p : f) p += shift;
  EXPECT_NEAR(MarkerError(as, bs), MarkerError(a, b), 1e-12);
  EXPECT_GT(MarkerError(a, b), 0.0);
}

TEST(Chamfer, Examples) {
  const std::vector<Vec3> origin = {Vec3::Zero()};
  const std::vector<Vec3> ex = {Vec3(1, 0, 0)};
  const std::vector<Vec3> pair = {Vec3::Zero(), Vec3(2, 0, 0)};
  EXPECT_EQ(ChamferDistance(origin, origin), 0.0);
  EXPECT_EQ(ChamferDistance(origin, ex), 2.0);
  EXPECT_EQ(ChamferDistance(pair, origin), 2.0);
  const std::vector<CloudPair> one = {{origin, ex}};
  EXPECT_EQ(ChamferError(one), std::sqrt(2.0));
  const std::vector<CloudPair> two = {{pair, origin}};
  EXPECT_EQ(ChamferError(two), std::sqrt(2.0));
  // The root is taken per frame before averaging.
  const std::vector<CloudPair> mixed = {{origin, origin}, {origin, ex}};
  EXPECT_EQ(ChamferError(mixed), std::sqrt(2.0) / 2);
}

TEST(Chamfer, EmptyCloudRejected) {
  const std::vector<CloudPair> bad = {{{}, {Vec3::Zero()}}};
  EXPECT_THROW(ChamferError(bad), Error);
}

TEST(Chamfer, SymmetricAndSetEquality) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<Vec3> p(50), q(70);
  for (auto& v : p) v = Vec3(u(rng), u(rng), u(rng));
  for (auto& v : q) v = Vec3(u(rng), u(rng), u(rng));
  EXPECT_EQ(ChamferDistance(p, q), ChamferDistance(q, p));
  std::vector<Vec3> shuffled = p;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  shuffled.push_back(p[3]);  // duplicates do not matter as sets
  EXPECT_LT(ChamferDistance(p, shuffled), 1e-12);
}

TEST(NearestNeighbour, GridMatchesBruteForceExactly) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  std::uniform_int_distribution<int> size(1, 500);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Vec3> cloud(size(rng));
    const double spread = trial % 3 == 0 ? 1e-3 : 1.0;
    for (auto& v : cloud) v = spread * Vec3(u(rng), u(rng), u(rng));
    if (trial % 4 == 0) cloud[cloud.size() / 2] = cloud.front();  // exact tie
    const GridIndex grid(cloud);
    for (int q = 0; q < 50; ++q) {
      const Vec3 query = q % 5 == 0 ? cloud[q % cloud.size()] : Vec3(3 * u(rng), 3 * u(rng), 3 * u(rng));
      const Nearest a = NearestBruteForce(cloud, query);
      const Nearest b = grid.Find(query);
      ASSERT_EQ(a.index, b.index) << trial;
      ASSERT_EQ(a.squared_distance, b.squared_distance);
    }
  }
}

TEST(NearestNeighbour, TiesGoToSmallerIndex) {
  const std::vector<Vec3> cloud = {Vec3(1, 0, 0), Vec3(-1, 0, 0), Vec3(1, 0, 0)};
  EXPECT_EQ(NearestBruteForce(cloud, Vec3::Zero()).index, 0);
  EXPECT_EQ(GridIndex(cloud).Find(Vec3::Zero()).index, 0);
  EXPECT_EQ(GridIndex(cloud).Find(Vec3(1, 0, 0)).index, 0);
}

TEST(Chamfer, GridAndBruteForceAgree) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 0.16);
  std::vector<CloudPair> series(10);
  for (auto& f : series) {
    f.sim.resize(200);
    f.ref.resize(300);
    for (auto& v : f.sim) v = Vec3(u(rng), u(rng), u(rng));
    for (auto& v : f.ref) v = Vec3(u(rng), u(rng), u(rng));
  }
  EXPECT_EQ(ChamferError(series, NearestMethod::kGrid), ChamferError(series, NearestMethod::kBruteForce));
}

}  // namespace
}  // namespace softsim
