#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "egofuture/discovery.hpp"
#include "egofuture/error.hpp"
#include "fixtures.hpp"

using namespace egofuture;
using namespace egofuture::testing;

namespace {

EgoSpaceMap constant_map(double value) {
  const GridSpec spec;
  return EgoSpaceMap(spec, Eigen::MatrixXd::Constant(spec.n_radius, spec.n_theta, value),
                     std::vector<CellState>(spec.cell_count(), CellState::kObserved));
}

// Map whose height depends only on the side of the gaze axis.
EgoSpaceMap split_map(double left, double right) {
  const GridSpec spec;
  Eigen::MatrixXd phi(spec.n_radius, spec.n_theta);
  for (int r = 0; r < spec.n_radius; ++r) {
    for (int t = 0; t < spec.n_theta; ++t) phi(r, t) = spec.theta_at(t) < std::numbers::pi / 2 ? left : right;
  }
  return EgoSpaceMap(spec, phi, std::vector<CellState>(spec.cell_count(), CellState::kObserved));
}

// Basis whose mean is a single repeated point; coefficients are unused.
TrajectoryBasis point_basis(const Eigen::Vector2d& p, int horizon = 1) {
  TrajectoryBasis b;
  b.horizon = horizon;
  b.dt = kDt;
  b.mean = p.replicate(horizon, 1);
  b.basis = Eigen::MatrixXd::Zero(2 * horizon, 1);
  return b;
}

OccludedSpaceMap from_psi(const Eigen::MatrixXd& psi) {
  GroundGrid g = GroundGrid::make({0, static_cast<double>(psi.cols()), 0, static_cast<double>(psi.rows())}, 1.0);
  return OccludedSpaceMap(g, 0.5, 2.0, psi, std::vector<bool>(g.cell_count(), true));
}

// Union-find labelling as an independent component count.
int count_components(const Eigen::MatrixXd& psi, double threshold) {
  const int rows = static_cast<int>(psi.rows());
  const int cols = static_cast<int>(psi.cols());
  std::vector<int> parent(static_cast<std::size_t>(rows * cols));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (psi(r, c) < threshold) continue;
      if (r + 1 < rows && psi(r + 1, c) >= threshold) parent[find(r * cols + c)] = find((r + 1) * cols + c);
      if (c + 1 < cols && psi(r, c + 1) >= threshold) parent[find(r * cols + c)] = find(r * cols + c + 1);
    }
  }
  int n = 0;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) n += psi(r, c) >= threshold && find(r * cols + c) == r * cols + c;
  }
  return n;
}

}  // namespace

TEST(Discover, FreeGroundGivesZero) {
  const TrajectoryBasis b = point_basis({0.5, 4.0}, 10);
  const std::vector<Coefficients> betas(3, Coefficients::Zero(1));
  const OccludedSpaceMap m = discover(betas, b, constant_map(0.0));
  EXPECT_EQ(m.psi().maxCoeff(), 0.0);
}

TEST(Discover, SinglePointSpreadsItsHeight) {
  const Eigen::Vector2d p(1.0, 5.0);
  const TrajectoryBasis b = point_basis(p);
  const std::vector<Coefficients> betas{Coefficients::Zero(1)};
  DiscoveryConfig config;
  const OccludedSpaceMap m = discover(betas, b, constant_map(0.8), config);
  const GroundGrid& g = m.grid();
  EXPECT_EQ(g.rows, 80);
  EXPECT_EQ(g.cols, 80);
  for (int r = 0; r < g.rows; ++r) {
    for (int c = 0; c < g.cols; ++c) {
      const double d = (g.cell_center(r, c) - p).norm();
      if (d < 3.9 * config.sigma) {
        EXPECT_TRUE(m.defined(r, c));
        EXPECT_NEAR(m.psi(r, c), 0.8, 1e-12);
      } else if (d > 4.1 * config.sigma) {
        EXPECT_FALSE(m.defined(r, c));
        EXPECT_EQ(m.psi(r, c), 0.0);
      }
    }
  }
}

TEST(Discover, TwoPointsGaussianAverage) {
  // Points on either side of the gaze axis read different heights.
  const Eigen::Vector2d a(-1.0, 6.0);
  const Eigen::Vector2d c(1.0, 6.0);
  TrajectoryBasis b;
  b.horizon = 2;
  b.dt = kDt;
  b.mean.resize(4);
  b.mean << a, c;
  b.basis = Eigen::MatrixXd::Zero(4, 1);
  const EgoSpaceMap map = split_map(0.2, 1.4);
  const double pa = sample_phi(map, a.x(), a.y());
  const double pc = sample_phi(map, c.x(), c.y());
  ASSERT_NE(pa, pc);
  const std::vector<Coefficients> betas{Coefficients::Zero(1)};
  DiscoveryConfig config;
  config.sigma = 0.7;
  const OccludedSpaceMap m = discover(betas, b, map, config);
  for (int r = 0; r < m.grid().rows; r += 3) {
    for (int col = 0; col < m.grid().cols; col += 3) {
      const Eigen::Vector2d x = m.grid().cell_center(r, col);
      const double da = (x - a).norm();
      const double dc = (x - c).norm();
      if (std::max(da, dc) > 4 * config.sigma) continue;
      const double wa = std::exp(-da * da / (2 * 0.49));
      const double wc = std::exp(-dc * dc / (2 * 0.49));
      EXPECT_NEAR(m.psi(r, col), (wa * pa + wc * pc) / (wa + wc), 1e-12);
    }
  }
}

TEST(Discover, EmptyInputThrows) {
  EXPECT_THROW(discover(std::vector<Coefficients>{}, point_basis({0, 1}), constant_map(0.0)), Error);
}

TEST(Detections, TwoBlobsSortedByPeak) {
  Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(8, 10);
  psi.block(1, 1, 2, 3).setConstant(0.5);
  psi(2, 2) = 0.9;
  psi.block(5, 6, 2, 2).setConstant(1.5);
  const auto d = extract_detections(from_psi(psi), 0.3);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_DOUBLE_EQ(d[0].peak, 1.5);
  EXPECT_EQ(d[0].cells.size(), 4u);
  EXPECT_NEAR((d[0].centroid - Eigen::Vector2d(7.0, 6.0)).norm(), 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(d[1].peak, 0.9);
  EXPECT_EQ(d[1].cells.size(), 6u);
}

TEST(Detections, DiagonalCellsAreSeparate) {
  Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(3, 3);
  psi(0, 0) = 1.0;
  psi(1, 1) = 1.0;
  EXPECT_EQ(extract_detections(from_psi(psi), 0.5).size(), 2u);
}

TEST(Detections, ThresholdIsInclusive) {
  Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(2, 2);
  psi(0, 0) = 0.3;
  EXPECT_EQ(extract_detections(from_psi(psi), 0.3).size(), 1u);
  EXPECT_TRUE(extract_detections(from_psi(psi), 0.31).empty());
}

TEST(Detections, ComponentCountMatchesUnionFind) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd psi(25, 30);
    for (Eigen::Index i = 0; i < psi.size(); ++i) psi(i) = u(rng);
    const auto d = extract_detections(from_psi(psi), 0.55);
    EXPECT_EQ(static_cast<int>(d.size()), count_components(psi, 0.55));
    std::size_t cells = 0;
    for (const auto& det : d) cells += det.cells.size();
    EXPECT_EQ(cells, static_cast<std::size_t>((psi.array() >= 0.55).count()));
    for (std::size_t i = 1; i < d.size(); ++i) EXPECT_GE(d[i - 1].peak, d[i].peak);
  }
}

TEST(PsiOutput, PgmHeaderAndSize) {
  Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(3, 4);
  psi(0, 0) = 2.0;
  std::ostringstream out;
  write_psi_pgm(out, from_psi(psi));
  const std::string s = out.str();
  ASSERT_EQ(s.rfind("P5\n4 3\n255\n", 0), 0u);
  const std::string pixels = s.substr(11);
  ASSERT_EQ(pixels.size(), 12u);
  // Row 0 is nearest, so it is written last.
  EXPECT_EQ(static_cast<unsigned char>(pixels[8]), 255);
  EXPECT_EQ(static_cast<unsigned char>(pixels[0]), 0);
}

TEST(PsiOutput, CsvShape) {
  std::ostringstream out;
  write_psi_csv(out, from_psi(Eigen::MatrixXd::Zero(3, 4)));
  std::istringstream in(out.str());
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 4);
    ++lines;
  }
  EXPECT_EQ(lines, 4);
}

TEST(PsiOutput, DetectionsJson) {
  Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(3, 3);
  psi(1, 1) = 1.0;
  const nlohmann::json j = detections_to_json(extract_detections(from_psi(psi), 0.5));
  ASSERT_TRUE(j.is_array());
  ASSERT_EQ(j.size(), 1u);
}
