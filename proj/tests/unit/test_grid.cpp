#include <algorithm>
#include <filesystem>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "gpatt/errors.hpp"
#include "gpatt/grid.hpp"
#include "gpatt/grid_io.hpp"

using namespace gpatt;

namespace {

Grid grid_3x4() { return Grid({{0, 1, 2}, {0, 1, 2, 3}}); }

}  // namespace

TEST(Grid, LinearIndexIsColumnMajor) {
  const Grid g = grid_3x4();
  EXPECT_EQ(g.linear_index(std::vector<std::size_t>{0, 0}), 0u);
  EXPECT_EQ(g.linear_index(std::vector<std::size_t>{2, 0}), 2u);
  EXPECT_EQ(g.linear_index(std::vector<std::size_t>{0, 1}), 3u);
  EXPECT_EQ(g.linear_index(std::vector<std::size_t>{2, 3}), 11u);
}

TEST(Grid, LinearIndexEnumeratesEveryNodeOnce) {
  const Grid g = grid_3x4();
  std::set<std::size_t> seen;
  for (std::size_t j = 0; j < 4; ++j)
    for (std::size_t i = 0; i < 3; ++i) seen.insert(g.linear_index(std::vector<std::size_t>{i, j}));
  EXPECT_EQ(seen.size(), 12u);
  EXPECT_EQ(*seen.rbegin(), 11u);
}

TEST(Grid, MultiIndexInvertsLinearIndexExhaustively) {
  for (const auto& shape : {std::vector<std::size_t>{100, 100}, std::vector<std::size_t>{7, 11, 13},
                            std::vector<std::size_t>{2, 3, 4, 5}, std::vector<std::size_t>{10000}}) {
    const Grid g = regular_grid(shape);
    for (std::size_t i = 0; i < g.size(); ++i) {
      ASSERT_EQ(g.linear_index(g.multi_index(i)), i);
    }
  }
}

TEST(Grid, RejectsOutOfRangeIndex) {
  const Grid g = grid_3x4();
  EXPECT_THROW(g.linear_index(std::vector<std::size_t>{3, 0}), BoundsError);
  EXPECT_THROW(g.linear_index(std::vector<std::size_t>{0}), ShapeError);
  EXPECT_THROW(g.multi_index(12), BoundsError);
}

TEST(Grid, ValidatesAxes) {
  EXPECT_THROW(Grid(std::vector<std::vector<double>>{}), ShapeError);
  using Axes = std::vector<std::vector<double>>;
  EXPECT_THROW(Grid(Axes{{0.0}}), ShapeError);
  EXPECT_THROW(Grid(Axes{{0.0, 0.0}}), ShapeError);
  EXPECT_THROW(Grid(Axes{{1.0, 0.0}}), ShapeError);
  EXPECT_THROW(Grid(Axes{{0.0, std::numeric_limits<double>::quiet_NaN()}}), ShapeError);
}

TEST(Grid, NyquistUsesMedianSpacing) {
  EXPECT_DOUBLE_EQ(Grid({{0, 1, 2, 3}}).nyquist(0), 0.5);
  EXPECT_DOUBLE_EQ(Grid({{0, 0.25, 0.5, 0.75, 5.0}}).nyquist(0), 2.0);
}

TEST(Grid, IrregularAxesArePreservedInPoints) {
  const Grid g({{0.0, 0.3, 1.7}, {-1.0, 2.5}});
  const auto pt = g.point(g.linear_index(std::vector<std::size_t>{2, 1}));
  EXPECT_DOUBLE_EQ(pt[0], 1.7);
  EXPECT_DOUBLE_EQ(pt[1], 2.5);
}

TEST(ObservationSet, ZeroesImaginaryValues) {
  Eigen::VectorXd v(4);
  v << 1, 2, 3, 4;
  const ObservationSet obs(Grid({{0, 1}, {0, 1}}), v, {1, 0, 1, 1});
  EXPECT_EQ(obs.num_observed(), 3u);
  EXPECT_EQ(obs.num_imaginary(), 1u);
  EXPECT_EQ(obs.values()[1], 0.0);
  EXPECT_EQ(obs.observed_values(), (Eigen::Vector3d(1, 3, 4)));
}

TEST(ObservationSet, RequiresAtLeastOneObservation) {
  EXPECT_THROW(ObservationSet(Grid({{0, 1}}), Eigen::VectorXd::Zero(2), {0, 0}), ShapeError);
  EXPECT_THROW(ObservationSet(Grid({{0, 1}}), Eigen::VectorXd::Zero(3), {1, 1}), ShapeError);
}

TEST(CompleteGrid, OneHole) {
  Eigen::MatrixXd pts(3, 2);
  pts << 0, 0, 1, 0, 1, 1;
  const std::vector<double> t{1.0, 2.0, 3.0};
  const ObservationSet obs = complete_grid(pts, t);
  EXPECT_EQ(obs.size(), 4u);
  EXPECT_EQ(obs.num_observed(), 3u);
  EXPECT_EQ(obs.num_imaginary(), 1u);
  EXPECT_FALSE(obs.observed(obs.grid().linear_index(std::vector<std::size_t>{0, 1})));
}

TEST(CompleteGrid, FullCoverage) {
  Eigen::MatrixXd pts(4, 2);
  pts << 0, 0, 1, 0, 0, 1, 1, 1;
  const ObservationSet obs = complete_grid(pts, std::vector<double>{1, 2, 3, 4});
  EXPECT_EQ(obs.num_imaginary(), 0u);
  EXPECT_TRUE(std::all_of(obs.mask().begin(), obs.mask().end(), [](auto m) { return m != 0; }));
  EXPECT_EQ(obs.values(), (Eigen::Vector4d(1, 2, 3, 4)));
}

TEST(CompleteGrid, RandomSubsampleMatchesMaskAndTargets) {
  std::mt19937_64 rng(3);
  std::vector<std::size_t> nodes(100);
  std::iota(nodes.begin(), nodes.end(), 0);
  std::shuffle(nodes.begin(), nodes.end(), rng);
  nodes.resize(60);
  Eigen::MatrixXd pts(60, 2);
  std::vector<double> targets;
  for (Eigen::Index r = 0; r < 60; ++r) {
    const std::size_t n = nodes[static_cast<std::size_t>(r)];
    pts(r, 0) = static_cast<double>(n % 10);
    pts(r, 1) = static_cast<double>(n / 10);
    targets.push_back(0.5 * static_cast<double>(n) + 1.0);
  }
  std::vector<double> axis(10);
  std::iota(axis.begin(), axis.end(), 0.0);
  const ObservationSet obs = complete_grid(pts, targets, std::vector<std::vector<double>>{axis, axis});
  EXPECT_EQ(obs.num_observed(), 60u);
  EXPECT_EQ(obs.num_imaginary(), 40u);
  const std::set<std::size_t> chosen(nodes.begin(), nodes.end());
  for (std::size_t n = 0; n < 100; ++n) {
    EXPECT_EQ(obs.observed(n), chosen.count(n) == 1) << n;
    if (chosen.count(n)) EXPECT_EQ(obs.values()[static_cast<Eigen::Index>(n)], 0.5 * static_cast<double>(n) + 1.0);
  }
  Eigen::VectorXd expected(60);
  std::vector<std::size_t> sorted(nodes);
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < 60; ++i) expected[static_cast<Eigen::Index>(i)] = 0.5 * static_cast<double>(sorted[i]) + 1.0;
  EXPECT_EQ(obs.observed_values(), expected);
}

TEST(CompleteGrid, RejectsDuplicatesAndOffGridPoints) {
  Eigen::MatrixXd dup(3, 1);
  dup << 0.5, 1.0, 0.5;
  EXPECT_THROW(complete_grid(dup, std::vector<double>{1, 2, 3}), DuplicateError);

  Eigen::MatrixXd off(1, 1);
  off << 0.5;
  EXPECT_THROW(complete_grid(off, std::vector<double>{1}, std::vector<std::vector<double>>{{0.0, 1.0}}),
               OffGridError);
}

TEST(CompleteGrid, ExplicitAxesDensify) {
  Eigen::MatrixXd pts(2, 1);
  pts << 0.0, 3.0;
  const ObservationSet obs =
      complete_grid(pts, std::vector<double>{1, 2}, std::vector<std::vector<double>>{{0, 1, 2, 3}});
  EXPECT_EQ(obs.size(), 4u);
  EXPECT_EQ(obs.num_observed(), 2u);
  EXPECT_TRUE(obs.observed(3));
}

TEST(GridIo, MaskRunLengthRoundTrip) {
  std::mt19937_64 rng(1);
  std::bernoulli_distribution coin(0.3);
  std::vector<std::uint8_t> mask(257);
  for (auto& m : mask) m = coin(rng);
  mask[0] = 1;
  const auto rle = encode_mask_rle(mask);
  EXPECT_EQ(decode_mask_rle(rle, mask.size()), mask);
  EXPECT_THROW(decode_mask_rle(rle, mask.size() + 1), InputError);
}

TEST(GridIo, ObservationSetRoundTripBinaryAndCsv) {
  const Grid g({{0.0, 0.5, 2.0}, {1.0, 2.0}});
  Eigen::VectorXd v(6);
  v << 0.1, -2.0, 1e-17, 3.25, 4.0, -0.0;
  const ObservationSet obs(g, v, {1, 1, 0, 1, 1, 0});
  const auto dir = std::filesystem::temp_directory_path() / "gpatt_grid_io_test";
  std::filesystem::create_directories(dir);
  for (auto enc : {ValueEncoding::f64le, ValueEncoding::csv}) {
    const auto header = dir / (enc == ValueEncoding::csv ? "obs_csv.json" : "obs_bin.json");
    write_observation_set(header, obs, enc);
    const ObservationSet back = read_observation_set(header);
    EXPECT_EQ(back.grid(), g);
    EXPECT_EQ(back.mask(), obs.mask());
    EXPECT_EQ(back.values(), obs.values());
  }
  std::filesystem::remove_all(dir);
}
