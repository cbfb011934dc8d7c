#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "gpatt/commands.hpp"
#include "gpatt/errors.hpp"
#include "gpatt/job.hpp"
#include "gpatt/manifest.hpp"
#include "gpatt/mask.hpp"
#include "gpatt/raster.hpp"
#include "gpatt/stress.hpp"

using namespace gpatt;
using namespace gpatt::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("gpatt_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  return nlohmann::json::parse(in);
}

Raster smooth_image(std::size_t w, std::size_t h, std::size_t channels) {
  Raster r{w, h, channels, std::vector<std::uint8_t>(w * h * channels)};
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t c = 0; c < channels; ++c)
        r.at(x, y, c) = static_cast<std::uint8_t>(
            std::lround(128 + 60 * std::cos(0.5 * static_cast<double>(x) + c) * std::cos(0.4 * static_cast<double>(y))));
  return r;
}

TrainConfig quick_config() {
  TrainConfig cfg;
  cfg.A = 2;
  cfg.restarts = 1;
  cfg.max_opt_iter = 15;
  cfg.seed = 3;
  return cfg;
}

}  // namespace

TEST(Raster, PgmAndPpmRoundTrip) {
  const fs::path dir = scratch("pnm");
  for (std::size_t channels : {1u, 3u}) {
    const Raster r = smooth_image(7, 5, channels);
    const fs::path p = dir / (channels == 1 ? "a.pgm" : "a.ppm");
    write_pnm(p, r);
    const Raster back = read_pnm(p);
    EXPECT_EQ(back.width, 7u);
    EXPECT_EQ(back.height, 5u);
    EXPECT_EQ(back.channels, channels);
    EXPECT_EQ(back.data, r.data);
  }
}

TEST(Raster, ReadsCommentsAndRejectsWideMaxval) {
  const fs::path dir = scratch("pnm_header");
  {
    std::ofstream out(dir / "c.pgm", std::ios::binary);
    out << "P5\n# comment\n2 1\n255\n";
    out.put(static_cast<char>(10)).put(static_cast<char>(200));
  }
  const Raster r = read_pnm(dir / "c.pgm");
  EXPECT_EQ(r.at(0, 0), 10);
  EXPECT_EQ(r.at(1, 0), 200);
  {
    std::ofstream out(dir / "w.pgm", std::ios::binary);
    out << "P5 1 1 65535\n";
    out.put(0).put(0);
  }
  EXPECT_THROW(read_pnm(dir / "w.pgm"), InputError);
  EXPECT_THROW(read_pnm(dir / "missing.pgm"), InputError);
}

TEST(Raster, ChannelValuesAreClampedAndRounded) {
  Raster r{2, 1, 1, {0, 0}};
  r.set_channel(0, Eigen::Vector2d(-4.0, 254.6));
  EXPECT_EQ(r.at(0, 0), 0);
  EXPECT_EQ(r.at(1, 0), 255);
  EXPECT_DOUBLE_EQ(r.channel(0)[1], 255.0);
}

TEST(CsvGrid, RoundTripWithMissingCells) {
  const fs::path dir = scratch("csv");
  {
    std::ofstream out(dir / "g.csv");
    out << "1.5,,3\nnan,5,6\n";
  }
  const CsvGrid g = read_csv_grid(dir / "g.csv");
  EXPECT_EQ(g.width, 3u);
  EXPECT_EQ(g.height, 2u);
  EXPECT_EQ(g.present, (std::vector<std::uint8_t>{1, 0, 1, 0, 1, 1}));
  EXPECT_DOUBLE_EQ(g.values[5], 6.0);

  Eigen::VectorXd v(6);
  v << 0.1, 1.0 / 3.0, -2.0, 1e-300, 7.0, 8.5;
  write_csv_grid(dir / "w.csv", 3, 2, v);
  const CsvGrid back = read_csv_grid(dir / "w.csv");
  for (Eigen::Index i = 0; i < 6; ++i) EXPECT_EQ(back.values[i], v[i]);
}

TEST(Mask, RectanglesAndRastersUnion) {
  const fs::path dir = scratch("mask");
  Raster m{4, 3, 1, std::vector<std::uint8_t>(12, 255)};
  m.at(3, 2) = 0;
  write_pnm(dir / "m.pgm", m);
  const auto mask = resolve_mask({"rect:0,0,2,1", (dir / "m.pgm").string()}, 4, 3);
  const std::vector<std::uint8_t> expected{0, 0, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0};
  EXPECT_EQ(mask, expected);
  EXPECT_EQ(masked_indices(mask), (std::vector<std::size_t>{0, 1, 11}));
}

TEST(Mask, RejectsBadSpecs) {
  EXPECT_THROW(resolve_mask({"rect:0,0,5,1"}, 4, 3), InputError);
  EXPECT_THROW(resolve_mask({"rect:2,0,1,1"}, 4, 3), InputError);
  EXPECT_THROW(resolve_mask({"rect:1,2"}, 4, 3), InputError);
  const fs::path dir = scratch("mask_size");
  write_pnm(dir / "m.pgm", Raster{2, 2, 1, std::vector<std::uint8_t>(4, 0)});
  EXPECT_THROW(resolve_mask({(dir / "m.pgm").string()}, 4, 3), InputError);
}

TEST(Mask, CenteredHoleCoversFraction) {
  const auto mask = centered_hole(20, 20, 0.25);
  EXPECT_EQ(masked_indices(mask).size(), 100u);
  EXPECT_EQ(mask[0], 1);
  EXPECT_EQ(mask[10 * 20 + 10], 0);
  EXPECT_TRUE(masked_indices(centered_hole(20, 20, 0.0)).empty());
}

TEST(Manifest, Sha256OfKnownContent) {
  const fs::path dir = scratch("sha");
  {
    std::ofstream out(dir / "abc.txt", std::ios::binary);
    out << "abc";
  }
  EXPECT_EQ(sha256_file(dir / "abc.txt"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Job, ShapeAndJsonMerge) {
  EXPECT_EQ(parse_shape("30x20x4"), (std::vector<std::size_t>{30, 20, 4}));
  EXPECT_THROW(parse_shape("30x1"), InputError);
  EXPECT_THROW(parse_shape("axb"), InputError);

  Job job;
  job.merge_json(nlohmann::json::parse(R"({"A": 7, "train": {"restarts": 2}, "kernel": "se",
                                            "masks": ["rect:0,0,1,1"], "out": "x"})"));
  EXPECT_EQ(job.train.A, 7u);
  EXPECT_EQ(job.train.restarts, 2u);
  EXPECT_EQ(job.train.family, Family::squared_exponential);
  EXPECT_EQ(job.masks.size(), 1u);
  Job again;
  again.merge_json(job.to_json());
  EXPECT_EQ(again.to_json(), job.to_json());
}

TEST(RunJob, ValidationErrorExitsTwo) {
  Job job;
  job.command = Command::inpaint;
  job.out = scratch("exit2");
  std::ostringstream log;
  EXPECT_EQ(run_job(job, log), 2);
}

TEST(RunJob, RunErrorExitsOneWithIncompleteManifest) {
  const fs::path dir = scratch("exit1");
  write_pnm(dir / "img.pgm", smooth_image(6, 6, 1));
  Job job;
  job.command = Command::inpaint;
  job.inputs = {dir / "img.pgm"};
  job.masks = {"rect:0,0,9,9"};
  job.train = quick_config();
  job.out = dir / "out";
  std::ostringstream log;
  EXPECT_EQ(run_job(job, log), 1);
  const nlohmann::json m = read_json(job.out / "manifest.json");
  EXPECT_FALSE(m.at("complete").get<bool>());
  EXPECT_TRUE(m.contains("error"));
}

TEST(RunJob, UnmaskedImageIsReproduced) {
  const fs::path dir = scratch("identity");
  const Raster img = smooth_image(12, 10, 1);
  write_pnm(dir / "img.pgm", img);
  Job job;
  job.command = Command::inpaint;
  job.inputs = {dir / "img.pgm"};
  job.train = quick_config();
  job.train.max_opt_iter = 60;
  job.out = dir / "out";
  std::ostringstream log;
  ASSERT_EQ(run_job(job, log), 0) << log.str();
  const Raster out = read_pnm(job.out / "reconstruction.pgm");
  int worst = 0;
  for (std::size_t i = 0; i < img.data.size(); ++i) worst = std::max(worst, std::abs(int(out.data[i]) - int(img.data[i])));
  EXPECT_LE(worst, 2);

  const nlohmann::json m = read_json(job.out / "manifest.json");
  EXPECT_TRUE(m.at("complete").get<bool>());
  EXPECT_EQ(m.at("inputs").at(0).at("sha256").get<std::string>(), sha256_file(dir / "img.pgm"));
  for (const auto& a : m.at("artifacts")) EXPECT_TRUE(fs::exists(job.out / a.get<std::string>())) << a;
}

TEST(RunJob, RgbInpaintEmitsThreeReports) {
  const fs::path dir = scratch("rgb");
  write_pnm(dir / "img.ppm", smooth_image(8, 8, 3));
  Job job;
  job.command = Command::inpaint;
  job.inputs = {dir / "img.ppm"};
  job.masks = {"rect:3,3,5,5"};
  job.train = quick_config();
  job.train.max_opt_iter = 5;
  job.out = dir / "out";
  std::ostringstream log;
  ASSERT_EQ(run_job(job, log), 0) << log.str();
  std::size_t reports = 0;
  for (const auto& e : fs::directory_iterator(job.out))
    if (e.path().filename().string().rfind("train_report_", 0) == 0) ++reports;
  EXPECT_EQ(reports, 3u);
  EXPECT_TRUE(fs::exists(job.out / "inpainted.ppm"));
  const nlohmann::json metrics = read_json(job.out / "metrics.json");
  EXPECT_EQ(metrics.at("channels").size(), 3u);
}

TEST(RunJob, TrainThenPredictOnCsvGrid) {
  const fs::path dir = scratch("train_predict");
  Eigen::VectorXd v(100);
  for (Eigen::Index i = 0; i < 100; ++i) v[i] = std::sin(0.7 * static_cast<double>(i % 10)) + 0.1 * static_cast<double>(i / 10);
  write_csv_grid(dir / "g.csv", 10, 10, v);
  std::ostringstream log;

  Job train_job;
  train_job.command = Command::train;
  train_job.inputs = {dir / "g.csv"};
  train_job.masks = {"rect:4,4,6,6"};
  train_job.train = quick_config();
  train_job.out = dir / "train";
  ASSERT_EQ(run_job(train_job, log), 0) << log.str();
  EXPECT_TRUE(fs::exists(train_job.out / "spectrum_dim0.csv"));

  Job predict_job = train_job;
  predict_job.command = Command::predict;
  predict_job.report = train_job.out / "train_report.json";
  predict_job.truth = dir / "g.csv";
  predict_job.out = dir / "predict";
  ASSERT_EQ(run_job(predict_job, log), 0) << log.str();
  const nlohmann::json m = read_json(predict_job.out / "metrics.json");
  EXPECT_EQ(m.at("n_test").get<std::size_t>(), 4u);
  EXPECT_TRUE(std::isfinite(m.at("smse").get<double>()));
}

TEST(Stress, RuntimeSlopeFromSmallLadder) {
  EXPECT_NEAR(loglog_slope({10, 100, 1000}, {2, 20, 200}), 1.0, 1e-12);
  StressOptions opt;
  opt.sizes = {100, 400};
  opt.components = {2};
  opt.repeats = 1;
  const RuntimeReport r = run_runtime_suite(opt, quick_config(), nullptr);
  EXPECT_EQ(r.rows.size(), 2u);
  EXPECT_TRUE(std::isfinite(r.slopes.at(2)));
}

TEST(Stress, HolesizeZeroIsScoredInSample) {
  StressOptions opt;
  opt.suite = "holesize";
  opt.texture_size = 12;
  opt.holes = {0.0, 0.25};
  opt.baselines = {"se"};
  opt.include_gpatt = false;
  const HolesizeReport r = run_holesize_suite(opt, quick_config(), nullptr);
  ASSERT_EQ(r.rows.size(), 2u);
  EXPECT_TRUE(r.at("se", 0.0).in_sample);
  EXPECT_EQ(r.at("se", 0.0).metrics.n_test, 144u);
  EXPECT_FALSE(r.at("se", 0.25).in_sample);
  const auto msll = r.msll("se");
  EXPECT_LE(msll[0], msll[1]);
}
