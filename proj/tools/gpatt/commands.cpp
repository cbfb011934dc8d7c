#include "gpatt/commands.hpp"

#include <cmath>
#include <fstream>
#include <future>
#include <numeric>
#include <ostream>

#include <nlohmann/json.hpp>

#include "gpatt/errors.hpp"
#include "gpatt/eval.hpp"
#include "gpatt/grid_io.hpp"
#include "gpatt/inference.hpp"
#include "gpatt/kernel_expr.hpp"
#include "gpatt/mask.hpp"
#include "gpatt/raster.hpp"
#include "gpatt/stress.hpp"

namespace gpatt::cli {
namespace {

namespace fs = std::filesystem;

struct Normalization {
  double mean = 0.0;
  double std = 1.0;

  static Normalization of(const ObservationSet& y) {
    const Eigen::VectorXd v = y.observed_values();
    const double m = v.mean();
    const double sd = std::sqrt((v.array() - m).square().mean());
    return {m, sd > 0.0 ? sd : 1.0};
  }
  Eigen::VectorXd apply(const Eigen::VectorXd& v) const { return (v.array() - mean) / std; }
  Eigen::VectorXd undo(const Eigen::VectorXd& v) const { return v.array() * std + mean; }
  nlohmann::json to_json() const { return {{"mean", mean}, {"std", std}}; }
};

ObservationSet normalized(const ObservationSet& y, const Normalization& n) {
  Eigen::VectorXd v = n.apply(y.values());
  for (std::size_t i = 0; i < y.size(); ++i)
    if (!y.observed(i)) v[static_cast<Eigen::Index>(i)] = 0.0;
  return ObservationSet(y.grid(), std::move(v), y.mask());
}

void write_text(const fs::path& dir, const std::string& name, const std::string& text, Manifest& manifest) {
  std::ofstream out(dir / name);
  out << text;
  if (!out) throw InputError("failed writing " + (dir / name).string());
  manifest.add_artifact(name);
}

void write_json(const fs::path& dir, const std::string& name, const nlohmann::json& doc, Manifest& manifest) {
  write_text(dir, name, doc.dump(2) + "\n", manifest);
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return v;
}

std::vector<double> half_extent_lags(const Grid& g, std::size_t p) { return linspace(0.0, 0.5 * g.range(p), 64); }

void write_spectra(const fs::path& dir, const std::string& prefix, const TrainReport& report,
                   const std::vector<double>& nyquist, std::size_t points, Manifest& manifest) {
  const ProductKernel& k = report.kernel;
  for (std::size_t p = 0; p < k.dims(); ++p) {
    if (k.factor(p).family() != Family::spectral_mixture) continue;
    const SMKernel1D sm = unpack_sm(k.factor(p), k.factor_params(report.final_hypers, p));
    const auto freqs = linspace(0.0, nyquist.at(p), points);
    const Eigen::VectorXd logS = export_spectrum(sm, freqs);
    std::ostringstream csv;
    csv.precision(17);
    csv << "freq,log_density\n";
    for (std::size_t i = 0; i < freqs.size(); ++i) csv << freqs[i] << ',' << logS[static_cast<Eigen::Index>(i)] << '\n';
    write_text(dir, prefix + "spectrum_dim" + std::to_string(p) + ".csv", csv.str(), manifest);
  }
}

nlohmann::json report_document(const TrainReport& report, const Normalization& norm, const Grid& grid) {
  std::vector<double> nyquist, range;
  for (std::size_t p = 0; p < grid.dims(); ++p) {
    nyquist.push_back(grid.nyquist(p));
    range.push_back(grid.range(p));
  }
  return {{"normalization", norm.to_json()}, {"nyquist", nyquist}, {"range", range}, {"report", report.to_json()}};
}

struct ChannelResult {
  TrainReport report;
  Normalization norm;
  Eigen::VectorXd mean;  ///< de-normalized, every grid node
  std::optional<MetricReport> metrics;
};

ChannelResult fit_channel(const ObservationSet& raw, const Eigen::VectorXd& truth, const TrainConfig& config) {
  ChannelResult out;
  out.norm = Normalization::of(raw);
  const ObservationSet y = normalized(raw, out.norm);
  out.report = train(y, config);
  const GridPosterior post(out.report.kernel, out.report.final_hypers, y, config.predict_pcg());
  out.mean = out.norm.undo(post.mean());
  const auto test = masked_indices(raw.mask());
  if (!test.empty())
    out.metrics = evaluate_holdout(post, out.norm.apply(truth), test, 0.0, 1.0, config.variance_budget, config.seed);
  return out;
}

std::string pnm_ext(std::size_t channels) { return channels == 1 ? ".pgm" : ".ppm"; }

}  // namespace

void run_train(const Job& job, Manifest& manifest, std::ostream& log) {
  manifest.add_input(job.inputs.front());
  const LoadedData data = load_observations(job.inputs.front(), job.format, job.masks);
  const Normalization norm = Normalization::of(data.obs);
  const ObservationSet y = normalized(data.obs, norm);
  log << "training " << to_string(job.train.family) << " on " << y.num_observed() << " of " << y.size()
      << " grid nodes" << std::endl;
  const TrainReport report = train(y, job.train);
  log << "final lml " << report.final_lml << (report.converged ? "" : " (not converged)") << std::endl;
  const nlohmann::json doc = report_document(report, norm, y.grid());
  write_json(job.out, "train_report.json", doc, manifest);
  write_spectra(job.out, "", report, doc.at("nyquist").get<std::vector<double>>(), job.spectrum_points, manifest);

  std::optional<std::vector<KernelExpr>> truth;
  if (job.truth_kernel) truth = per_axis_kernels(read_json_arg(*job.truth_kernel), y.grid().dims());
  nlohmann::json recovery{{"discrepancy", nlohmann::json::array()}};
  for (std::size_t p = 0; p < y.grid().dims(); ++p) {
    KernelSlice s = learned_slice(report.kernel, report.final_hypers, p, half_extent_lags(y.grid(), p));
    if (truth) {
      const KernelExpr& k = (*truth)[p];
      const double k0 = k(0.0);
      std::vector<double> tv;
      double worst = 0.0;
      for (std::size_t i = 0; i < s.taus.size(); ++i) {
        tv.push_back(k(s.taus[i]) / k0);
        worst = std::max(worst, std::abs(tv.back() - s.learned_values[i]));
      }
      s.true_values = std::move(tv);
      recovery["discrepancy"].push_back(worst);
    }
    std::ostringstream csv;
    s.write_csv(csv);
    write_text(job.out, "kernel_dim" + std::to_string(p) + ".csv", csv.str(), manifest);
  }
  if (truth) {
    if (job.truth_kernel->front() != '{' && job.truth_kernel->front() != '[') manifest.add_input(*job.truth_kernel);
    write_json(job.out, "recovery.json", recovery, manifest);
  }
}

void run_predict(const Job& job, Manifest& manifest, std::ostream& log) {
  manifest.add_input(job.inputs.front());
  manifest.add_input(*job.report);
  const nlohmann::json doc = read_json_arg(job.report->string());
  const TrainReport report = TrainReport::from_json(doc.at("report"));
  const Normalization norm{doc.at("normalization").at("mean").get<double>(), doc.at("normalization").at("std").get<double>()};
  const LoadedData data = load_observations(job.inputs.front(), job.format, job.masks);
  const ObservationSet y = normalized(data.obs, norm);
  if (y.grid().dims() != report.kernel.dims()) throw InputError("input dimension does not match the trained kernel");

  const GridPosterior post(report.kernel, report.final_hypers, y, job.train.predict_pcg());
  const Eigen::VectorXd mean = norm.undo(post.mean());
  std::vector<std::size_t> missing = masked_indices(y.mask());
  if (missing.size() > job.train.variance_budget) {
    std::vector<std::size_t> keep;
    std::mt19937_64 rng(job.train.seed);
    std::sample(missing.begin(), missing.end(), std::back_inserter(keep), job.train.variance_budget, rng);
    missing = std::move(keep);
  }
  const Eigen::VectorXd latent = post.variance(missing);
  std::vector<double> variance(y.size(), std::nan(""));
  for (std::size_t i = 0; i < missing.size(); ++i)
    variance[missing[i]] = (latent[static_cast<Eigen::Index>(i)] + report.final_hypers.noise_var()) * norm.std * norm.std;
  log << "predicted " << y.size() << " nodes, variance at " << missing.size() << std::endl;

  std::ostringstream csv;
  csv.precision(17);
  csv << "index";
  for (std::size_t p = 0; p < y.grid().dims(); ++p) csv << ",x" << p;
  csv << ",observed,mean,variance\n";
  for (std::size_t i = 0; i < y.size(); ++i) {
    csv << i;
    for (double c : y.grid().point(i)) csv << ',' << c;
    csv << ',' << int{y.observed(i)} << ',' << mean[static_cast<Eigen::Index>(i)] << ',';
    if (!std::isnan(variance[i])) csv << variance[i];
    csv << '\n';
  }
  write_text(job.out, "predictions.csv", csv.str(), manifest);
  if (data.width) {
    write_csv_grid(job.out / "mean.csv", data.width, data.height, mean);
    manifest.add_artifact("mean.csv");
  }
  if (job.truth) {
    manifest.add_input(*job.truth);
    const LoadedData t = load_observations(*job.truth, job.format, {});
    if (t.obs.size() != y.size() || t.obs.num_imaginary() != 0) throw InputError("truth must be a complete grid of the same shape");
    const auto test = masked_indices(y.mask());
    if (test.empty()) throw InputError("metrics need at least one held-out node");
    const MetricReport m =
        evaluate_holdout(post, norm.apply(t.obs.values()), test, 0.0, 1.0, job.train.variance_budget, job.train.seed);
    write_json(job.out, "metrics.json", m.to_json(), manifest);
  }
}

void run_inpaint(const Job& job, Manifest& manifest, std::ostream& log) {
  manifest.add_input(job.inputs.front());
  for (const auto& m : job.masks)
    if (m.rfind("rect:", 0) != 0) manifest.add_input(m);
  const Raster image = read_pnm(job.inputs.front());
  const auto mask = resolve_mask(job.masks, image.width, image.height);
  if (std::none_of(mask.begin(), mask.end(), [](auto v) { return v != 0; }))
    throw InputError("mask leaves no training pixels");
  const Grid grid = regular_grid(std::vector<std::size_t>{image.width, image.height});
  const std::vector<std::string> names =
      image.channels == 1 ? std::vector<std::string>{"gray"} : std::vector<std::string>{"red", "green", "blue"};

  std::vector<std::future<ChannelResult>> futures;
  for (std::size_t c = 0; c < image.channels; ++c) {
    futures.push_back(std::async(std::launch::async, [&, c] {
      const Eigen::VectorXd truth = image.channel(c);
      Eigen::VectorXd v = truth;
      for (std::size_t i = 0; i < mask.size(); ++i)
        if (!mask[i]) v[static_cast<Eigen::Index>(i)] = 0.0;
      return fit_channel(ObservationSet(grid, std::move(v), mask), truth, job.train);
    }));
  }

  Raster recon = image, filled = image;
  nlohmann::json metrics{{"channels", nlohmann::json::array()}};
  std::string first_error;
  bool all_ok = true;
  double smse_sum = 0.0, msll_sum = 0.0;
  for (std::size_t c = 0; c < image.channels; ++c) {
    try {
      const ChannelResult r = futures[c].get();
      log << names[c] << ": lml " << r.report.final_lml << (r.report.converged ? "" : " (not converged)") << std::endl;
      write_json(job.out, "train_report_" + names[c] + ".json", report_document(r.report, r.norm, grid), manifest);
      std::vector<double> nyquist{grid.nyquist(0), grid.nyquist(1)};
      write_spectra(job.out, names[c] + "_", r.report, nyquist, job.spectrum_points, manifest);
      recon.set_channel(c, r.mean);
      Eigen::VectorXd f = image.channel(c);
      for (std::size_t i = 0; i < mask.size(); ++i)
        if (!mask[i]) f[static_cast<Eigen::Index>(i)] = r.mean[static_cast<Eigen::Index>(i)];
      filled.set_channel(c, f);
      if (r.metrics) {
        nlohmann::json m = r.metrics->to_json();
        m["channel"] = names[c];
        metrics["channels"].push_back(m);
        smse_sum += r.metrics->smse;
        msll_sum += r.metrics->msll;
      }
    } catch (const std::exception& e) {
      all_ok = false;
      if (first_error.empty()) first_error = names[c] + ": " + e.what();
      log << names[c] << " failed: " << e.what() << std::endl;
    }
  }
  if (!all_ok) throw TrainingError(first_error);

  const std::string ext = pnm_ext(image.channels);
  write_pnm(job.out / ("reconstruction" + ext), recon);
  manifest.add_artifact("reconstruction" + ext);
  write_pnm(job.out / ("inpainted" + ext), filled);
  manifest.add_artifact("inpainted" + ext);
  if (!metrics["channels"].empty()) {
    const auto n = static_cast<double>(metrics["channels"].size());
    metrics["mean_smse"] = smse_sum / n;
    metrics["mean_msll"] = msll_sum / n;
    write_json(job.out, "metrics.json", metrics, manifest);
  }
}

void run_synth(const Job& job, Manifest& manifest, std::ostream& log) {
  const nlohmann::json kdoc = read_json_arg(job.kernel);
  if (job.kernel.front() != '{' && job.kernel.front() != '[') manifest.add_input(job.kernel);
  const auto per_axis = per_axis_kernels(kdoc, job.grid.size());
  const Grid grid = regular_grid(job.grid);
  std::mt19937_64 rng(job.train.seed);
  const ObservationSet draw = sample_grid_gp(per_axis, grid, job.noise_var, rng);
  log << "sampled " << grid.size() << " nodes" << std::endl;
  write_observation_set(job.out / "synth.json", draw, ValueEncoding::f64le);
  manifest.add_artifact("synth.json");
  manifest.add_artifact("synth.values.bin");
  write_json(job.out, "kernel.json", kdoc, manifest);
  if (grid.dims() == 2) {
    write_csv_grid(job.out / "synth.csv", job.grid[0], job.grid[1], draw.values());
    manifest.add_artifact("synth.csv");
  }
}

void run_spectrum(const Job& job, Manifest& manifest, std::ostream& log) {
  manifest.add_input(*job.report);
  const nlohmann::json doc = read_json_arg(job.report->string());
  const TrainReport report = TrainReport::from_json(doc.at("report"));
  if (report.kernel.factor(0).family() != Family::spectral_mixture)
    throw InputError("spectrum needs a spectral-mixture report");
  write_spectra(job.out, "", report, doc.at("nyquist").get<std::vector<double>>(), job.spectrum_points, manifest);
  log << "wrote " << report.kernel.dims() << " spectra" << std::endl;
}

void run_stress(const Job& job, Manifest& manifest, std::ostream& log) {
  std::ostringstream csv;
  if (job.stress.suite == "runtime") {
    const RuntimeReport r = run_runtime_suite(job.stress, job.train, &log);
    r.write_csv(csv);
    write_text(job.out, "runtime.csv", csv.str(), manifest);
    write_json(job.out, "runtime.json", r.to_json(), manifest);
  } else {
    const HolesizeReport r = run_holesize_suite(job.stress, job.train, &log);
    r.write_csv(csv);
    write_text(job.out, "holesize.csv", csv.str(), manifest);
    write_json(job.out, "holesize.json", r.to_json(), manifest);
  }
}

int run_job(const Job& job, std::ostream& log) {
  Manifest manifest(to_string(job.command), job.to_json(), job.train.seed);
  try {
    job.validate();
    fs::create_directories(job.out);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << std::endl;
    return 2;
  }
  try {
    switch (job.command) {
      case Command::train: run_train(job, manifest, log); break;
      case Command::predict: run_predict(job, manifest, log); break;
      case Command::inpaint: run_inpaint(job, manifest, log); break;
      case Command::synth: run_synth(job, manifest, log); break;
      case Command::spectrum: run_spectrum(job, manifest, log); break;
      case Command::stress: run_stress(job, manifest, log); break;
    }
    manifest.write(job.out, true);
    return 0;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << std::endl;
    try {
      manifest.write(job.out, false, e.what());
    } catch (const std::exception&) {
    }
    return 1;
  }
}

}  // namespace gpatt::cli
