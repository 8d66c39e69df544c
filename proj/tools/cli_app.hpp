#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "wrfcm/core.hpp"
#include "wrfcm/fcm.hpp"
#include "wrfcm/image_io.hpp"
#include "wrfcm/metrics.hpp"
#include "wrfcm/noise.hpp"
#include "wrfcm/synthetic.hpp"
#include "wrfcm/wrfcm.hpp"

namespace wrfcm::cli {

namespace fs = std::filesystem;

struct CommonSolverFlags {
  int clusters = 4;
  double m = 2.0;
  double eps = 1e-6;
  double xi = 0.0008;
  double phi = 7.5;
  int window = 1;
  int max_iter = 200;
  std::uint64_t seed = 1;

  void add_to(CLI::App& app) {
    app.add_option("--c", clusters, "number of clusters");
    app.add_option("--m", m, "fuzzification exponent (> 1)");
    app.add_option("--eps", eps, "convergence threshold on the partition change");
    app.add_option("--xi", xi, "residual weight decay rate");
    app.add_option("--phi", phi, "fidelity scale; beta = phi * channel stddev / 100");
    app.add_option("--window", window, "window radius (1 -> 3x3)");
    app.add_option("--max-iter", max_iter, "iteration cap");
    app.add_option("--seed", seed, "RNG seed");
  }

  SolverConfig to_config() const {
    SolverConfig config;
    config.clusters = clusters;
    config.m = m;
    config.epsilon = eps;
    config.xi = xi;
    config.phi = phi;
    config.window_radius = window;
    config.max_iter = max_iter;
    config.seed = seed;
    return config;
  }
};

struct NoiseFlags {
  bool poisson = false;
  double sigma = 0.0;
  double impulse_p = 0.0;
  std::string impulse_kind = "random";
  std::uint64_t seed = 1;

  void add_to(CLI::App& app, bool with_seed) {
    app.add_flag("--poisson", poisson, "apply signal-dependent Poisson noise");
    app.add_option("--sigma", sigma, "Gaussian noise standard deviation");
    app.add_option("--impulse-p", impulse_p, "impulse replacement probability");
    app.add_option("--impulse-kind", impulse_kind,
                   "impulse type: random | saltpepper")
        ->check(CLI::IsMember({"random", "saltpepper"}));
    if (with_seed) app.add_option("--seed", seed, "RNG seed");
  }

  NoiseSpec to_spec() const {
    NoiseSpec spec;
    spec.poisson = poisson;
    spec.gaussian_sigma = sigma;
    spec.impulse_prob = impulse_p;
    spec.impulse_kind = impulse_kind == "saltpepper" ? ImpulseKind::kSaltPepper
                                                     : ImpulseKind::kRandomValued;
    spec.seed = seed;
    return spec;
  }
};

inline nlohmann::ordered_json metrics_json(const MetricReport& rep, int iterations,
                                           double wall_time_ms) {
  nlohmann::ordered_json j;
  j["sa"] = rep.sa;
  j["sds_macro"] = rep.sds_macro;
  j["mcc_macro"] = rep.mcc_macro;
  j["per_class"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < rep.per_class_sds.size(); ++i) {
    j["per_class"].push_back({{"class", i + 1},
                              {"sds", rep.per_class_sds[i]},
                              {"mcc", rep.per_class_mcc[i]}});
  }
  j["iterations"] = iterations;
  j["wall_time_ms"] = wall_time_ms;
  return j;
}

/// |residual| stretched over the full 8-bit range for inspection.
inline ImageTensor residual_visualization(const ResidualField& r, int width,
                                          int height) {
  ImageTensor out(width, height, r.channels);
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (double v : r.r) {
    lo = std::min(lo, std::abs(v));
    hi = std::max(hi, std::abs(v));
  }
  const double span = hi - lo;
  for (std::size_t idx = 0; idx < r.r.size(); ++idx) {
    out.data[idx] = span > 0.0 ? (std::abs(r.r[idx]) - lo) / span * 255.0 : 0.0;
  }
  return out;
}

inline void write_residual_histogram(const ResidualField& r, int bins,
                                     const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open file for writing");
  out << "channel,bin_low,bin_high,count\n";
  for (int l = 0; l < r.channels; ++l) {
    double lo = 0.0, hi = 0.0;
    for (int j = 0; j < r.pixels; ++j) {
      lo = std::min(lo, r.at(j, l));
      hi = std::max(hi, r.at(j, l));
    }
    if (hi <= lo) hi = lo + 1.0;
    std::vector<long long> counts(bins, 0);
    for (int j = 0; j < r.pixels; ++j) {
      int bin = static_cast<int>((r.at(j, l) - lo) / (hi - lo) * bins);
      bin = std::clamp(bin, 0, bins - 1);
      counts[bin]++;
    }
    char line[128];
    for (int b = 0; b < bins; ++b) {
      std::snprintf(line, sizeof(line), "%d,%.10g,%.10g,%lld\n", l + 1,
                    lo + (hi - lo) * b / bins, lo + (hi - lo) * (b + 1) / bins,
                    counts[b]);
      out << line;
    }
  }
}

struct SegmentArgs {
  std::string input;
  std::string truth;
  std::string algo = "wrfcm";
  std::string out_dir;
  int hist_bins = 0;
  CommonSolverFlags solver;
};

inline int cmd_segment(const SegmentArgs& args) {
  const ImageTensor image = load_image(args.input);
  const SolverConfig config = args.solver.to_config();
  config.validate();

  fs::create_directories(args.out_dir);
  const fs::path dir(args.out_dir);

  const auto t0 = std::chrono::steady_clock::now();
  SolveOutput out;
  if (args.algo == "wrfcm") {
    out = wrfcm_fit(image, config);
  } else {
    FcmResult fcm = fcm_fit(image, config);
    out.u = std::move(fcm.u);
    out.v = std::move(fcm.v);
    out.trace = std::move(fcm.trace);
    out.r = ResidualField(image.pixels(), image.channels, 0.0);
    out.w = WeightField(image.pixels(), image.channels, 1.0);
    out.labels = defuzzify(out.u, image.width, image.height);
    out.segmented = prototype_image(out.labels, out.v);
  }
  const double wall_ms = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - t0)
                             .count();

  save_image(label_map_to_image(out.labels, config.clusters),
             (dir / "labels.png").string());
  save_image(out.segmented, (dir / "segmented.png").string());
  save_image(residual_visualization(out.r, image.width, image.height),
             (dir / "residual.png").string());
  {
    std::ofstream trace_out(dir / "trace.csv");
    if (!trace_out) {
      throw std::runtime_error((dir / "trace.csv").string() +
                               ": cannot open file for writing");
    }
    write_trace_csv(out.trace, trace_out);
  }
  if (args.hist_bins > 0) {
    write_residual_histogram(out.r, args.hist_bins,
                             (dir / "residual_hist.csv").string());
  }

  if (!args.truth.empty()) {
    const LabelMap truth = image_to_label_map(load_image(args.truth), config.clusters);
    const MetricReport rep = report(out.labels, truth, config.clusters);
    const nlohmann::ordered_json j =
        metrics_json(rep, static_cast<int>(out.trace.records.size()), wall_ms);
    std::ofstream json_out(dir / "metrics.json");
    if (!json_out) {
      throw std::runtime_error((dir / "metrics.json").string() +
                               ": cannot open file for writing");
    }
    json_out << j.dump(2) << "\n";
    std::cout << j.dump(2) << "\n";
  }

  std::cerr << "segment: " << out.trace.records.size() << " iterations, "
            << (out.trace.converged ? "converged" : "iteration cap reached") << "\n";
  return 0;
}

struct SynthNoiseArgs {
  std::string input;
  std::string output;
  NoiseFlags noise;
};

inline int cmd_synth_noise(const SynthNoiseArgs& args) {
  const ImageTensor clean = load_image(args.input);
  const CorruptionResult result = corrupt(clean, args.noise.to_spec());
  save_image(result.observed, args.output);  // save clamps to the 8-bit range
  return 0;
}

struct EvaluateArgs {
  std::string pred;
  std::string truth;
  std::string out_json;
  int clusters = 4;
};

inline int cmd_evaluate(const EvaluateArgs& args) {
  const LabelMap pred = image_to_label_map(load_image(args.pred), args.clusters);
  const LabelMap truth = image_to_label_map(load_image(args.truth), args.clusters);
  const MetricReport rep = report(pred, truth, args.clusters);
  const nlohmann::ordered_json j = metrics_json(rep, 0, 0.0);
  std::cout << j.dump(2) << "\n";
  if (!args.out_json.empty()) {
    std::ofstream out(args.out_json);
    if (!out) throw std::runtime_error(args.out_json + ": cannot open file for writing");
    out << j.dump(2) << "\n";
  }
  return 0;
}

struct BenchmarkArgs {
  int width = 256;
  int height = 256;
  std::string pattern = "blocks";
  std::string levels;  // comma-separated; empty -> evenly spaced
  std::string phi_sweep;
  std::string seeds = "1";
  std::string out_dir;
  NoiseFlags noise;
  CommonSolverFlags solver;
};

inline std::vector<double> parse_phi_sweep(const std::string& text) {
  double lo = 0.0, hi = 0.0, step = 0.0;
  char colon1 = 0, colon2 = 0;
  std::istringstream in(text);
  if (!(in >> lo >> colon1 >> hi >> colon2 >> step) || colon1 != ':' ||
      colon2 != ':' || step <= 0.0 || hi < lo) {
    throw std::invalid_argument("benchmark: --phi-sweep expects lo:hi:step");
  }
  std::vector<double> values;
  for (double phi = lo; phi <= hi + 1e-12; phi += step) values.push_back(phi);
  return values;
}

inline std::vector<double> parse_number_list(const std::string& text,
                                             const std::string& what) {
  std::vector<double> values;
  std::istringstream in(text);
  std::string token;
  while (std::getline(in, token, ',')) {
    try {
      values.push_back(std::stod(token));
    } catch (const std::exception&) {
      throw std::invalid_argument(what + ": cannot parse '" + token + "'");
    }
  }
  if (values.empty()) throw std::invalid_argument(what + ": empty list");
  return values;
}

inline int cmd_benchmark(const BenchmarkArgs& args) {
  SyntheticSpec spec;
  spec.width = args.width;
  spec.height = args.height;
  spec.clusters = args.solver.clusters;
  if (args.pattern == "blocks") {
    spec.geometry = RegionGeometry::kBlocks;
  } else if (args.pattern == "stripes") {
    spec.geometry = RegionGeometry::kStripes;
  } else if (args.pattern == "circles") {
    spec.geometry = RegionGeometry::kCircles;
  } else {
    throw std::invalid_argument("benchmark: unknown pattern '" + args.pattern + "'");
  }
  if (args.levels.empty()) {
    for (int i = 0; i < spec.clusters; ++i) {
      spec.levels.push_back(spec.clusters == 1
                                ? 128.0
                                : std::round(255.0 * i / (spec.clusters - 1)));
    }
  } else {
    spec.levels = parse_number_list(args.levels, "benchmark: --levels");
  }

  const SyntheticImage synth = gen_synthetic(spec);
  fs::create_directories(args.out_dir);
  const fs::path dir(args.out_dir);
  save_image(synth.image, (dir / "clean.png").string());
  save_image(label_map_to_image(synth.truth, spec.clusters),
             (dir / "truth.png").string());

  std::vector<double> phis;
  if (!args.phi_sweep.empty()) {
    phis = parse_phi_sweep(args.phi_sweep);
  } else {
    phis.push_back(args.solver.phi);
  }
  std::vector<std::uint64_t> seeds;
  for (double s : parse_number_list(args.seeds, "benchmark: --seeds")) {
    seeds.push_back(static_cast<std::uint64_t>(s));
  }

  std::ofstream csv(dir / "benchmark.csv");
  if (!csv) {
    throw std::runtime_error((dir / "benchmark.csv").string() +
                             ": cannot open file for writing");
  }
  csv << "phi,seed,algo,sa,sds_macro,mcc_macro,iterations\n";
  char line[256];

  for (const std::uint64_t seed : seeds) {
    NoiseSpec noise = args.noise.to_spec();
    noise.seed = seed;
    const CorruptionResult corrupted = corrupt(synth.image, noise);
    save_image(corrupted.observed,
               (dir / ("noisy_seed" + std::to_string(seed) + ".png")).string());

    SolverConfig config = args.solver.to_config();
    config.seed = seed;

    {  // baseline once per seed; phi plays no role there
      FcmResult fcm = fcm_fit(corrupted.observed, config);
      const LabelMap labels = defuzzify(fcm.u, args.width, args.height);
      const MetricReport rep = report(labels, synth.truth, spec.clusters);
      std::snprintf(line, sizeof(line), "0,%llu,fcm,%.6f,%.6f,%.6f,%zu\n",
                    static_cast<unsigned long long>(seed), rep.sa, rep.sds_macro,
                    rep.mcc_macro, fcm.trace.records.size());
      csv << line;
    }
    for (const double phi : phis) {
      config.phi = phi;
      const SolveOutput out = wrfcm_fit(corrupted.observed, config);
      const MetricReport rep = report(out.labels, synth.truth, spec.clusters);
      std::snprintf(line, sizeof(line), "%.6g,%llu,wrfcm,%.6f,%.6f,%.6f,%zu\n", phi,
                    static_cast<unsigned long long>(seed), rep.sa, rep.sds_macro,
                    rep.mcc_macro, out.trace.records.size());
      csv << line;
    }
  }
  return 0;
}

inline int run(int argc, const char* const* argv) {
  CLI::App app{"residual-driven fuzzy c-means image segmentation"};
  app.set_config("--config");
  app.require_subcommand(1);

  SegmentArgs seg;
  CLI::App* segment = app.add_subcommand(
      "segment", "segment an image and write labels/segmented/residual/trace");
  segment->add_option("--input", seg.input, "input image (8-bit PNG or PGM)")
      ->required()
      ->check(CLI::ExistingFile);
  segment->add_option("--truth", seg.truth, "ground-truth label image")
      ->check(CLI::ExistingFile);
  segment->add_option("--algo", seg.algo, "algorithm: fcm | wrfcm")
      ->check(CLI::IsMember({"fcm", "wrfcm"}));
  segment->add_option("--out-dir", seg.out_dir, "output directory")->required();
  segment->add_option("--hist-bins", seg.hist_bins,
                      "if > 0, dump a residual histogram CSV with this many bins");
  seg.solver.add_to(*segment);

  SynthNoiseArgs synth;
  CLI::App* synth_noise =
      app.add_subcommand("synth-noise", "corrupt a clean image with mixed noise");
  synth_noise->add_option("--input", synth.input, "clean input image")
      ->required()
      ->check(CLI::ExistingFile);
  synth_noise->add_option("--output", synth.output, "output image (.png or .pgm)")
      ->required();
  synth.noise.add_to(*synth_noise, true);

  EvaluateArgs eval;
  CLI::App* evaluate =
      app.add_subcommand("evaluate", "compare a label image against ground truth");
  evaluate->add_option("--pred", eval.pred, "predicted label image")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate->add_option("--truth", eval.truth, "ground-truth label image")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate->add_option("--c", eval.clusters, "number of clusters");
  evaluate->add_option("--out", eval.out_json, "also write the JSON report here");

  BenchmarkArgs bench;
  CLI::App* benchmark = app.add_subcommand(
      "benchmark", "synthetic benchmark: sweep phi/seeds, emit a metrics CSV");
  benchmark->add_option("--width", bench.width, "image width");
  benchmark->add_option("--height", bench.height, "image height");
  benchmark->add_option("--pattern", bench.pattern,
                        "region layout: blocks | stripes | circles");
  benchmark->add_option("--levels", bench.levels,
                        "comma-separated region gray levels (default: evenly spaced)");
  benchmark->add_option("--phi-sweep", bench.phi_sweep, "phi sweep as lo:hi:step");
  benchmark->add_option("--seeds", bench.seeds, "comma-separated seeds");
  benchmark->add_option("--out-dir", bench.out_dir, "output directory")->required();
  bench.noise.add_to(*benchmark, false);
  bench.solver.add_to(*benchmark);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (segment->parsed()) return cmd_segment(seg);
    if (synth_noise->parsed()) return cmd_synth_noise(synth);
    if (evaluate->parsed()) return cmd_evaluate(eval);
    if (benchmark->parsed()) return cmd_benchmark(bench);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

inline int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("wrfcm");
  for (const std::string& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace wrfcm::cli
