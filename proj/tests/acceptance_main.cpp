// Acceptance suite: one pass/fail line per criterion, exit code = number of
// failed criteria. Artifacts (sweep table, convergence trace) are written to
// ./acceptance_out/.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "wrfcm/fcm.hpp"
#include "wrfcm/metrics.hpp"
#include "wrfcm/noise.hpp"
#include "wrfcm/synthetic.hpp"
#include "wrfcm/wrfcm.hpp"

using namespace wrfcm;
namespace fs = std::filesystem;

namespace {

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
        .count();
  }
};

int failures = 0;

void verdict(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d: %s — %s\n", pass ? "PASS" : "FAIL", id,
              name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

void info(const std::string& text) {
  std::printf("[info] %s\n", text.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* format, ...) {
  char buffer[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buffer, sizeof(buffer), format, args);
  va_end(args);
  return buffer;
}

// --------------------------------------------------------------------------
// criterion 1: closed-form updates match independent numeric minimizers

void criterion_closed_forms() {
  Timer timer;
  std::mt19937 gen(2024);
  int instances = 0;
  double worst_u = 0.0, worst_v = 0.0, worst_r = 0.0;

  while (instances < 100) {
    const int width = 1 + instances % 3;
    const int height = 1 + (instances / 3) % 3;
    const int channels = instances % 2 ? 3 : 1;
    const int clusters = 2 + instances % 2;
    const double m = instances % 5 == 0 ? 2.6 : 2.0;
    const auto inst =
        oracles::make_small_instance(gen, width, height, channels, clusters, m);
    ++instances;

    const auto u = update_membership(inst.x, inst.v, inst.r, inst.nb, inst.m);
    for (int j = 0; j < inst.x.pixels(); ++j) {
      std::vector<double> d(clusters);
      for (int i = 0; i < clusters; ++i) {
        d[i] = oracles::windowed_dissim_literal(inst.x, inst.r, inst.v, inst.nb, i, j);
      }
      const auto oracle = oracles::minimize_membership_column(d, inst.m);
      for (int i = 0; i < clusters; ++i) {
        worst_u = std::max(worst_u, std::abs(u.at(i, j) - oracle[i]));
      }
    }

    const auto v = update_prototypes(inst.x, inst.u, inst.r, inst.nb, inst.m);
    for (int i = 0; i < clusters; ++i) {
      for (int l = 0; l < channels; ++l) {
        PrototypeSet probe = v;
        const auto f = [&](double value) {
          probe.at(i, l) = value;
          return oracles::objective_literal(inst.x, inst.u, probe, inst.r, inst.w,
                                            inst.nb, inst.betas, inst.m);
        };
        worst_v = std::max(worst_v,
                           std::abs(oracles::central_diff(f, v.at(i, l), 1.0)));
      }
    }

    const auto r =
        update_residual(inst.x, inst.u, inst.v, inst.w, inst.nb, inst.betas, inst.m);
    for (int j = 0; j < inst.x.pixels(); ++j) {
      for (int l = 0; l < channels; ++l) {
        const auto energy = [&](double rho) {
          return oracles::residual_energy_literal(inst.x, inst.u, inst.v, inst.w,
                                                  inst.nb, inst.betas, inst.m, j, l,
                                                  rho);
        };
        const double oracle = oracles::minimize_scalar(energy, -800.0, 800.0);
        worst_r = std::max(worst_r, std::abs(r.at(j, l) - oracle));
      }
    }
  }

  const double elapsed = timer.seconds();
  const bool pass = worst_u <= 1e-6 && worst_v <= 1e-6 && worst_r <= 1e-6 &&
                    elapsed < 60.0;
  verdict(1, "closed-form oracle equivalence", pass,
          fmt("%d instances; max |u - simplex search| = %.2e, max FD gradient at "
              "prototypes = %.2e, max |r - golden section| = %.2e; %.1f s",
              instances, worst_u, worst_v, worst_r, elapsed));
}

// --------------------------------------------------------------------------
// criterion 2: descent within step 1 of every iteration

void criterion_descent() {
  Timer timer;
  std::mt19937 gen(515);
  std::uniform_real_distribution<double> intensity(0.0, 255.0);
  double worst_rise = -1e300;
  int checks = 0;

  for (int instance = 0; instance < 20; ++instance) {
    const int clusters = 2 + instance % 3;  // 2..4
    ImageTensor x(32, 32, 1);
    if (instance % 2 == 0) {
      for (double& value : x.data) value = intensity(gen);
    } else {
      SyntheticSpec spec;
      spec.width = 32;
      spec.height = 32;
      spec.clusters = 4;
      spec.levels = {0.0, 85.0, 170.0, 255.0};
      NoiseSpec noise;
      noise.poisson = true;
      noise.gaussian_sigma = 30.0;
      noise.impulse_prob = 0.2;
      noise.seed = 100 + instance;
      x = corrupt(gen_synthetic(spec).image, noise).observed;
    }
    const auto nb = build_neighborhood(32, 32, 1);
    const auto betas = betas_from_phi(5.0 + instance % 6, channel_stddev(x));
    const double m = 2.0;

    PrototypeSet v = detail::prototypes_from_pixels(
        x, detail::sample_prototype_pixels(x, clusters, 7 * instance + 1));
    ResidualField r(x.pixels(), 1, 0.0);
    WeightField w(x.pixels(), 1, 1.0);
    PartitionMatrix u = update_membership(x, v, r, nb, m);
    v = update_prototypes(x, u, r, nb, m);
    r = update_residual(x, u, v, w, nb, betas, m);
    w = update_weights(r, 0.0008);

    for (int iter = 0; iter < 6; ++iter) {
      const double j0 = objective(x, u, v, r, w, nb, betas, m);
      u = update_membership(x, v, r, nb, m);
      const double j1 = objective(x, u, v, r, w, nb, betas, m);
      v = update_prototypes(x, u, r, nb, m);
      const double j2 = objective(x, u, v, r, w, nb, betas, m);
      r = update_residual(x, u, v, w, nb, betas, m);
      const double j3 = objective(x, u, v, r, w, nb, betas, m);
      worst_rise = std::max({worst_rise, j1 - j0, j2 - j1, j3 - j2});
      checks += 3;
      w = update_weights(r, 0.0008);
    }
  }

  const double elapsed = timer.seconds();
  const bool pass = worst_rise <= 1e-8 && elapsed < 60.0;
  verdict(2, "fixed-weight sub-update descent", pass,
          fmt("20 instances, %d sub-update checks; worst objective rise = %.3e "
              "(slack 1e-8); %.1f s",
              checks, worst_rise, elapsed));
}

// --------------------------------------------------------------------------
// criteria 3 + 4 + 8 share the benchmark configuration

struct BenchmarkState {
  SyntheticImage synth;
  ImageTensor observed;
  double best_sa = 0.0;
  double best_phi = 0.0;
  SolveOutput best_run;
  double fcm_sa = 0.0;
};

BenchmarkState benchmark_state;

void criterion_table_reproduction() {
  SyntheticSpec spec;
  spec.width = 256;
  spec.height = 256;
  spec.clusters = 4;
  spec.levels = {0.0, 85.0, 170.0, 255.0};
  benchmark_state.synth = gen_synthetic(spec);

  NoiseSpec noise;
  noise.poisson = true;
  noise.gaussian_sigma = 30.0;
  noise.impulse_prob = 0.20;
  noise.impulse_kind = ImpulseKind::kRandomValued;
  noise.seed = 1;
  benchmark_state.observed = corrupt(benchmark_state.synth.image, noise).observed;

  SolverConfig config;
  config.clusters = 4;
  config.seed = 1;

  fs::create_directories("acceptance_out");
  std::ofstream sweep_csv("acceptance_out/phi_sweep.csv");
  sweep_csv << "phi,sa,iterations,converged\n";

  Timer sweep_timer;
  for (double phi = 5.0; phi <= 10.0 + 1e-9; phi += 0.5) {
    config.phi = phi;
    Timer run_timer;
    const auto out = wrfcm_fit(benchmark_state.observed, config);
    const double sa = report(out.labels, benchmark_state.synth.truth, 4).sa;
    const double run_s = run_timer.seconds();
    sweep_csv << fmt("%.1f,%.6f,%zu,%d\n", phi, sa, out.trace.records.size(),
                     out.trace.converged ? 1 : 0);
    info(fmt("phi=%4.1f  sa=%.4f  iterations=%zu%s  %.1f s", phi, sa,
             out.trace.records.size(), out.trace.converged ? "" : " (cap)", run_s));
    if (sa > benchmark_state.best_sa) {
      benchmark_state.best_sa = sa;
      benchmark_state.best_phi = phi;
      benchmark_state.best_run = out;
    }
  }

  {
    const auto fcm = fcm_fit(benchmark_state.observed, config);
    const auto labels = defuzzify(fcm.u, 256, 256);
    benchmark_state.fcm_sa = report(labels, benchmark_state.synth.truth, 4).sa;
  }

  const bool sa_target = benchmark_state.best_sa >= 0.99;
  const bool fcm_gap = benchmark_state.fcm_sa <= benchmark_state.best_sa - 0.05;
  verdict(3, "desk-scale benchmark reproduction", sa_target && fcm_gap,
          fmt("best SA = %.4f at phi = %.1f (target >= 0.99); baseline SA = %.4f "
              "(gap %.1f points, required >= 5); sweep %.0f s",
              benchmark_state.best_sa, benchmark_state.best_phi,
              benchmark_state.fcm_sa,
              100.0 * (benchmark_state.best_sa - benchmark_state.fcm_sa),
              sweep_timer.seconds()));

  // context: the same solver on the same input, with the fidelity scale just
  // below the swept range
  for (double phi : {2.5, 3.0}) {
    config.phi = phi;
    const auto out = wrfcm_fit(benchmark_state.observed, config);
    const double sa = report(out.labels, benchmark_state.synth.truth, 4).sa;
    info(fmt("out-of-range context: phi=%.1f sa=%.4f iterations=%zu", phi, sa,
             out.trace.records.size()));
  }
}

void criterion_convergence() {
  const auto& run = benchmark_state.best_run;
  {
    std::ofstream trace_csv("acceptance_out/trace.csv");
    write_trace_csv(run.trace, trace_csv);
  }
  const bool emitted = fs::exists("acceptance_out/trace.csv") &&
                       fs::file_size("acceptance_out/trace.csv") > 0;

  const double theta_last = run.trace.records.back().theta;
  const double j_first = run.trace.records.front().objective;
  const double j_last = run.trace.records.back().objective;
  const bool within_cap = run.trace.converged &&
                          static_cast<int>(run.trace.records.size()) <= 200;
  const bool pass = within_cap && theta_last < 1e-6 && j_last < j_first && emitted;
  verdict(4, "convergence behavior on the benchmark run", pass,
          fmt("best-phi run (phi = %.1f): %zu iterations, converged = %s, final "
              "theta = %.3g (epsilon 1e-6), J first/last = %.4g/%.4g, trace "
              "written = %s",
              benchmark_state.best_phi, run.trace.records.size(),
              run.trace.converged ? "yes" : "no", theta_last, j_first, j_last,
              emitted ? "yes" : "no"));
}

// --------------------------------------------------------------------------
// criterion 5: metric fixtures and permutation invariance

void criterion_metrics() {
  bool pass = true;
  std::string failure;

  auto expect = [&](bool condition, const char* what) {
    if (!condition && pass) {
      pass = false;
      failure = what;
    }
  };

  expect(mcc({5, 0, 5, 0}) == 1.0, "mcc of perfect counts");
  expect(std::abs(mcc({2, 1, 1, 0}) - 2.0 / std::sqrt(24.0)) < 1e-12,
         "mcc hand fixture");
  expect(mcc({0, 0, 0, 3}) == 0.0, "mcc zero-denominator convention");
  expect(sds({5, 0, 5, 0}) == 1.0, "sds of perfect counts");
  expect(std::abs(sds({2, 1, 1, 1}) - 4.0 / 6.0) < 1e-12, "sds hand fixture");
  expect(sds({0, 0, 3, 0}) == 0.0, "sds zero-denominator convention");

  {
    LabelMap truth(2, 2), pred(2, 2);
    truth.labels = {2, 2, 1, 1};
    pred.labels = {1, 1, 2, 2};
    const auto sigma = match_clusters(pred, truth, 2);
    expect(sigma == std::vector<int>({2, 1}), "swap permutation");
    expect(segmentation_accuracy(relabel(pred, sigma), truth) == 1.0,
           "accuracy after swap");
  }
  {
    LabelMap truth(2, 2), pred(2, 2);
    truth.labels = {1, 1, 2, 2};
    pred.labels = {1, 2, 1, 2};
    const auto counts = confusion(pred, truth, 1);
    expect(counts.tp == 1 && counts.fp == 1 && counts.tn == 1 && counts.fn == 1,
           "confusion counts fixture");
  }

  std::mt19937 gen(808);
  std::uniform_int_distribution<int> label(1, 4);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    LabelMap truth(10, 10), pred(10, 10);
    for (int j = 0; j < 100; ++j) {
      truth.labels[j] = label(gen);
      pred.labels[j] = label(gen);
    }
    const auto base = report(pred, truth, 4);
    std::vector<int> perm{1, 2, 3, 4};
    std::shuffle(perm.begin(), perm.end(), gen);
    LabelMap shuffled = pred;
    for (int& value : shuffled.labels) value = perm[value - 1];
    const auto relabeled = report(shuffled, truth, 4);
    worst = std::max({worst, std::abs(base.sa - relabeled.sa),
                      std::abs(base.sds_macro - relabeled.sds_macro),
                      std::abs(base.mcc_macro - relabeled.mcc_macro)});
  }
  expect(worst == 0.0, "permutation invariance over 50 random maps");

  verdict(5, "metric unit suite", pass,
          pass ? fmt("all fixtures exact; permutation invariance drift = %.1g", worst)
               : "failed at: " + failure);
}

// --------------------------------------------------------------------------
// criterion 6: weight/fidelity identities

void criterion_weight_identities() {
  std::mt19937 gen(909);
  std::uniform_real_distribution<double> res(-120.0, 120.0);
  ResidualField r(257, 3);
  for (double& value : r.r) value = res(gen);
  WeightField ones(257, 3, 1.0);
  const auto weighted = fidelity_eval(r, FidelityKind::kWeightedL2, nullptr, &ones);
  const auto plain = fidelity_eval(r, FidelityKind::kL2);
  bool exact = true;
  for (int l = 0; l < 3; ++l) exact &= weighted[l] == plain[l];

  ResidualField fifty(1, 1);
  fifty.at(0, 0) = 50.0;
  const double w50 = update_weights(fifty, 0.0008).at(0, 0);
  const double drift = std::abs(w50 - std::exp(-2.0));

  const bool pass = exact && drift <= 1e-12;
  verdict(6, "weight and fidelity identities", pass,
          fmt("unit-weight fidelity identical to l2: %s; |w(50; 0.0008) - e^-2| = "
              "%.2e (tolerance 1e-12)",
              exact ? "yes" : "no", drift));
}

// --------------------------------------------------------------------------
// criterion 7: noise synthesizer statistics

void criterion_noise_statistics() {
  ImageTensor clean(512, 512, 1, 128.0);

  NoiseSpec gauss;
  gauss.gaussian_sigma = 10.0;
  gauss.seed = 55;
  const auto g = corrupt(clean, gauss);
  long double sum = 0.0L, sum2 = 0.0L;
  for (std::size_t i = 0; i < clean.data.size(); ++i) {
    const double d = g.observed.data[i] - 128.0;
    sum += d;
    sum2 += d * d;
  }
  const double n = static_cast<double>(clean.data.size());
  const double mean = static_cast<double>(sum / n);
  const double stddev = std::sqrt(static_cast<double>(sum2 / n) - mean * mean);
  const bool sigma_ok = std::abs(stddev - 10.0) <= 0.02 * 10.0;

  NoiseSpec mixed;
  mixed.poisson = true;
  mixed.gaussian_sigma = 30.0;
  mixed.impulse_prob = 0.2;
  mixed.seed = 77;
  const auto a = corrupt(clean, mixed);
  const auto b = corrupt(clean, mixed);
  const bool deterministic =
      a.observed.data == b.observed.data && a.impulse_mask == b.impulse_mask;

  long long hits = 0;
  for (auto hit : a.impulse_mask) hits += hit;
  const double fraction = hits / n;
  const double tolerance = 3.0 * std::sqrt(0.2 * 0.8 / n);
  const bool impulse_ok = std::abs(fraction - 0.2) <= tolerance;

  const bool pass = sigma_ok && impulse_ok && deterministic;
  verdict(7, "noise synthesizer statistics", pass,
          fmt("gaussian stddev = %.3f (target 10 +- 2%%); impulse fraction = %.4f "
              "(target 0.2 +- %.4f); seed determinism = %s",
              stddev, fraction, tolerance, deterministic ? "yes" : "no"));
}

// --------------------------------------------------------------------------
// criterion 8: performance envelope

void criterion_performance() {
  SolverConfig config;
  config.clusters = 4;
  config.seed = 1;
  config.phi = benchmark_state.best_phi;
  Timer timer;
  const auto out = wrfcm_fit(benchmark_state.observed, config);
  const double elapsed = timer.seconds();
  const bool pass = elapsed < 30.0;
  verdict(8, "performance envelope", pass,
          fmt("256x256, c = 4, %zu iterations in %.2f s single-threaded (budget 30 s)",
              out.trace.records.size(), elapsed));
}

}  // namespace

int main() {
  criterion_closed_forms();
  criterion_descent();
  criterion_table_reproduction();
  criterion_convergence();
  criterion_metrics();
  criterion_weight_identities();
  criterion_noise_statistics();
  criterion_performance();

  std::printf("%d of 8 criteria passed\n", 8 - failures);
  return failures;
}
