// Benchmark harness.
//
// Default run: serial-vs-parallel kernel timings plus per-epoch training
// cost for the small architectures, with a projection of what a full
// 500-epoch run costs on this machine.
//
//   --margin   additionally runs the full graph-vs-per-site experiment
//              (5 seeds each, 500 epochs) and reports test MSEs and the
//              median improvement. Slow; meant for calibration.
//
// Timings are wall-clock and machine-dependent; nothing here asserts.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <vector>

#include "parkcast/data.hpp"
#include "parkcast/geo.hpp"
#include "parkcast/kernels.hpp"
#include "parkcast/model.hpp"
#include "parkcast/rng.hpp"
#include "parkcast/synth.hpp"
#include "parkcast/train.hpp"

using namespace parkcast;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void fill_random(std::vector<double> &v, Rng &rng) {
  for (double &x : v)
    x = rng.uniform01() - 0.5;
}

void bench_matmul() {
  std::printf("matmul: serial vs parallel (small shapes fall back to the "
              "serial loop)\n");
  Rng rng(1);
  for (const std::size_t n : {8UL, 64UL, 128UL, 256UL, 384UL}) {
    std::vector<double> a(n * n), b(n * n), c(n * n);
    fill_random(a, rng);
    fill_random(b, rng);
    const int reps = n <= 64 ? 2000 : (n <= 128 ? 200 : 20);

    auto t0 = Clock::now();
    for (int r = 0; r < reps; ++r)
      kernels::matmul_serial(a.data(), b.data(), c.data(), n, n, n);
    const double ts = seconds_since(t0) / reps;

    t0 = Clock::now();
    for (int r = 0; r < reps; ++r)
      kernels::matmul_parallel(a.data(), b.data(), c.data(), n, n, n);
    const double tp = seconds_since(t0) / reps;

    std::printf("  %4zux%-4zu  serial %9.1f us   parallel %9.1f us   "
                "(x%.2f)\n",
                n, n, ts * 1e6, tp * 1e6, ts / tp);
  }
}

void bench_map() {
  std::printf("elementwise tanh map: serial vs parallel\n");
  Rng rng(2);
  for (const std::size_t n : {4096UL, 65536UL, 1048576UL}) {
    std::vector<double> x(n), y(n);
    fill_random(x, rng);
    const int reps = n <= 65536 ? 500 : 40;
    const auto f = [](double v) { return std::tanh(v); };

    auto t0 = Clock::now();
    for (int r = 0; r < reps; ++r)
      kernels::map_serial(x.data(), y.data(), n, f);
    const double ts = seconds_since(t0) / reps;

    t0 = Clock::now();
    for (int r = 0; r < reps; ++r)
      kernels::map_parallel(x.data(), y.data(), n, f);
    const double tp = seconds_since(t0) / reps;

    std::printf("  n=%-8zu serial %9.1f us   parallel %9.1f us   (x%.2f)\n",
                n, ts * 1e6, tp * 1e6, ts / tp);
  }
}

struct TrainTiming {
  double sec_per_epoch = 0.0;
  double final_train_mse = 0.0;
};

TrainTiming time_epochs(const train::TrainConfig &config,
                        const data::WindowedDataset &train_set,
                        const train::DataContext &ctx, int epochs) {
  train::TrainConfig c = config;
  c.epochs = epochs;
  double last = 0.0;
  const auto t0 = Clock::now();
  train::train(c, train_set, nullptr, ctx,
               [&](int, const train::EpochStats &s) { last = s.train_mse; });
  const double total = seconds_since(t0);
  return TrainTiming{total / epochs, last};
}

const char *arch_name(model::Arch arch) {
  switch (arch) {
  case model::Arch::Stgbgru:
    return "stgbgru";
  case model::Arch::PlainGru:
    return "plain-gru";
  default:
    return "stacked";
  }
}

void bench_training(bool margin, int margin_hidden) {
  // 0.25 km keeps only the orthogonal grid edges; the sparser mixing
  // makes the neighbor signal harder to recover from a site's own
  // history, which is what separates the architectures.
  const geo::ParkingGraph graph = geo::build_graph(synth::grid_sites(), 0.25);
  synth::SynthParams params; // 2000 steps, 8 sites
  const data::TimeSeriesPanel panel =
      synth::generate_panel(graph, params, 100);
  const data::TimeSeriesPanel scaled = data::minmax_normalize(panel, 0.8);

  const data::WindowedDataset full = data::sliding_windows(scaled, 12, 1);
  const auto split = data::train_test_split(full, 0.8);

  train::DataContext ctx;
  ctx.a_hat = geo::normalize_adjacency(graph.A);
  ctx.site_order = panel.site_order;
  ctx.scaler = scaled.scaler;

  std::printf("training cost at the 8-site / 2000-step / m=12 shape "
              "(%zu train samples, batch 32):\n",
              split.first.samples());
  for (const int hidden : {4, 8, 16}) {
    for (const model::Arch arch :
         {model::Arch::Stgbgru, model::Arch::PlainGru}) {
      train::TrainConfig config;
      config.arch = arch;
      config.hidden = hidden;
      config.seed = 1;
      const TrainTiming t = time_epochs(config, split.first, ctx, 3);
      std::printf("  %-9s hidden=%-3d %7.3f s/epoch  -> 500 epochs ~ %6.1f "
                  "s\n",
                  arch_name(arch), hidden, t.sec_per_epoch,
                  t.sec_per_epoch * 500.0);
    }
  }

  if (!margin)
    return;

  std::printf("\nfull margin experiment: 500 epochs, 5 seeds per "
              "architecture, hidden=%d\n",
              margin_hidden);
  const auto t0 = Clock::now();
  std::vector<double> ratios;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    double mse_graph = 0.0, mse_plain = 0.0;
    for (const model::Arch arch :
         {model::Arch::Stgbgru, model::Arch::PlainGru}) {
      train::TrainConfig config;
      config.arch = arch;
      config.hidden = margin_hidden;
      config.seed = seed;
      config.epochs = 500;
      const auto r0 = Clock::now();
      const train::Checkpoint ck =
          train::train(config, split.first, nullptr, ctx);
      const double test_mse =
          train::evaluate_mse(ck.spec(), ck.params, split.second, ctx.a_hat);
      (arch == model::Arch::Stgbgru ? mse_graph : mse_plain) = test_mse;
      std::printf("  seed %llu %-9s test mse %.6f  (%.1f s)\n",
                  (unsigned long long)seed, arch_name(arch), test_mse,
                  seconds_since(r0));
    }
    ratios.push_back(1.0 - mse_graph / mse_plain);
    std::printf("  seed %llu improvement over plain-gru: %.1f%%\n",
                (unsigned long long)seed, ratios.back() * 100.0);
  }
  std::sort(ratios.begin(), ratios.end());
  std::printf("median improvement: %.1f%%   total wall time %.1f s\n",
              ratios[2] * 100.0, seconds_since(t0));
}

} // namespace

int main(int argc, char **argv) {
  bool margin = false;
  bool kernels_only = false;
  int margin_hidden = 4;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--margin") == 0)
      margin = true;
    else if (std::strcmp(argv[i], "--kernels-only") == 0)
      kernels_only = true;
    else if (std::strcmp(argv[i], "--hidden") == 0 && i + 1 < argc)
      margin_hidden = std::atoi(argv[++i]);
    else {
      std::fprintf(stderr, "usage: parkcast_bench [--margin] [--hidden N] "
                           "[--kernels-only]\n");
      return 2;
    }
  }
  bench_matmul();
  std::printf("\n");
  bench_map();
  if (!kernels_only) {
    std::printf("\n");
    bench_training(margin, margin_hidden);
  }
  return 0;
}
