#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "parkcast/cli.hpp"
#include "parkcast/data.hpp"
#include "parkcast/error.hpp"
#include "parkcast/io.hpp"

using namespace parkcast;

namespace {

/// Self-cleaning directory for one test's artifacts.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string &name) : path(name) {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string &name) const {
    return (path / name).string();
  }
};

/// Three lots in a row, 0.2 km apart: with the default 0.35 km radius the
/// ends connect to the middle but not to each other.
void write_sites(const std::string &path) {
  geo::save_sites_csv({{"L1", 34.0, -118.0},
                       {"L2", 34.0018086, -118.0},
                       {"L3", 34.0036172, -118.0}},
                      path);
}

/// Deterministic 60-step panel: sinusoid plus a site offset, whole counts.
data::TimeSeriesPanel small_panel(std::size_t steps = 60) {
  data::TimeSeriesPanel p;
  p.interval_min = 5;
  p.site_order = {"L1", "L2", "L3"};
  p.values.assign_shape(ad::Shape::mat(steps, 3));
  for (std::size_t i = 0; i < steps; ++i) {
    p.timestamps.push_back(
        io::Timestamp{1467331200 + static_cast<std::int64_t>(i) * 300});
    for (std::size_t j = 0; j < 3; ++j)
      p.values.at(i, j) = std::round(
          12.0 + 4.0 * (static_cast<double>(j) + 1.0) *
                     (1.0 + std::sin(2.0 * 3.141592653589793 *
                                         static_cast<double>(i) / 20.0 +
                                     static_cast<double>(j))) /
                     2.0);
  }
  return p;
}

/// Writes sites + series and returns a config pointing at them, sized so
/// training cells finish in milliseconds.
cli::ExperimentConfig tiny_experiment(const TempDir &dir) {
  write_sites(dir.file("sites.csv"));
  data::save_series_csv(small_panel(), dir.file("series.csv"));
  cli::ExperimentConfig cfg;
  cfg.series_csv = dir.file("series.csv");
  cfg.coords_csv = dir.file("sites.csv");
  cfg.out_dir = dir.file("out");
  cfg.base.epochs = 2;
  cfg.base.batch_size = 8;
  cfg.base.m = 4;
  cfg.base.hidden = 2;
  cfg.horizons_min = {5};
  cfg.methods = {forecast::Method::Direct};
  cfg.repeats = 1;
  cfg.seed_base = 7;
  return cfg;
}

std::string write_config(const TempDir &dir, const cli::ExperimentConfig &cfg,
                         const std::string &name = "exp.conf") {
  const std::string path = dir.file(name);
  io::write_file_atomic(path, cli::format_experiment_config(cfg));
  return path;
}

struct RunResult {
  int code = 0;
  std::string out;
  std::string err;
};

template <typename Fn> RunResult run(Fn &&fn) {
  std::ostringstream out, err;
  RunResult r;
  r.code = fn(out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("experiment config round-trips through its text form") {
  cli::ExperimentConfig cfg;
  cfg.series_csv = "a.csv";
  cfg.coords_csv = "b.csv";
  cfg.out_dir = "results";
  cfg.capacity_csv = "caps.csv";
  cfg.epsilon_km = 0.25;
  cfg.weight_mode = geo::WeightMode::Gaussian;
  cfg.split_ratio = 0.75;
  cfg.fit_fraction = 0.5;
  cfg.archs = {model::Arch::Stgbgru, model::Arch::PlainGru};
  cfg.base.epochs = 17;
  cfg.base.learning_rate = 0.0025;
  cfg.base.hidden = 8;
  cfg.base.candidate_bias = true;
  cfg.horizons_min = {5, 30, 60};
  cfg.methods = {forecast::Method::Iterative, forecast::Method::Direct};
  cfg.repeats = 3;
  cfg.seed_base = 99;

  const cli::ExperimentConfig back =
      cli::parse_experiment_config(cli::format_experiment_config(cfg));
  CHECK(back.series_csv == cfg.series_csv);
  CHECK(back.coords_csv == cfg.coords_csv);
  CHECK(back.out_dir == cfg.out_dir);
  CHECK(back.capacity_csv == cfg.capacity_csv);
  CHECK(back.epsilon_km == cfg.epsilon_km);
  CHECK(back.weight_mode == cfg.weight_mode);
  CHECK(back.split_ratio == cfg.split_ratio);
  CHECK(back.fit_fraction == cfg.fit_fraction);
  CHECK(back.archs == cfg.archs);
  CHECK(back.base.epochs == cfg.base.epochs);
  CHECK(back.base.learning_rate == cfg.base.learning_rate);
  CHECK(back.base.hidden == cfg.base.hidden);
  CHECK(back.base.candidate_bias == cfg.base.candidate_bias);
  CHECK(back.horizons_min == cfg.horizons_min);
  CHECK(back.methods == cfg.methods);
  CHECK(back.repeats == cfg.repeats);
  CHECK(back.seed_base == cfg.seed_base);

  // The default config parses too (the print-default path).
  std::ostringstream out;
  CHECK(cli::cmd_config(out) == 0);
  const cli::ExperimentConfig def = cli::parse_experiment_config(out.str());
  CHECK(def.horizons_min == cli::ExperimentConfig{}.horizons_min);
}

TEST_CASE("experiment config rejects bad values by name") {
  auto parse_with = [](const std::string &line) {
    return cli::parse_experiment_config(line + "\n");
  };
  CHECK_THROWS_WITH_AS(parse_with("not_a_key=1"),
                       "unknown config key 'not_a_key'", ConfigError);
  CHECK_THROWS_AS(parse_with("horizons_min=7"), ConfigError); // 7 % 5 != 0
  CHECK_THROWS_AS(parse_with("horizons_min=5,5"), ConfigError);
  CHECK_THROWS_AS(parse_with("horizons_min="), ConfigError);
  CHECK_THROWS_AS(parse_with("repeats=0"), ConfigError);
  CHECK_THROWS_AS(parse_with("split_ratio=1"), ConfigError);
  CHECK_THROWS_AS(parse_with("fit_fraction=1.5"), ConfigError);
  CHECK_THROWS_AS(parse_with("archs=stgbgru,stgbgru"), ConfigError);
  CHECK_THROWS_AS(parse_with("archs=resnet"), ConfigError);
  CHECK_THROWS_AS(parse_with("methods=direct,direct"), ConfigError);
  CHECK_THROWS_AS(parse_with("epsilon_km=-1"), ConfigError);
  // Training-level value errors surface through the shared validator.
  CHECK_THROWS_AS(parse_with("batch_size=0"), ContractError);
  CHECK_THROWS_AS(parse_with("this line has no equals"), ConfigError);
}

TEST_CASE("output directory precedence is flag, then env, then config") {
  unsetenv("PARKCAST_OUT_DIR");
  CHECK(cli::resolve_out_dir("flagged", "configured") == "flagged");
  CHECK(cli::resolve_out_dir("", "configured") == "configured");
  CHECK(cli::resolve_out_dir("", "") == "out");
  setenv("PARKCAST_OUT_DIR", "from_env", 1);
  CHECK(cli::resolve_out_dir("", "configured") == "from_env");
  CHECK(cli::resolve_out_dir("flagged", "configured") == "flagged");
  unsetenv("PARKCAST_OUT_DIR");
}

TEST_CASE("graph command writes matrices and summarizes the layout") {
  TempDir dir("cli_test_graph");
  write_sites(dir.file("sites.csv"));
  cli::GraphArgs args;
  args.coords_csv = dir.file("sites.csv");
  args.out_dir = dir.file("g");
  const RunResult r = run([&](auto &out, auto &err) {
    return cli::cmd_graph(args, out, err);
  });
  CHECK(r.code == 0);
  CHECK(r.err == "");
  CHECK(r.out.find("3 sites, 2 edges") != std::string::npos);
  CHECK(r.out.find("pairwise distance: min 0.2") != std::string::npos);
  CHECK(std::filesystem::exists(dir.file("g/adjacency.csv")));
  CHECK(std::filesystem::exists(dir.file("g/adjacency_normalized.csv")));

  // The exported adjacency matches the library's own construction.
  const auto lines =
      io::split_lines(io::read_file(dir.file("g/adjacency.csv")));
  CHECK(lines[1] == "site_id,L1,L2,L3");
}

TEST_CASE("zero-threshold graph warns that it has no edges") {
  TempDir dir("cli_test_graph_empty");
  write_sites(dir.file("sites.csv"));
  cli::GraphArgs args;
  args.coords_csv = dir.file("sites.csv");
  args.epsilon_km = 0.0;
  args.out_dir = dir.file("g");
  const RunResult r = run([&](auto &out, auto &err) {
    return cli::cmd_graph(args, out, err);
  });
  CHECK(r.code == 0); // degenerate but not an error
  CHECK(r.out.find("0 edges") != std::string::npos);
  CHECK(r.err.find("graph has no edges") != std::string::npos);
}

TEST_CASE("graph command fails cleanly on bad inputs") {
  TempDir dir("cli_test_graph_bad");
  cli::GraphArgs args;
  args.coords_csv = dir.file("nonexistent.csv");
  args.out_dir = dir.file("g");
  const RunResult missing = run([&](auto &out, auto &err) {
    return cli::cmd_graph(args, out, err);
  });
  CHECK(missing.code == 1);
  CHECK(missing.err.find("nonexistent.csv") != std::string::npos);

  io::write_file_atomic(dir.file("empty.csv"), "site_id,lat,lon\n");
  args.coords_csv = dir.file("empty.csv");
  const RunResult empty = run([&](auto &out, auto &err) {
    return cli::cmd_graph(args, out, err);
  });
  CHECK(empty.code == 1);
  CHECK(empty.err.find("no sites") != std::string::npos);
}

TEST_CASE("training writes one checkpoint per cell and is resumable") {
  TempDir dir("cli_test_train");
  cli::ExperimentConfig cfg = tiny_experiment(dir);
  cfg.repeats = 2;
  const std::string conf = write_config(dir, cfg);

  cli::TrainArgs args;
  args.config_path = conf;
  const RunResult first = run([&](auto &out, auto &err) {
    return cli::cmd_train(args, out, err);
  });
  CHECK(first.code == 0);
  const std::string ckpt0 = dir.file("out/ckpt_stgbgru_h1_r0.bin");
  const std::string ckpt1 = dir.file("out/ckpt_stgbgru_h1_r1.bin");
  REQUIRE(std::filesystem::exists(ckpt0));
  REQUIRE(std::filesystem::exists(ckpt1));
  CHECK(std::filesystem::exists(dir.file("out/history_stgbgru_h1_r0.csv")));

  // Repeats use distinct seeds, so the two checkpoints differ.
  CHECK(io::read_file(ckpt0) != io::read_file(ckpt1));

  // The history has one row per epoch with a parseable training loss.
  const auto hist = io::split_lines(
      io::read_file(dir.file("out/history_stgbgru_h1_r0.csv")));
  REQUIRE(hist.size() == 3); // header + 2 epochs
  CHECK(hist[0] == "epoch,train_mse,val_mse");
  const auto row = io::split_csv(hist[1]);
  CHECK(row[0] == "1");
  CHECK(io::parse_double(row[1], "mse") > 0.0);
  CHECK(row[2] == "nan"); // no validation split in experiment training

  // A second run skips every existing cell...
  const RunResult second = run([&](auto &out, auto &err) {
    return cli::cmd_train(args, out, err);
  });
  CHECK(second.code == 0);
  CHECK(second.out.find("skip ckpt_stgbgru_h1_r0.bin") != std::string::npos);
  CHECK(second.out.find("skip ckpt_stgbgru_h1_r1.bin") != std::string::npos);

  // ...and --force retrains to the byte-identical artifact (same seed).
  const std::string before = io::read_file(ckpt0);
  args.force = true;
  const RunResult forced = run([&](auto &out, auto &err) {
    return cli::cmd_train(args, out, err);
  });
  CHECK(forced.code == 0);
  CHECK(forced.out.find("trained ckpt_stgbgru_h1_r0.bin") !=
        std::string::npos);
  CHECK(io::read_file(ckpt0) == before);
}

TEST_CASE("iterative method pulls in a one-step model automatically") {
  TempDir dir("cli_test_train_iter");
  cli::ExperimentConfig cfg = tiny_experiment(dir);
  cfg.horizons_min = {15}; // h = 3 only
  cfg.methods = {forecast::Method::Direct, forecast::Method::Iterative};
  cli::TrainArgs args;
  args.config_path = write_config(dir, cfg);
  const RunResult r = run([&](auto &out, auto &err) {
    return cli::cmd_train(args, out, err);
  });
  CHECK(r.code == 0);
  CHECK(r.out.find("one-step model") != std::string::npos);
  CHECK(std::filesystem::exists(dir.file("out/ckpt_stgbgru_h1_r0.bin")));
  CHECK(std::filesystem::exists(dir.file("out/ckpt_stgbgru_h3_r0.bin")));
}

TEST_CASE("training failures surface as nonzero exits with the cause") {
  TempDir dir("cli_test_train_err");

  // Unknown config key, named in the message.
  io::write_file_atomic(dir.file("bad.conf"), "bogus_key=1\n");
  cli::TrainArgs args;
  args.config_path = dir.file("bad.conf");
  const RunResult bad_key = run([&](auto &out, auto &err) {
    return cli::cmd_train(args, out, err);
  });
  CHECK(bad_key.code == 1);
  CHECK(bad_key.err.find("bogus_key") != std::string::npos);

  // Horizon not divisible by the interval.
  cli::ExperimentConfig cfg = tiny_experiment(dir);
  cfg.horizons_min = {7};
  std::string text = cli::format_experiment_config(cfg);
  CHECK_THROWS_AS(cli::parse_experiment_config(text), ConfigError);

  // Divergence carries the epoch index to the exit message.
  cfg.horizons_min = {5};
  cfg.base.divergence_limit = 1e-9; // every real batch loss exceeds this
  args.config_path = write_config(dir, cfg, "diverge.conf");
  const RunResult diverged = run([&](auto &out, auto &err) {
    return cli::cmd_train(args, out, err);
  });
  CHECK(diverged.code == 1);
  CHECK(diverged.err.find("diverged") != std::string::npos);
  CHECK(diverged.err.find("epoch 0") != std::string::npos);

  // Missing config file names the path.
  args.config_path = dir.file("missing.conf");
  const RunResult missing = run([&](auto &out, auto &err) {
    return cli::cmd_train(args, out, err);
  });
  CHECK(missing.code == 1);
  CHECK(missing.err.find("missing.conf") != std::string::npos);
}

TEST_CASE("evaluate reports both methods and averages across repeats") {
  TempDir dir("cli_test_eval");
  cli::ExperimentConfig cfg = tiny_experiment(dir);
  cfg.horizons_min = {5, 15};
  cfg.methods = {forecast::Method::Direct, forecast::Method::Iterative};
  cfg.repeats = 2;
  const std::string conf = write_config(dir, cfg);

  cli::TrainArgs targs;
  targs.config_path = conf;
  REQUIRE(run([&](auto &out, auto &err) {
            return cli::cmd_train(targs, out, err);
          }).code == 0);

  cli::EvaluateArgs eargs;
  eargs.config_path = conf;
  const RunResult r = run([&](auto &out, auto &err) {
    return cli::cmd_evaluate(eargs, out, err);
  });
  CHECK(r.code == 0);

  const std::string report_path = dir.file("out/report_stgbgru.csv");
  REQUIRE(std::filesystem::exists(report_path));
  const metrics::ForecastReport report =
      metrics::parse_report_csv(io::read_file(report_path));
  // 2 horizons x 2 methods x 3 sites.
  CHECK(report.cells.size() == 12);
  bool has_direct = false, has_iterative = false;
  for (const metrics::ReportCell &cell : report.cells) {
    has_direct = has_direct || cell.method == "direct";
    has_iterative = has_iterative || cell.method == "iterative";
  }
  CHECK(has_direct);
  CHECK(has_iterative);

  // Trace files exist for every (method, horizon) and align with the
  // report: recomputing MAE from a trace reproduces nothing averaged,
  // so instead check shape and that actuals are whole counts.
  const std::string trace_path = dir.file("out/trace_stgbgru_direct_5min.csv");
  REQUIRE(std::filesystem::exists(trace_path));
  const auto tlines = io::split_lines(io::read_file(trace_path));
  CHECK(tlines[0] == "timestamp,site_id,actual,predicted");
  REQUIRE(tlines.size() > 1);
  const auto trow = io::split_csv(tlines[1]);
  REQUIRE(trow.size() == 4);
  const double actual = io::parse_double(trow[2], "actual");
  CHECK(actual == std::round(actual));

  // Manual averaging oracle: evaluate each repeat's checkpoint by hand on
  // the direct 5-min cell and average the per-repeat MAEs.
  const data::TimeSeriesPanel panel =
      data::load_series(cfg.series_csv, cfg.interval_min,
                        {"L1", "L2", "L3"});
  double mae_sum = 0.0;
  for (int rep = 0; rep < 2; ++rep) {
    const train::Checkpoint ckpt = train::load_checkpoint(
        dir.file("out/ckpt_stgbgru_h1_r" + std::to_string(rep) + ".bin"));
    const data::TimeSeriesPanel scaled =
        data::normalize_with(panel, *ckpt.scaler);
    const data::WindowedDataset full = data::sliding_windows(
        scaled, static_cast<std::size_t>(ckpt.config.m), 1);
    const auto split = data::train_test_split(full, cfg.split_ratio);
    const ad::Tensor pred =
        forecast::batch_forecast(ckpt, split.second, forecast::Method::Direct);
    const std::size_t n_train = split.first.samples();
    std::vector<double> a, p;
    for (std::size_t t = 0; t < split.second.samples(); ++t) {
      ad::Tensor row(ad::Shape::mat(1, 3));
      for (std::size_t j = 0; j < 3; ++j)
        row.at(0, j) = pred.at(t, j);
      const ad::Tensor counts = data::denormalize(row, *ckpt.scaler);
      const std::size_t target_row =
          n_train + t + static_cast<std::size_t>(ckpt.config.m) - 1 + 1;
      a.push_back(panel.values.at(target_row, 0)); // site L1
      p.push_back(counts.at(0, 0));
    }
    mae_sum += metrics::mae(a, p);
  }
  const double expected_mae = mae_sum / 2.0;
  bool found = false;
  for (const metrics::ReportCell &cell : report.cells)
    if (cell.site == "L1" && cell.horizon_min == 5 &&
        cell.method == "direct") {
      CHECK(cell.mae == doctest::Approx(expected_mae).epsilon(1e-12));
      found = true;
    }
  CHECK(found);

  // Re-evaluating produces byte-identical outputs.
  const std::string before = io::read_file(report_path);
  REQUIRE(run([&](auto &out, auto &err) {
            return cli::cmd_evaluate(eargs, out, err);
          }).code == 0);
  CHECK(io::read_file(report_path) == before);
}

TEST_CASE("evaluate enforces the data fingerprint unless told otherwise") {
  TempDir dir("cli_test_eval_strict");
  cli::ExperimentConfig cfg = tiny_experiment(dir);
  const std::string conf = write_config(dir, cfg);
  cli::TrainArgs targs;
  targs.config_path = conf;
  REQUIRE(run([&](auto &out, auto &err) {
            return cli::cmd_train(targs, out, err);
          }).code == 0);

  // Perturb one value in the series: same shape, different bytes.
  data::TimeSeriesPanel changed = small_panel();
  changed.values.at(0, 0) += 1.0;
  data::save_series_csv(changed, cfg.series_csv);

  cli::EvaluateArgs eargs;
  eargs.config_path = conf;
  const RunResult strict = run([&](auto &out, auto &err) {
    return cli::cmd_evaluate(eargs, out, err);
  });
  CHECK(strict.code == 1);
  CHECK(strict.err.find("fingerprint") != std::string::npos);

  eargs.strict = false;
  const RunResult relaxed = run([&](auto &out, auto &err) {
    return cli::cmd_evaluate(eargs, out, err);
  });
  CHECK(relaxed.code == 0);
}

TEST_CASE("predict emits one forecast row per site and horizon step") {
  TempDir dir("cli_test_predict");
  cli::ExperimentConfig cfg = tiny_experiment(dir);
  cfg.methods = {forecast::Method::Direct, forecast::Method::Iterative};
  const std::string conf = write_config(dir, cfg);
  cli::TrainArgs targs;
  targs.config_path = conf;
  REQUIRE(run([&](auto &out, auto &err) {
            return cli::cmd_train(targs, out, err);
          }).code == 0);

  cli::PredictArgs pargs;
  pargs.config_path = conf;
  pargs.checkpoint = dir.file("out/ckpt_stgbgru_h1_r0.bin");
  pargs.method = "iterative";
  pargs.horizon_min = 15;
  const RunResult iter = run([&](auto &out, auto &err) {
    return cli::cmd_predict(pargs, out, err);
  });
  CHECK(iter.code == 0);
  const auto lines =
      io::split_lines(io::read_file(dir.file("out/predictions.csv")));
  CHECK(lines[0] == "timestamp,site_id,horizon_min,method,predicted,count");
  CHECK(lines.size() == 1 + 3 * 3); // header + 3 steps x 3 sites
  const auto row = io::split_csv(lines[1]);
  REQUIRE(row.size() == 6);
  CHECK(row[1] == "L1");
  CHECK(row[2] == "5"); // first iterative step is a 5-min forecast
  CHECK(row[3] == "iterative");
  // The count column is the rounded, floored-at-zero presentation.
  const double predicted = io::parse_double(row[4], "predicted");
  const double count = io::parse_double(row[5], "count");
  CHECK(count == std::round(std::max(0.0, predicted)));
  // Forecast timestamps continue past the end of the series (which ends
  // at 04:55 after 60 five-minute steps from midnight).
  CHECK(lines[1].substr(0, 16) == "2016-07-01T05:00");

  pargs.method = "direct";
  pargs.horizon_min = 0;
  const RunResult direct = run([&](auto &out, auto &err) {
    return cli::cmd_predict(pargs, out, err);
  });
  CHECK(direct.code == 0);
  const auto dlines =
      io::split_lines(io::read_file(dir.file("out/predictions.csv")));
  CHECK(dlines.size() == 1 + 3); // header + 1 step x 3 sites

  // A direct model cannot serve a different horizon.
  pargs.horizon_min = 15;
  const RunResult wrong = run([&](auto &out, auto &err) {
    return cli::cmd_predict(pargs, out, err);
  });
  CHECK(wrong.code == 1);
  CHECK(wrong.err.find("fixed") != std::string::npos);
}

TEST_CASE("predict clamps presented counts to configured capacities") {
  TempDir dir("cli_test_predict_cap");
  cli::ExperimentConfig cfg = tiny_experiment(dir);
  io::write_file_atomic(dir.file("caps.csv"),
                        "site_id,capacity\nL1,0\nL2,0\nL3,0\n");
  cfg.capacity_csv = dir.file("caps.csv");
  const std::string conf = write_config(dir, cfg);
  cli::TrainArgs targs;
  targs.config_path = conf;
  REQUIRE(run([&](auto &out, auto &err) {
            return cli::cmd_train(targs, out, err);
          }).code == 0);

  cli::PredictArgs pargs;
  pargs.config_path = conf;
  pargs.checkpoint = dir.file("out/ckpt_stgbgru_h1_r0.bin");
  const RunResult r = run([&](auto &out, auto &err) {
    return cli::cmd_predict(pargs, out, err);
  });
  CHECK(r.code == 0);
  // Zero capacity forces every presented count to zero, whatever the
  // model predicted.
  const auto lines =
      io::split_lines(io::read_file(dir.file("out/predictions.csv")));
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty())
      continue;
    CHECK(io::split_csv(lines[i])[5] == "0");
  }

  // A capacity file that misses a site is rejected.
  io::write_file_atomic(dir.file("caps.csv"), "site_id,capacity\nL1,10\n");
  const RunResult missing = run([&](auto &out, auto &err) {
    return cli::cmd_predict(pargs, out, err);
  });
  CHECK(missing.code == 1);
  CHECK(missing.err.find("L2") != std::string::npos);
}

TEST_CASE("compare tallies wins per metric and rejects foreign grids") {
  TempDir dir("cli_test_compare");
  // Hand-built reports over the same grid, A uniformly better.
  const std::string header =
      "site,horizon_min,method,mae,rmse,mape_or_smape,substituted\n";
  std::string a_csv = header, b_csv = header;
  for (const char *site : {"L1", "L2"})
    for (const int h : {5, 15}) {
      a_csv += std::string(site) + "," + std::to_string(h) + ",direct,1,2,3,0\n";
      b_csv += std::string(site) + "," + std::to_string(h) + ",direct,2,3,4,0\n";
    }
  io::write_file_atomic(dir.file("a.csv"), a_csv);
  io::write_file_atomic(dir.file("b.csv"), b_csv);

  cli::CompareArgs args;
  args.report_a = dir.file("a.csv");
  args.report_b = dir.file("b.csv");
  metrics::CompareTally tally;
  const RunResult r = run([&](auto &out, auto &err) {
    return cli::cmd_compare(args, out, err, &tally);
  });
  CHECK(r.code == 0);
  CHECK(r.out.find("compared 4 (site, horizon) cells") != std::string::npos);
  CHECK(r.out.find("mae: A wins 4, B wins 0, ties 0") != std::string::npos);
  REQUIRE(tally.lines.size() == 3);
  CHECK(tally.lines[0].a_wins == 4);

  // Self-comparison is all ties.
  args.report_b = dir.file("a.csv");
  const RunResult self = run([&](auto &out, auto &err) {
    return cli::cmd_compare(args, out, err, &tally);
  });
  CHECK(self.code == 0);
  for (const auto &line : tally.lines) {
    CHECK(line.a_wins == 0);
    CHECK(line.b_wins == 0);
    CHECK(line.ties == 4);
  }

  // The horizon filter drops short-range cells from the tally.
  args.report_b = dir.file("b.csv");
  args.min_horizon_min = 15;
  const RunResult filtered = run([&](auto &out, auto &err) {
    return cli::cmd_compare(args, out, err, &tally);
  });
  CHECK(filtered.code == 0);
  CHECK(tally.compared == 2);

  // Mismatched grids are a proper failure.
  io::write_file_atomic(dir.file("c.csv"),
                        header + "L1,5,direct,1,2,3,0\n");
  args.report_b = dir.file("c.csv");
  args.min_horizon_min = 0;
  const RunResult mismatch = run([&](auto &out, auto &err) {
    return cli::cmd_compare(args, out, err, &tally);
  });
  CHECK(mismatch.code == 1);
  CHECK(mismatch.err.find("missing cell") != std::string::npos);
}

TEST_CASE("training twice into separate directories is bit-reproducible") {
  TempDir dir("cli_test_determinism");
  cli::ExperimentConfig cfg = tiny_experiment(dir);
  const std::string conf = write_config(dir, cfg);

  for (const char *sub : {"run_a", "run_b"}) {
    cli::TrainArgs args;
    args.config_path = conf;
    args.out_dir = dir.file(sub);
    REQUIRE(run([&](auto &out, auto &err) {
              return cli::cmd_train(args, out, err);
            }).code == 0);
  }
  CHECK(io::read_file(dir.file("run_a/ckpt_stgbgru_h1_r0.bin")) ==
        io::read_file(dir.file("run_b/ckpt_stgbgru_h1_r0.bin")));
  CHECK(io::read_file(dir.file("run_a/history_stgbgru_h1_r0.csv")) ==
        io::read_file(dir.file("run_b/history_stgbgru_h1_r0.csv")));
}

} // TEST_SUITE("cli")
