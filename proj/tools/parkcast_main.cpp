// Command-line front end: zone-wise vacant-parking-space forecasting over
// a site graph. Subcommands cover the full experiment cycle: build the
// graph, train per-horizon models, forecast ahead, evaluate on held-out
// data and compare reports.

#include <iostream>

#include <CLI11.hpp>

#include "parkcast/cli.hpp"

int main(int argc, char **argv) {
  CLI::App app{"Zone-wise vacant parking space forecasting"};
  app.require_subcommand(1);

  // graph ---------------------------------------------------------------
  parkcast::cli::GraphArgs graph_args;
  CLI::App *graph = app.add_subcommand(
      "graph", "Build the site adjacency from a coordinates CSV");
  graph->add_option("--coords", graph_args.coords_csv,
                    "Coordinates CSV (site_id,lat,lon)")
      ->required();
  graph->add_option("--epsilon-km", graph_args.epsilon_km,
                    "Distance threshold in km")
      ->capture_default_str();
  graph->add_option("--radius-km", graph_args.radius_km,
                    "Great-circle radius in km")
      ->capture_default_str();
  graph->add_option("--weight-mode", graph_args.weight_mode,
                    "Edge weighting: distance, gaussian or binary")
      ->capture_default_str();
  graph->add_option("--out-dir", graph_args.out_dir,
                    "Output directory (default: $PARKCAST_OUT_DIR or ./out)");

  // train ---------------------------------------------------------------
  parkcast::cli::TrainArgs train_args;
  CLI::App *train = app.add_subcommand(
      "train", "Train one model per (model, horizon, repeat) cell");
  train->add_option("--config", train_args.config_path,
                    "Experiment config file")
      ->required();
  train->add_option("--out-dir", train_args.out_dir,
                    "Overrides the config's output directory");
  train->add_flag("--force", train_args.force,
                  "Retrain cells whose checkpoint already exists");

  // predict -------------------------------------------------------------
  parkcast::cli::PredictArgs predict_args;
  CLI::App *predict = app.add_subcommand(
      "predict", "Forecast past the end of the series from a checkpoint");
  predict->add_option("--config", predict_args.config_path,
                      "Experiment config file")
      ->required();
  predict->add_option("--checkpoint", predict_args.checkpoint,
                      "Checkpoint file to forecast with")
      ->required();
  predict->add_option("--method", predict_args.method,
                      "Forecast method: direct or iterative")
      ->capture_default_str();
  predict->add_option("--horizon-min", predict_args.horizon_min,
                      "Forecast horizon in minutes (iterative; direct "
                      "models carry their trained horizon)");
  predict->add_option("--out-dir", predict_args.out_dir,
                      "Overrides the config's output directory");

  // evaluate ------------------------------------------------------------
  parkcast::cli::EvaluateArgs eval_args;
  bool no_strict = false;
  CLI::App *evaluate = app.add_subcommand(
      "evaluate", "Score checkpoints on the held-out test split");
  evaluate->add_option("--config", eval_args.config_path,
                       "Experiment config file")
      ->required();
  evaluate->add_option("--out-dir", eval_args.out_dir,
                       "Overrides the config's output directory");
  evaluate->add_flag("--no-strict", no_strict,
                     "Skip the checkpoint/data fingerprint check");

  // compare -------------------------------------------------------------
  parkcast::cli::CompareArgs compare_args;
  CLI::App *compare = app.add_subcommand(
      "compare", "Tally metric wins between two report CSVs");
  compare->add_option("report_a", compare_args.report_a, "First report CSV")
      ->required();
  compare->add_option("report_b", compare_args.report_b, "Second report CSV")
      ->required();
  compare->add_option("--min-horizon-min", compare_args.min_horizon_min,
                      "Only compare cells at horizons >= this many minutes")
      ->capture_default_str();

  // config --------------------------------------------------------------
  CLI::App *config = app.add_subcommand(
      "config", "Configuration helpers");
  CLI::App *print_default = config->add_subcommand(
      "print-default", "Print the default experiment config");
  config->require_subcommand(1);

  CLI11_PARSE(app, argc, argv);

  if (graph->parsed())
    return parkcast::cli::cmd_graph(graph_args, std::cout, std::cerr);
  if (train->parsed())
    return parkcast::cli::cmd_train(train_args, std::cout, std::cerr);
  if (predict->parsed())
    return parkcast::cli::cmd_predict(predict_args, std::cout, std::cerr);
  if (evaluate->parsed()) {
    eval_args.strict = !no_strict;
    return parkcast::cli::cmd_evaluate(eval_args, std::cout, std::cerr);
  }
  if (compare->parsed())
    return parkcast::cli::cmd_compare(compare_args, std::cout, std::cerr);
  if (config->parsed() && print_default->parsed())
    return parkcast::cli::cmd_config(std::cout);
  return 1;
}
