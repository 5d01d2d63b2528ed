#include <malloc.h>

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "autograph/error.hpp"
#include "autograph/harness.hpp"
#include "autograph/kernels.hpp"

namespace ah = autograph::harness;

int main(int argc, char** argv) {
  // Training reallocates many same-sized matrices per epoch; keep them on the
  // heap instead of mapping and faulting in fresh pages every time.
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  CLI::App app{"autograph: time-budgeted graph learning and challenge harness"};
  app.require_subcommand(1);

  ah::IngestOptions run;
  std::string replay;
  bool emit_topology = false;
  int threads = 0;
  auto* run_cmd = app.add_subcommand("run", "Run a solution under a time budget and write predictions");
  run_cmd->add_option("--dataset", run.dataset, "Dataset directory")->required();
  run_cmd->add_option("--solution", run.solution, "baseline_gcn2, gcn4, autograph or f2gcn")
      ->check(CLI::IsMember(ah::solution_names()));
  run_cmd->add_option("--budget", run.budget_seconds, "Time budget in seconds")->check(CLI::PositiveNumber);
  run_cmd->add_option("--seed", run.seed, "Random seed");
  run_cmd->add_option("--out", run.out, "Prediction file (.tsv) or output directory")->required();
  run_cmd->add_option("--workers", run.workers, "Concurrent trials")->check(CLI::PositiveNumber);
  run_cmd->add_option("--max-trials", run.max_trials, "Stop after this many trials (0: unlimited)");
  run_cmd->add_option("--threads", threads, "OpenMP threads per kernel (0: default)");
  run_cmd->add_option("--replay", replay, "Re-run the config stored in a best_trial.json")
      ->check(CLI::ExistingFile);
  run_cmd->add_flag("--emit-topology", emit_topology, "Print the selected topology as JSON");

  std::string pred, truth, score_out;
  auto* score_cmd = app.add_subcommand("score", "Score a prediction file against ground truth");
  score_cmd->add_option("--pred", pred)->required()->check(CLI::ExistingFile);
  score_cmd->add_option("--truth", truth)->required()->check(CLI::ExistingFile);
  score_cmd->add_option("--out", score_out, "scores.json path")->required();

  std::string results, board_out;
  auto* board_cmd = app.add_subcommand("leaderboard", "Aggregate scores.json files into a CSV");
  board_cmd->add_option("--results", results)->required()->check(CLI::ExistingDirectory);
  board_cmd->add_option("--out", board_out)->required();

  ah::SynthOptions synth;
  std::string kind = "sbm", synth_out;
  auto* synth_cmd = app.add_subcommand("gen-synth", "Generate a synthetic dataset with ground truth");
  synth_cmd->add_option("--kind", kind)->check(CLI::IsMember({"sbm"}));
  synth_cmd->add_option("--nodes", synth.nodes);
  synth_cmd->add_option("--classes", synth.classes);
  synth_cmd->add_option("--p-in", synth.p_in);
  synth_cmd->add_option("--p-out", synth.p_out);
  synth_cmd->add_option("--seed", synth.seed);
  synth_cmd->add_option("--train-fraction", synth.train_fraction);
  synth_cmd->add_option("--feature-noise", synth.feature_noise);
  synth_cmd->add_flag("--featureless", synth.featureless);
  synth_cmd->add_option("--time-budget", synth.time_budget_seconds, "time_budget_seconds in meta.json");
  synth_cmd->add_option("--out", synth_out)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      if (run.solution.empty() && replay.empty()) throw CLI::RequiredError("--solution");
      if (!replay.empty()) run.replay = replay;
      if (threads > 0) autograph::kernels::set_threads(threads);
      if (!run_cmd->count("--budget")) {
        run.budget_seconds = autograph::load_dataset(run.dataset).time_budget_seconds;
      }
      const auto r = ah::ingest(run);
      std::fprintf(stderr, "%s: %zu trials, %.2fs%s\n", r.predictions_path.c_str(), r.n_trials,
                   r.wall_seconds, r.budget_exceeded ? " (budget exceeded)" : "");
      if (emit_topology) {
        if (r.topology) {
          nlohmann::json j = *r.topology;
          std::cout << j.dump(2) << "\n";
        } else {
          std::cout << "null\n";
        }
      }
    } else if (*score_cmd) {
      const auto report = ah::score(pred, truth);
      ah::write_json(ah::to_json(report), score_out);
      std::printf("accuracy %.4f  balanced_accuracy %.4f\n", report.accuracy, report.balanced_accuracy);
    } else if (*board_cmd) {
      ah::leaderboard(results, board_out);
    } else if (*synth_cmd) {
      ah::gen_synth(synth, synth_out);
    }
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const autograph::ContractViolation& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const autograph::ScoringError& e) {
    std::fprintf(stderr, "scoring error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
