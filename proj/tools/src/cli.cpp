#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>

#include "audet/dataset/fixtures.hpp"
#include "audet/dataset/resample.hpp"
#include "audet/trainer/folds.hpp"
#include "audet/trainer/gradcheck_suite.hpp"
#include "audet/trainer/train.hpp"

namespace audet::cli {

namespace {

namespace fs = std::filesystem;

struct TrainArgs {
  std::string config, manifest, data_dir, out, split = "official";
  std::optional<std::uint64_t> seed;
  std::size_t base_stride = 10, rare_stride = 5;
};

struct EvalArgs {
  std::vector<std::string> checkpoints, splits;
  std::string manifest, data_dir;
  std::optional<std::uint64_t> seed;
};

struct PredictArgs {
  std::string checkpoint, ensemble, manifest, data_dir, out;
  bool weights = false;
};

struct GradArgs {
  GradCheckSuiteOptions options;
};

struct StatsArgs {
  std::string manifest;
  std::size_t base_stride = 10, rare_stride = 5;
};

struct FixtureArgs {
  FixtureConfig config;
  std::string out;
  bool no_rare = false;
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

const Split& find_split(const std::vector<Split>& splits, const std::string& name) {
  for (const auto& s : splits) {
    if (s.name == name) return s;
  }
  std::string known;
  for (const auto& s : splits) known += " " + s.name;
  throw UsageError("unknown split '" + name + "' (known:" + known + ", all)");
}

std::string row_label(const std::string& split) {
  if (split.empty()) return split;
  std::string out = split;
  out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  return out;
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
  RunConfig rc = a.config.empty() ? RunConfig{} : read_run_config(a.config);
  if (a.seed) rc.model.seed = *a.seed;
  rc.model.validate();
  const auto records = read_manifest_file(a.manifest);

  std::vector<FrameRecord> train_records, val_records;
  if (a.split == "all") {
    train_records = records;
  } else {
    const auto splits = make_folds(records, 4, rc.model.seed);
    const Split& s = find_split(splits, a.split);
    train_records = select_videos(records, s.train_videos);
    val_records = select_videos(records, s.val_videos);
  }
  const SamplePlan plan = resample(train_records, {a.base_stride, a.rare_stride});
  for (const auto& w : plan.warnings) out << "warning: " << w << '\n';

  TrainData data;
  for (std::size_t i : plan.indices) data.train.push_back(train_records[i]);
  data.val = std::move(val_records);
  data.loader = directory_loader(a.data_dir);
  out << "train: " << data.train.size() << " sampled frames, val: " << data.val.size() << " frames\n";

  fs::create_directories(a.out);
  std::ofstream history(fs::path(a.out) / "history.jsonl", std::ios::trunc);
  if (!history) throw FormatError("cannot write history under " + a.out);
  {
    std::ofstream cfg(fs::path(a.out) / "config.json", std::ios::trunc);
    cfg << to_json(rc) << '\n';
  }
  const TrainResult result = train(rc.model, rc.schedule, data, [&](const EpochRecord& r) {
    history << history_line(r) << '\n' << std::flush;
    out << "epoch " << r.epoch << "  lr " << r.lr << "  loss " << std::fixed << std::setprecision(5)
        << r.loss.total << "  macro F1 " << std::setprecision(2) << 100.0 * r.macro_f1 << '\n'
        << std::defaultfloat << std::setprecision(6);
  });
  save_checkpoint(result.final_checkpoint, (fs::path(a.out) / "model.auck").string());
  save_checkpoint(result.best_checkpoint, (fs::path(a.out) / "best.auck").string());
  out << "steps: " << result.steps << "  best epoch: " << result.best_epoch << '\n';
  return kOk;
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  if (!a.splits.empty() && a.splits.size() != a.checkpoints.size()) {
    throw UsageError("eval: give one --split per --checkpoint");
  }
  const auto records = read_manifest_file(a.manifest);
  const ImageLoader loader = directory_loader(a.data_dir);
  std::vector<std::string> names;
  std::vector<F1Report> rows;
  for (std::size_t i = 0; i < a.checkpoints.size(); ++i) {
    AuModel<float> model = load_model(a.checkpoints[i]);
    std::vector<FrameRecord> eval_records = records;
    std::string name = fs::path(a.checkpoints[i]).stem().string();
    if (!a.splits.empty() && a.splits[i] != "all") {
      const auto splits = make_folds(records, 4, a.seed.value_or(model.config().seed));
      eval_records = select_videos(records, find_split(splits, a.splits[i]).val_videos);
      name = row_label(a.splits[i]);
    }
    rows.push_back(evaluate(model, eval_records, loader));
    names.push_back(name);
  }
  write_metrics_table(out, names, rows);
  return kOk;
}

int cmd_predict(const PredictArgs& a, std::ostream& out) {
  if (a.checkpoint.empty() == a.ensemble.empty()) {
    throw UsageError("predict: give exactly one of --checkpoint or --ensemble");
  }
  const auto records = read_manifest_file(a.manifest);
  const ImageLoader loader = directory_loader(a.data_dir);
  std::vector<ProbVector> probs;
  std::vector<BinaryVector> binary;
  std::vector<ProbVector> weights;
  bool have_weights = false;
  if (!a.checkpoint.empty()) {
    AuModel<float> model = load_model(a.checkpoint);
    const Prediction p = predict(model, records, loader);
    probs = p.probs;
    for (const auto& v : probs) binary.push_back(binarize(v));
    have_weights = a.weights && !p.fusion_weights.empty() && p.fusion_weights.front().has_value();
    if (have_weights) {
      for (const auto& w : p.fusion_weights) weights.push_back(*w);
    }
  } else {
    const auto paths = split_list(a.ensemble);
    if (paths.size() != kEnsembleSize) {
      throw UsageError("predict: --ensemble needs 5 checkpoints, got " + std::to_string(paths.size()));
    }
    std::vector<std::vector<ProbVector>> all;
    for (const auto& path : paths) {
      AuModel<float> model = load_model(path);
      all.push_back(predict(model, records, loader).probs);
    }
    binary = ensemble_vote(all);
    // Reported probabilities are the mean of the five models.
    probs.assign(records.size(), ProbVector{});
    for (const auto& m : all) {
      for (std::size_t i = 0; i < records.size(); ++i)
        for (std::size_t j = 0; j < kNumAus; ++j) probs[i][j] += m[i][j] / double(kEnsembleSize);
    }
  }
  if (a.out.empty()) {
    write_predictions(out, records, probs, binary, have_weights ? &weights : nullptr);
  } else {
    std::ofstream file(a.out, std::ios::trunc);
    if (!file) throw FormatError("cannot write " + a.out);
    write_predictions(file, records, probs, binary, have_weights ? &weights : nullptr);
  }
  return kOk;
}

int cmd_gradcheck(const GradArgs& a, std::ostream& out) {
  char line[160];
  const auto result = run_gradcheck_suite(a.options, [&](const GradCheckCase& c) {
    std::snprintf(line, sizeof line, "%-18s max rel error %.3e  (%zu coordinates, %zu points)  %s", c.name.c_str(),
                  c.report.max_rel_error, c.report.coordinates, c.points,
                  !c.report.valid ? "INVALID" : c.report.passed(a.options.tolerance) ? "ok" : "FAIL");
    out << line << '\n' << std::flush;
  });
  std::snprintf(line, sizeof line, "gradcheck: %s, max rel error %.3e, tolerance %.0e",
                result.passed ? "passed" : "FAILED", result.max_rel_error, a.options.tolerance);
  out << line << '\n';
  return result.passed ? kOk : kNumeric;
}

int cmd_sample_stats(const StatsArgs& a, std::ostream& out) {
  const auto records = read_manifest_file(a.manifest);
  const SamplePlan plan = resample(records, {a.base_stride, a.rare_stride});
  std::array<std::size_t, kNumAus> positives{}, selected{};
  for (const auto& r : records)
    for (std::size_t j = 0; j < kNumAus; ++j) positives[j] += r.labels[j] == 1;
  for (std::size_t i : plan.indices)
    for (std::size_t j = 0; j < kNumAus; ++j) selected[j] += records[i].labels[j] == 1;

  out << "AU      positives  selected\n";
  char line[96];
  for (std::size_t j = 0; j < kNumAus; ++j) {
    std::snprintf(line, sizeof line, "%-6s %10zu %9zu", std::string(kAuNames[j]).c_str(), positives[j], selected[j]);
    out << line << '\n';
  }
  out << "\nvideo      frames  rare  base-picked  rare-picked\n";
  for (const auto& v : plan.videos) {
    std::snprintf(line, sizeof line, "%-10s %6zu %5zu %12zu %12zu", v.video_id.c_str(), v.frames, v.rare_frames,
                  v.base_selected, v.rare_selected);
    out << line << '\n';
  }
  for (const auto& w : plan.warnings) out << "warning: " << w << '\n';
  out << "\nframes: " << records.size() << "\nselected: " << plan.size() << '\n';
  return kOk;
}

int cmd_make_fixtures(FixtureArgs a, std::ostream& out) {
  if (a.no_rare) a.config.rare_aus = false;
  const auto records = write_fixture_dataset(a.config, a.out);
  out << "wrote " << records.size() << " frames to " << a.out << '\n';
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Facial action unit detection: training, evaluation and verification"};
  app.name("audet");
  app.require_subcommand(1, 1);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train one model on a manifest");
  train_cmd->add_option("--config", train_args.config, "JSON config with model and schedule sections")->check(CLI::ExistingFile);
  train_cmd->add_option("--manifest", train_args.manifest, "Annotation manifest")->required();
  train_cmd->add_option("--data-dir", train_args.data_dir, "Directory holding the rasters")->required();
  train_cmd->add_option("--out", train_args.out, "Output directory for checkpoints and history")->required();
  train_cmd->add_option("--split", train_args.split, "official, fold-1..fold-4, or all")->capture_default_str();
  train_cmd->add_option("--seed", train_args.seed, "Overrides the model seed");
  train_cmd->add_option("--base-stride", train_args.base_stride, "Keep every n-th ordinary frame")->capture_default_str();
  train_cmd->add_option("--rare-stride", train_args.rare_stride, "Keep every n-th rare-AU frame")->capture_default_str();

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Per-AU F1 table for one or more checkpoints");
  eval_cmd->add_option("--checkpoint", eval_args.checkpoints, "Checkpoint file (repeatable)")->required();
  eval_cmd->add_option("--manifest", eval_args.manifest, "Annotation manifest")->required();
  eval_cmd->add_option("--data-dir", eval_args.data_dir, "Directory holding the rasters")->required();
  eval_cmd->add_option("--split", eval_args.splits, "Validation split per checkpoint (repeatable)");
  eval_cmd->add_option("--seed", eval_args.seed, "Fold seed (defaults to the checkpoint's model seed)");

  PredictArgs predict_args;
  auto* predict_cmd = app.add_subcommand("predict", "Write per-frame probabilities and binary predictions");
  predict_cmd->add_option("--checkpoint", predict_args.checkpoint, "Single model checkpoint");
  predict_cmd->add_option("--ensemble", predict_args.ensemble, "Five comma-separated checkpoints, majority vote");
  predict_cmd->add_option("--manifest", predict_args.manifest, "Annotation manifest")->required();
  predict_cmd->add_option("--data-dir", predict_args.data_dir, "Directory holding the rasters")->required();
  predict_cmd->add_option("--out", predict_args.out, "CSV output path (default stdout)");
  predict_cmd->add_flag("--weights", predict_args.weights, "Append learned fusion weights w1..w12");

  GradArgs grad_args;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every gradient");
  grad_cmd->add_option("--points", grad_args.options.points, "Random points per case")->capture_default_str();
  grad_cmd->add_option("--max-coordinates", grad_args.options.max_coordinates, "Probed coordinates per tensor")
      ->capture_default_str();
  grad_cmd->add_option("--tolerance", grad_args.options.tolerance, "Maximum relative error")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  grad_cmd->add_option("--seed", grad_args.options.seed, "Seed for points and coordinates")->capture_default_str();

  StatsArgs stats_args;
  auto* stats_cmd = app.add_subcommand("sample-stats", "Per-AU positive counts and the resampling plan");
  stats_cmd->add_option("--manifest", stats_args.manifest, "Annotation manifest")->required();
  stats_cmd->add_option("--base-stride", stats_args.base_stride, "Keep every n-th ordinary frame")->capture_default_str();
  stats_cmd->add_option("--rare-stride", stats_args.rare_stride, "Keep every n-th rare-AU frame")->capture_default_str();

  FixtureArgs fixture_args;
  auto* fixture_cmd = app.add_subcommand("make-fixtures", "Generate the synthetic planted-structure dataset");
  fixture_cmd->add_option("--out", fixture_args.out, "Output directory")->required();
  fixture_cmd->add_option("--videos", fixture_args.config.videos, "Number of videos")->capture_default_str();
  fixture_cmd->add_option("--frames", fixture_args.config.frames, "Frames per video")->capture_default_str();
  fixture_cmd->add_option("--seed", fixture_args.config.seed, "Generator seed")->capture_default_str();
  fixture_cmd->add_option("--size", fixture_args.config.size, "Raster width and height")->capture_default_str();
  fixture_cmd->add_option("--masked-rate", fixture_args.config.masked_rate, "Fraction of unannotated frames")
      ->capture_default_str();
  fixture_cmd->add_flag("--no-rare-aus", fixture_args.no_rare, "Keep AU2/15/23/24/26 inactive");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  try {
    if (*train_cmd) return cmd_train(train_args, out);
    if (*eval_cmd) return cmd_eval(eval_args, out);
    if (*predict_cmd) return cmd_predict(predict_args, out);
    if (*grad_cmd) return cmd_gradcheck(grad_args, out);
    if (*stats_cmd) return cmd_sample_stats(stats_args, out);
    if (*fixture_cmd) return cmd_make_fixtures(fixture_args, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}

}  // namespace audet::cli
