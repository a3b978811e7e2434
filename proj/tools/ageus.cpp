// Command-line front end: synthetic data generation, training, per-study
// estimation, and report evaluation.
#include "ageus/checkpoint.hpp"
#include "ageus/dataset.hpp"
#include "ageus/pipeline.hpp"
#include "ageus/synth.hpp"
#include "ageus/training.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace ageus;

namespace {

void write_log(const fs::path& file, const TrainOutcome& outcome) {
  if (file.empty()) return;
  std::ofstream os(file);
  for (const auto& rec : outcome.log) os << to_json_line(rec) << "\n";
}

std::vector<std::string> study_ids(const std::vector<StudyRecord>& studies) {
  std::vector<std::string> ids;
  for (const auto& s : studies) ids.push_back(s.study_id);
  return ids;
}

int run_synth(const fs::path& out, int n, uint64_t seed, int image_size) {
  PhantomSpec spec;
  spec.seed = seed;
  spec.image_size = image_size;
  const fs::path manifest = gen_dataset(spec, n, out);
  std::cout << "wrote " << n << " studies, manifest " << manifest.string() << "\n";
  return 0;
}

struct TrainArgs {
  std::string mode;
  fs::path data, out, ckpt_in, ckpt_dir, log;
  int epochs = -1;
  int image_size = 256;
  int base_width = 32;
  int batch_size = 10;
  double lr = 1e-3;
  uint64_t seed = 0;
  bool verbose = false;
};

int run_train(const TrainArgs& args) {
  TrainConfig cfg;
  cfg.seed = args.seed;
  cfg.image_size = args.image_size;
  cfg.batch_size = args.batch_size;
  cfg.lr = args.lr;
  if (args.epochs > 0) {
    cfg.epochs_pretrain = args.epochs;
    cfg.epochs_finetune = args.epochs;
    cfg.epochs_femur = args.epochs;
  }

  TrainOptions options;
  options.checkpoint_dir = args.ckpt_dir;
  options.verbose = args.verbose;

  const auto studies = load_study_dir(args.data);
  NetConfig net_cfg;
  net_cfg.base_width = args.base_width;

  TrainOutcome outcome;
  if (args.mode == "pretrain") {
    SharedUNet model(net_cfg);
    if (!args.ckpt_in.empty()) options.resume = load_checkpoint(args.ckpt_in);
    outcome = pretrain_seg(model, studies, cfg, options);
    save_checkpoint(args.out, outcome.best);
  } else if (args.mode == "finetune") {
    if (args.ckpt_in.empty())
      throw CLI::ValidationError("--ckpt-in", "finetune requires a pre-trained checkpoint");
    const Checkpoint start = load_checkpoint(args.ckpt_in);
    SharedUNet model(start.config);
    start.apply(model);
    const SplitPlan plan = make_split(study_ids(studies), cfg, cfg.seed);
    outcome = finetune_seg(model, studies, plan, cfg, options);
    save_checkpoint(args.out, outcome.best);
  } else if (args.mode == "femur") {
    FemurUNet model(net_cfg);
    if (!args.ckpt_in.empty()) options.resume = load_checkpoint(args.ckpt_in);
    const SplitPlan plan = make_split(study_ids(studies), cfg, cfg.seed);
    outcome = train_femur(model, studies, plan, cfg, options);
    save_checkpoint(args.out, outcome.best);
  } else {
    throw CLI::ValidationError("--mode", "must be pretrain, finetune, or femur");
  }

  write_log(args.log, outcome);
  for (const auto& w : outcome.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "best epoch " << outcome.best_epoch << " metric " << outcome.best_metric
            << " -> " << args.out.string() << "\n";
  return 0;
}

int run_estimate(const fs::path& study_dir, const fs::path& seg_ckpt, const fs::path& femur_ckpt,
                 const fs::path& out, bool oracle) {
  EstimateOptions options;
  options.oracle = oracle;

  std::unique_ptr<SharedUNet> seg;
  std::unique_ptr<FemurUNet> femur;
  if (!oracle) {
    if (seg_ckpt.empty() || femur_ckpt.empty())
      throw CLI::ValidationError("--seg-ckpt/--femur-ckpt",
                                 "checkpoints required unless --oracle is given");
    const Checkpoint sc = load_checkpoint(seg_ckpt);
    seg = std::make_unique<SharedUNet>(sc.config);
    sc.apply(*seg);
    options.seg_image_size = sc.image_size;
    const Checkpoint fc = load_checkpoint(femur_ckpt);
    femur = std::make_unique<FemurUNet>(fc.config);
    fc.apply(*femur);
    options.femur_image_size = fc.image_size;
  }

  std::map<std::string, std::string> load_errors;
  const auto studies = load_study_dir(study_dir, &load_errors);
  auto rows = estimate_dataset(studies, seg.get(), femur.get(), options);
  for (const auto& [id, msg] : load_errors) {
    StudyEstimate bad;
    bad.study_id = id;
    bad.error = msg;
    rows.push_back(std::move(bad));
  }
  std::sort(rows.begin(), rows.end(),
            [](const auto& a, const auto& b) { return a.study_id < b.study_id; });
  write_report(out, rows);
  std::cout << "wrote report for " << rows.size() << " studies -> " << out.string() << "\n";
  return 0;
}

int run_evaluate(const fs::path& pred, const fs::path& truth, const fs::path& pred_b,
                 const fs::path& out) {
  const auto p = read_report(pred);
  const auto t = read_report(truth);
  std::string text = format_evaluation(evaluate_reports(p, t));
  if (!pred_b.empty()) {
    const auto r = compare_reports(p, read_report(pred_b), t);
    std::ostringstream os;
    os << "wilcoxon_ga_abs_error,statistic=" << r.statistic << ",p=" << r.p_value << "\n";
    text += os.str();
  }
  if (out.empty()) {
    std::cout << text;
  } else {
    std::ofstream os(out);
    os << text;
    std::cout << "wrote evaluation -> " << out.string() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fetal biometry and gestational-age estimation pipeline"};
  app.require_subcommand(1);
  app.set_config("--config")->configurable(false);

  auto* synth = app.add_subcommand("synth", "generate a synthetic phantom dataset");
  fs::path synth_out;
  int synth_n = 0;
  uint64_t synth_seed = 0;
  int synth_size = 256;
  synth->add_option("--out", synth_out, "output dataset directory")->required();
  synth->add_option("--n", synth_n, "number of studies")->required()
      ->check(CLI::PositiveNumber);
  synth->add_option("--seed", synth_seed, "generator seed");
  synth->add_option("--image-size", synth_size, "generated image size");

  auto* train = app.add_subcommand("train", "train the segmentation or femur model");
  TrainArgs ta;
  train->add_option("--mode", ta.mode, "pretrain | finetune | femur")->required();
  train->add_option("--data", ta.data, "dataset directory")->required()
      ->check(CLI::ExistingDirectory);
  train->add_option("--out", ta.out, "output checkpoint path")->required();
  train->add_option("--ckpt-in", ta.ckpt_in, "input checkpoint (finetune start / resume)");
  train->add_option("--ckpt-dir", ta.ckpt_dir, "directory for periodic checkpoints");
  train->add_option("--log", ta.log, "training log (one JSON object per line)");
  train->add_option("--epochs", ta.epochs, "override the epoch count");
  train->add_option("--image-size", ta.image_size, "model input resolution");
  train->add_option("--base-width", ta.base_width, "encoder base channel width");
  train->add_option("--batch-size", ta.batch_size, "batch size");
  train->add_option("--lr", ta.lr, "Adam learning rate");
  train->add_option("--seed", ta.seed, "training seed");
  train->add_flag("--verbose", ta.verbose, "per-epoch progress on stderr");

  auto* estimate = app.add_subcommand("estimate", "estimate biometrics and gestational age");
  fs::path est_study, est_seg, est_femur, est_out;
  bool est_oracle = false;
  estimate->add_option("--study", est_study, "study/dataset directory")->required()
      ->check(CLI::ExistingDirectory);
  estimate->add_option("--seg-ckpt", est_seg, "segmentation checkpoint");
  estimate->add_option("--femur-ckpt", est_femur, "femur checkpoint");
  estimate->add_option("--out", est_out, "output report CSV")->required();
  estimate->add_flag("--oracle", est_oracle, "use ground-truth masks/annotations");

  auto* evaluate = app.add_subcommand("evaluate", "evaluate a report against reference values");
  fs::path ev_pred, ev_truth, ev_pred_b, ev_out;
  evaluate->add_option("--pred", ev_pred, "prediction report CSV")->required()
      ->check(CLI::ExistingFile);
  evaluate->add_option("--truth", ev_truth, "reference report CSV")->required()
      ->check(CLI::ExistingFile);
  evaluate->add_option("--pred-b", ev_pred_b, "second prediction report for paired comparison")
      ->check(CLI::ExistingFile);
  evaluate->add_option("--out", ev_out, "output file (stdout when absent)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return run_synth(synth_out, synth_n, synth_seed, synth_size);
    if (train->parsed()) return run_train(ta);
    if (estimate->parsed()) return run_estimate(est_study, est_seg, est_femur, est_out, est_oracle);
    if (evaluate->parsed()) return run_evaluate(ev_pred, ev_truth, ev_pred_b, ev_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
