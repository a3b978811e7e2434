#pragma once

#include "ageus/checkpoint.hpp"
#include "ageus/types.hpp"
#include "ageus/unet.hpp"

#include <filesystem>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace ageus {

struct TrainConfig {
  double lr = 1e-3;             // Adam, constant (no schedule)
  int batch_size = 10;
  int epochs_pretrain = 1000;
  int epochs_finetune = 100;
  int epochs_femur = 1000;
  double val_fraction = 0.10;   // carved from the training pool
  int val_every = 2;            // validate at epochs {2, 4, ...}
  double train_fraction = 0.75; // train/test split by study
  uint64_t seed = 0;
  int image_size = 256;         // model input resolution
  int checkpoint_every = 50;    // periodic safety checkpoints

  void validate() const;
};

struct SplitPlan {
  std::vector<std::string> train_ids;
  std::vector<std::string> val_ids;
  std::vector<std::string> test_ids;
};

// Deterministic split BY STUDY: 75/25 train/test, then 10% of the training
// pool reserved for validation. Throws when any part would be empty.
SplitPlan make_split(const std::vector<std::string>& study_ids, const TrainConfig& cfg,
                     uint64_t seed);

struct LogRecord {
  int epoch = 0;
  std::string split;  // "train" or "val"
  double loss = std::numeric_limits<double>::quiet_NaN();
  double dice_head = std::numeric_limits<double>::quiet_NaN();
  double dice_abd = std::numeric_limits<double>::quiet_NaN();
  double femur_loss = std::numeric_limits<double>::quiet_NaN();
};

std::string to_json_line(const LogRecord& rec);

struct TrainOptions {
  std::filesystem::path checkpoint_dir;       // empty disables periodic checkpoints
  std::optional<Checkpoint> resume;           // continue from a periodic checkpoint
  bool verbose = false;
};

struct TrainOutcome {
  int best_epoch = 0;
  double best_metric = 0.0;  // mean val Dice (seg) or val MSE (femur)
  std::vector<LogRecord> log;
  std::set<std::string> accessed_ids;  // split-hygiene audit trail
  std::vector<std::string> warnings;
  Checkpoint best;  // also applied to the model on return
};

// Trains with branch-routed seg loss on every study in `studies`
// (pre-training uses whole external datasets; only a validation fraction is
// carved out). Best checkpoint by mean validation Dice.
TrainOutcome pretrain_seg(SharedUNet& model, const std::vector<StudyRecord>& studies,
                          const TrainConfig& cfg, const TrainOptions& options = {});

// As pretrain_seg but restricted to plan.train/plan.val and run for
// epochs_finetune. The model should carry pre-trained parameters.
TrainOutcome finetune_seg(SharedUNet& model, const std::vector<StudyRecord>& studies,
                          const SplitPlan& plan, const TrainConfig& cfg,
                          const TrainOptions& options = {});

// Distance-map regression from femur endpoint annotations; best checkpoint
// by minimum validation loss.
TrainOutcome train_femur(FemurUNet& model, const std::vector<StudyRecord>& studies,
                         const SplitPlan& plan, const TrainConfig& cfg,
                         const TrainOptions& options = {});

}  // namespace ageus
