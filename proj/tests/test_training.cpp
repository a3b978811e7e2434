#include "ageus/training.hpp"

#include "ageus/dataset.hpp"
#include "ageus/synth.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

using namespace ageus;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> numbered_ids(int n) {
  std::vector<std::string> ids;
  for (int i = 0; i < n; ++i) ids.push_back("study_" + std::to_string(1000 + i));
  return ids;
}

const std::vector<StudyRecord>& corpus() {
  static const std::vector<StudyRecord> studies = [] {
    PhantomSpec spec;
    spec.image_size = 64;
    spec.seed = 314;
    const auto dir = fs::temp_directory_path() / "ageus_training_test_corpus";
    fs::remove_all(dir);
    gen_dataset(spec, 8, dir);
    auto loaded = load_study_dir(dir);
    fs::remove_all(dir);
    return loaded;
  }();
  return studies;
}

TrainConfig smoke_cfg() {
  TrainConfig cfg;
  cfg.image_size = 32;
  cfg.batch_size = 4;
  cfg.epochs_pretrain = 4;
  cfg.epochs_finetune = 4;
  cfg.epochs_femur = 4;
  cfg.seed = 5;
  return cfg;
}

NetConfig small_net() {
  NetConfig net;
  net.base_width = 8;
  return net;
}

std::vector<const LogRecord*> records_of(const TrainOutcome& out, const std::string& split) {
  std::vector<const LogRecord*> recs;
  for (const auto& r : out.log)
    if (r.split == split) recs.push_back(&r);
  return recs;
}

}  // namespace

TEST_CASE("make_split partitions studies 75/25 with a validation carve") {
  TrainConfig cfg;
  const auto ids = numbered_ids(114);
  const auto plan = make_split(ids, cfg, 7);
  CHECK(plan.test_ids.size() == 29);   // round(114 * 0.25)
  CHECK(plan.val_ids.size() == 9);     // round(85 * 0.10)
  CHECK(plan.train_ids.size() == 76);

  std::set<std::string> all;
  all.insert(plan.train_ids.begin(), plan.train_ids.end());
  all.insert(plan.val_ids.begin(), plan.val_ids.end());
  all.insert(plan.test_ids.begin(), plan.test_ids.end());
  CHECK(all.size() == 114);  // disjoint partition covering every study

  // Deterministic in the seed and invariant to input order.
  auto shuffled = ids;
  std::reverse(shuffled.begin(), shuffled.end());
  const auto again = make_split(shuffled, cfg, 7);
  CHECK(again.train_ids == plan.train_ids);
  CHECK(again.val_ids == plan.val_ids);
  CHECK(again.test_ids == plan.test_ids);

  const auto other = make_split(ids, cfg, 8);
  CHECK(other.test_ids != plan.test_ids);
}

TEST_CASE("make_split rejects tiny cohorts") {
  TrainConfig cfg;
  CHECK_THROWS_AS(make_split(numbered_ids(3), cfg, 1), std::invalid_argument);
  CHECK_NOTHROW(make_split(numbered_ids(4), cfg, 1));
}

TEST_CASE("log records serialize compactly") {
  LogRecord rec;
  rec.epoch = 3;
  rec.split = "train";
  rec.loss = 0.5;
  CHECK(to_json_line(rec) == "{\"epoch\":3,\"split\":\"train\",\"loss\":0.5}");

  LogRecord val;
  val.epoch = 4;
  val.split = "val";
  val.dice_head = 0.25;
  val.dice_abd = 0.75;
  CHECK(to_json_line(val) ==
        "{\"epoch\":4,\"split\":\"val\",\"dice_head\":0.25,\"dice_abd\":0.75}");
}

TEST_CASE("pretraining logs and selects the best validation epoch") {
  SharedUNet model(small_net());
  const auto cfg = smoke_cfg();
  const auto out = pretrain_seg(model, corpus(), cfg);

  const auto train_recs = records_of(out, "train");
  const auto val_recs = records_of(out, "val");
  CHECK(train_recs.size() == 4);
  REQUIRE(val_recs.size() == 2);  // epochs 2 and 4
  CHECK(val_recs[0]->epoch == 2);
  CHECK(val_recs[1]->epoch == 4);

  double best = 0.0;
  for (const auto* r : val_recs)
    best = std::max(best, 0.5 * (r->dice_head + r->dice_abd));
  CHECK(out.best_metric == doctest::Approx(best).epsilon(1e-12));
  CHECK(out.best_metric >= 0.5 * (val_recs[0]->dice_head + val_recs[0]->dice_abd));
  CHECK(out.best.arch == "shared");
  CHECK(out.warnings.empty());
  CHECK(out.accessed_ids.size() == corpus().size());
}

TEST_CASE("finetuning never touches held-out studies") {
  std::vector<std::string> ids;
  for (const auto& s : corpus()) ids.push_back(s.study_id);
  const auto cfg = smoke_cfg();
  const auto plan = make_split(ids, cfg, cfg.seed);

  SharedUNet model(small_net());
  const auto out = finetune_seg(model, corpus(), plan, cfg);

  for (const auto& id : plan.test_ids) CHECK(out.accessed_ids.count(id) == 0);
  for (const auto& id : out.accessed_ids) {
    const bool in_train = std::count(plan.train_ids.begin(), plan.train_ids.end(), id) > 0;
    const bool in_val = std::count(plan.val_ids.begin(), plan.val_ids.end(), id) > 0;
    CHECK((in_train || in_val));
  }
}

TEST_CASE("training resumes exactly from a periodic checkpoint") {
  const auto ckpt_dir = fs::temp_directory_path() / "ageus_training_test_resume";
  fs::remove_all(ckpt_dir);

  auto cfg = smoke_cfg();
  cfg.checkpoint_every = 2;

  SharedUNet full(small_net());
  TrainOptions opts;
  opts.checkpoint_dir = ckpt_dir;
  const auto full_out = pretrain_seg(full, corpus(), cfg, opts);

  const auto periodic = load_checkpoint(ckpt_dir / "periodic_00002.ckpt");
  CHECK(periodic.epoch == 2);
  REQUIRE(periodic.adam.has_value());

  SharedUNet resumed(small_net());
  TrainOptions resume_opts;
  resume_opts.resume = periodic;
  const auto resumed_out = pretrain_seg(resumed, corpus(), cfg, resume_opts);

  // Epochs 3 and 4 replay identically after the resume.
  const auto full_val = records_of(full_out, "val");
  const auto res_val = records_of(resumed_out, "val");
  REQUIRE(res_val.size() == 1);
  REQUIRE(full_val.size() == 2);
  CHECK(res_val[0]->epoch == 4);
  CHECK(res_val[0]->dice_head == doctest::Approx(full_val[1]->dice_head).epsilon(1e-12));
  CHECK(res_val[0]->dice_abd == doctest::Approx(full_val[1]->dice_abd).epsilon(1e-12));
  fs::remove_all(ckpt_dir);
}

TEST_CASE("femur training minimizes validation loss and audits access") {
  std::vector<std::string> ids;
  for (const auto& s : corpus()) ids.push_back(s.study_id);
  const auto cfg = smoke_cfg();
  const auto plan = make_split(ids, cfg, cfg.seed);

  FemurUNet model(small_net());
  const auto out = train_femur(model, corpus(), plan, cfg);

  const auto val_recs = records_of(out, "val");
  REQUIRE(!val_recs.empty());
  double best = std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  for (const auto* r : val_recs)
    if (r->femur_loss < best) {
      best = r->femur_loss;
      best_epoch = r->epoch;
    }
  CHECK(out.best_metric == doctest::Approx(best).epsilon(1e-12));
  CHECK(out.best_epoch == best_epoch);
  CHECK(out.best.arch == "femur");
  for (const auto& id : plan.test_ids) CHECK(out.accessed_ids.count(id) == 0);
}

TEST_CASE("femur training demands annotations") {
  auto stripped = corpus();
  for (auto& s : stripped) s.femur_annotation.reset();
  std::vector<std::string> ids;
  for (const auto& s : stripped) ids.push_back(s.study_id);
  const auto cfg = smoke_cfg();
  const auto plan = make_split(ids, cfg, cfg.seed);
  FemurUNet model(small_net());
  CHECK_THROWS_WITH_AS(train_femur(model, stripped, plan, cfg),
                       "no femur annotations in the training split", std::runtime_error);
}

TEST_CASE("single-plane corpora trigger a single-branch warning") {
  auto heads_only = corpus();
  for (auto& s : heads_only) {
    s.abdomen_image.reset();
    s.abdomen_mask.reset();
  }
  SharedUNet model(small_net());
  auto cfg = smoke_cfg();
  cfg.epochs_pretrain = 2;
  const auto out = pretrain_seg(model, heads_only, cfg);
  REQUIRE(out.warnings.size() == 1);
  CHECK(out.warnings[0].find("single branch") != std::string::npos);
  CHECK(out.warnings[0].find("abdomen") != std::string::npos);
}
