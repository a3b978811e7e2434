#include "ageus/training.hpp"

#include "ageus/adam.hpp"
#include "ageus/femur.hpp"
#include "ageus/losses.hpp"
#include "ageus/metrics.hpp"
#include "ageus/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <random>
#include <sstream>

namespace fs = std::filesystem;

namespace ageus {

void TrainConfig::validate() const {
  if (val_fraction <= 0.0 || val_fraction >= 1.0 || train_fraction <= 0.0 || train_fraction >= 1.0)
    throw std::invalid_argument("fractions must lie in (0,1)");
  if (batch_size < 1 || val_every < 1 || image_size < 16 || image_size % 16 != 0)
    throw std::invalid_argument("invalid training config");
}

SplitPlan make_split(const std::vector<std::string>& study_ids, const TrainConfig& cfg,
                     uint64_t seed) {
  cfg.validate();
  if (study_ids.size() < 4) throw std::invalid_argument("need at least 4 studies to split");
  std::vector<std::string> ids = study_ids;
  std::sort(ids.begin(), ids.end());
  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);

  const long n = static_cast<long>(ids.size());
  const long n_test = std::lround(n * (1.0 - cfg.train_fraction));
  const long pool = n - n_test;
  const long n_val = std::lround(pool * cfg.val_fraction);
  const long n_train = pool - n_val;
  if (n_test < 1 || n_val < 1 || n_train < 1)
    throw std::runtime_error("too few studies for nonempty train/val/test splits");

  SplitPlan plan;
  plan.test_ids.assign(ids.begin(), ids.begin() + n_test);
  plan.val_ids.assign(ids.begin() + n_test, ids.begin() + n_test + n_val);
  plan.train_ids.assign(ids.begin() + n_test + n_val, ids.end());
  return plan;
}

std::string to_json_line(const LogRecord& rec) {
  std::ostringstream os;
  os << "{\"epoch\":" << rec.epoch << ",\"split\":\"" << rec.split << "\"";
  auto field = [&os](const char* name, double v) {
    if (!std::isnan(v)) os << ",\"" << name << "\":" << v;
  };
  field("loss", rec.loss);
  field("dice_head", rec.dice_head);
  field("dice_abd", rec.dice_abd);
  field("femur_loss", rec.femur_loss);
  os << "}";
  return os.str();
}

namespace {

uint64_t epoch_seed(uint64_t seed, int epoch) {
  uint64_t x = seed * 0x9E3779B97F4A7C15ull + static_cast<uint64_t>(epoch) + 1;
  x ^= x >> 33;
  x *= 0xFF51AFD7ED558CCDull;
  x ^= x >> 33;
  return x;
}

struct SegSample {
  std::string study_id;
  Structure branch = Structure::Head;
  Grid image;  // normalized, model resolution
  Grid mask;
};

struct FemurSample {
  std::string study_id;
  Grid image;
  Grid target;  // distance map at model resolution
};

void append_seg_samples(const StudyRecord& rec, int image_size, std::vector<SegSample>* out,
                        std::set<std::string>* accessed) {
  auto add = [&](const std::optional<UltrasoundImage>& img,
                 const std::optional<SegmentationMask>& mask, Structure branch) {
    if (!img || !mask) return;
    const auto res = resize_to_model(normalize_intensity(*img), mask, image_size);
    out->push_back({rec.study_id, branch, res.image.pixels, res.mask->pixels});
    accessed->insert(rec.study_id);
  };
  add(rec.head_image, rec.head_mask, Structure::Head);
  add(rec.abdomen_image, rec.abdomen_mask, Structure::Abdomen);
}

void append_femur_samples(const StudyRecord& rec, int image_size, std::vector<FemurSample>* out,
                          std::set<std::string>* accessed) {
  if (!rec.femur_image || !rec.femur_annotation) return;
  const auto res = resize_to_model(normalize_intensity(*rec.femur_image), std::nullopt, image_size);
  FemurAnnotation ann;
  ann.p1 = {rec.femur_annotation->p1.row / res.scale_row,
            rec.femur_annotation->p1.col / res.scale_col};
  ann.p2 = {rec.femur_annotation->p2.row / res.scale_row,
            rec.femur_annotation->p2.col / res.scale_col};
  const DistanceMap target = make_distance_map(ann, image_size, image_size);
  out->push_back({rec.study_id, res.image.pixels, target.values});
  accessed->insert(rec.study_id);
}

Tensor batch_images(const std::vector<const Grid*>& images) {
  const int s = images[0]->rows;
  Tensor x(static_cast<int>(images.size()), 1, s, s);
  for (size_t i = 0; i < images.size(); ++i) {
    const Grid& g = *images[i];
    std::copy(g.begin(), g.end(), x.sample(static_cast<int>(i)));
  }
  return x;
}

// Mean per-branch hard Dice over validation samples; returns per-branch means
// and the cross-branch mean used for checkpoint selection.
struct ValDice {
  double head = std::numeric_limits<double>::quiet_NaN();
  double abd = std::numeric_limits<double>::quiet_NaN();
  double mean = 0.0;
};

ValDice validate_seg(SharedUNet& model, const std::vector<SegSample>& val, int batch_size) {
  double sum_head = 0.0, sum_abd = 0.0;
  int n_head = 0, n_abd = 0;
  for (size_t start = 0; start < val.size(); start += batch_size) {
    const size_t end = std::min(val.size(), start + batch_size);
    std::vector<const Grid*> imgs;
    for (size_t i = start; i < end; ++i) imgs.push_back(&val[i].image);
    const auto out = model.forward(batch_images(imgs));
    for (size_t i = start; i < end; ++i) {
      const int s = static_cast<int>(i - start);
      const bool is_head = val[i].branch == Structure::Head;
      SegmentationMask pred{logits_to_mask(is_head ? out.head_logits : out.abd_logits, s),
                            val[i].branch};
      SegmentationMask truth{val[i].mask, val[i].branch};
      const double d = dice(pred, truth);
      if (is_head) {
        sum_head += d;
        ++n_head;
      } else {
        sum_abd += d;
        ++n_abd;
      }
    }
  }
  ValDice v;
  double total = 0.0;
  int branches = 0;
  if (n_head > 0) {
    v.head = sum_head / n_head;
    total += v.head;
    ++branches;
  }
  if (n_abd > 0) {
    v.abd = sum_abd / n_abd;
    total += v.abd;
    ++branches;
  }
  v.mean = branches > 0 ? total / branches : 0.0;
  return v;
}

template <typename Model>
void maybe_save_periodic(const TrainOptions& options, const TrainConfig& cfg,
                         const std::string& arch, Model& model, const Adam& opt, int epoch) {
  if (options.checkpoint_dir.empty() || cfg.checkpoint_every < 1) return;
  if (epoch % cfg.checkpoint_every != 0) return;
  fs::create_directories(options.checkpoint_dir);
  char name[64];
  std::snprintf(name, sizeof(name), "periodic_%05d.ckpt", epoch);
  save_checkpoint(options.checkpoint_dir / name,
                  Checkpoint::capture(arch, model.config(), cfg.image_size, epoch, 0.0,
                                      model.parameters(), &opt));
}

TrainOutcome train_seg_loop(SharedUNet& model, std::vector<SegSample> train,
                            std::vector<SegSample> val, int epochs, const TrainConfig& cfg,
                            const TrainOptions& options, std::set<std::string> accessed) {
  TrainOutcome out;
  out.accessed_ids = std::move(accessed);
  if (train.empty()) throw std::runtime_error("no training samples");

  const bool has_head = std::any_of(train.begin(), train.end(),
                                    [](const auto& s) { return s.branch == Structure::Head; });
  const bool has_abd = std::any_of(train.begin(), train.end(),
                                   [](const auto& s) { return s.branch == Structure::Abdomen; });
  if (!has_head) out.warnings.push_back("no head-tagged samples; training single branch");
  if (!has_abd) out.warnings.push_back("no abdomen-tagged samples; training single branch");

  Adam opt(model.parameters(), cfg.lr);
  int start_epoch = 0;
  if (options.resume) {
    options.resume->apply(model);
    if (options.resume->adam)
      opt.restore(options.resume->adam->steps, options.resume->adam->m, options.resume->adam->v);
    start_epoch = options.resume->epoch;
  }

  double best_metric = -1.0;
  int best_epoch = 0;
  Checkpoint best = Checkpoint::capture("shared", model.config(), cfg.image_size, 0, 0.0,
                                        model.parameters());

  std::vector<size_t> order(train.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = start_epoch + 1; epoch <= epochs; ++epoch) {
    std::mt19937_64 rng(epoch_seed(cfg.seed, epoch));
    std::shuffle(order.begin(), order.end(), rng);

    double epoch_loss = 0.0;
    size_t seen = 0;
    for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const size_t end = std::min(order.size(), start + cfg.batch_size);
      const int bn = static_cast<int>(end - start);
      std::vector<const Grid*> imgs;
      for (size_t i = start; i < end; ++i) imgs.push_back(&train[order[i]].image);
      const Tensor x = batch_images(imgs);

      model.zero_grad();
      auto logits = model.forward(x);
      Tensor d_head(bn, 2, x.h, x.w), d_abd(bn, 2, x.h, x.w);
      const double w = 1.0 / bn;
      double batch_loss = 0.0;
      for (int i = 0; i < bn; ++i) {
        const auto& s = train[order[start + i]];
        if (s.branch == Structure::Head)
          batch_loss += seg_loss_sample(logits.head_logits, i, s.mask, &d_head, w);
        else
          batch_loss += seg_loss_sample(logits.abd_logits, i, s.mask, &d_abd, w);
      }
      model.backward(d_head, d_abd);
      opt.step();
      epoch_loss += batch_loss;
      seen += bn;
    }

    out.log.push_back({epoch, "train", epoch_loss / static_cast<double>(seen)});
    if (options.verbose)
      std::cerr << "[seg] epoch " << epoch << " train loss "
                << epoch_loss / static_cast<double>(seen) << "\n";

    if (epoch % cfg.val_every == 0 && !val.empty()) {
      const ValDice v = validate_seg(model, val, cfg.batch_size);
      LogRecord rec{epoch, "val"};
      rec.dice_head = v.head;
      rec.dice_abd = v.abd;
      out.log.push_back(rec);
      if (options.verbose)
        std::cerr << "[seg] epoch " << epoch << " val dice head " << v.head << " abd " << v.abd
                  << "\n";
      if (v.mean > best_metric) {
        best_metric = v.mean;
        best_epoch = epoch;
        best = Checkpoint::capture("shared", model.config(), cfg.image_size, epoch, v.mean,
                                   model.parameters());
      }
    }
    maybe_save_periodic(options, cfg, "shared", model, opt, epoch);
  }

  if (best_metric < 0.0) {
    // never validated: keep the final parameters
    best = Checkpoint::capture("shared", model.config(), cfg.image_size, epochs, 0.0,
                               model.parameters());
    best_epoch = epochs;
    best_metric = 0.0;
  }
  best.apply(model);
  out.best_epoch = best_epoch;
  out.best_metric = best_metric;
  out.best = std::move(best);
  return out;
}

// deterministic validation carve for pre-training (fraction of studies)
void carve_val_studies(std::vector<StudyRecord> studies, const TrainConfig& cfg,
                       std::vector<StudyRecord>* train, std::vector<StudyRecord>* val) {
  std::sort(studies.begin(), studies.end(),
            [](const auto& a, const auto& b) { return a.study_id < b.study_id; });
  std::mt19937_64 rng(epoch_seed(cfg.seed, -1));
  std::shuffle(studies.begin(), studies.end(), rng);
  const size_t n_val = std::max<size_t>(1, std::llround(studies.size() * cfg.val_fraction));
  for (size_t i = 0; i < studies.size(); ++i)
    (i < n_val ? *val : *train).push_back(std::move(studies[i]));
}

std::vector<StudyRecord> pick_by_ids(const std::vector<StudyRecord>& studies,
                                     const std::vector<std::string>& ids) {
  std::vector<StudyRecord> out;
  for (const auto& rec : studies)
    if (std::find(ids.begin(), ids.end(), rec.study_id) != ids.end()) out.push_back(rec);
  return out;
}

}  // namespace

TrainOutcome pretrain_seg(SharedUNet& model, const std::vector<StudyRecord>& studies,
                          const TrainConfig& cfg, const TrainOptions& options) {
  cfg.validate();
  std::vector<StudyRecord> train_studies, val_studies;
  carve_val_studies(studies, cfg, &train_studies, &val_studies);

  std::set<std::string> accessed;
  std::vector<SegSample> train, val;
  for (const auto& rec : train_studies) append_seg_samples(rec, cfg.image_size, &train, &accessed);
  for (const auto& rec : val_studies) append_seg_samples(rec, cfg.image_size, &val, &accessed);
  return train_seg_loop(model, std::move(train), std::move(val), cfg.epochs_pretrain, cfg, options,
                        std::move(accessed));
}

TrainOutcome finetune_seg(SharedUNet& model, const std::vector<StudyRecord>& studies,
                          const SplitPlan& plan, const TrainConfig& cfg,
                          const TrainOptions& options) {
  cfg.validate();
  std::set<std::string> accessed;
  std::vector<SegSample> train, val;
  for (const auto& rec : pick_by_ids(studies, plan.train_ids))
    append_seg_samples(rec, cfg.image_size, &train, &accessed);
  for (const auto& rec : pick_by_ids(studies, plan.val_ids))
    append_seg_samples(rec, cfg.image_size, &val, &accessed);
  return train_seg_loop(model, std::move(train), std::move(val), cfg.epochs_finetune, cfg, options,
                        std::move(accessed));
}

TrainOutcome train_femur(FemurUNet& model, const std::vector<StudyRecord>& studies,
                         const SplitPlan& plan, const TrainConfig& cfg,
                         const TrainOptions& options) {
  cfg.validate();
  std::set<std::string> accessed;
  std::vector<FemurSample> train, val;
  for (const auto& rec : pick_by_ids(studies, plan.train_ids))
    append_femur_samples(rec, cfg.image_size, &train, &accessed);
  for (const auto& rec : pick_by_ids(studies, plan.val_ids))
    append_femur_samples(rec, cfg.image_size, &val, &accessed);
  if (train.empty()) throw std::runtime_error("no femur annotations in the training split");

  TrainOutcome out;
  out.accessed_ids = std::move(accessed);

  Adam opt(model.parameters(), cfg.lr);
  int start_epoch = 0;
  if (options.resume) {
    options.resume->apply(model);
    if (options.resume->adam)
      opt.restore(options.resume->adam->steps, options.resume->adam->m, options.resume->adam->v);
    start_epoch = options.resume->epoch;
  }

  double best_metric = std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  Checkpoint best =
      Checkpoint::capture("femur", model.config(), cfg.image_size, 0, 0.0, model.parameters());

  auto eval_val = [&]() {
    double total = 0.0;
    size_t n = 0;
    for (size_t start = 0; start < val.size(); start += cfg.batch_size) {
      const size_t end = std::min(val.size(), start + cfg.batch_size);
      std::vector<const Grid*> imgs;
      for (size_t i = start; i < end; ++i) imgs.push_back(&val[i].image);
      const Tensor pred = model.forward(batch_images(imgs));
      for (size_t i = start; i < end; ++i) {
        const int s = static_cast<int>(i - start);
        Tensor p1(1, 1, pred.h, pred.w), t1(1, 1, pred.h, pred.w);
        std::copy(pred.sample(s), pred.sample(s) + pred.plane(), p1.v.begin());
        const Grid& g = val[i].target;
        std::copy(g.begin(), g.end(), t1.v.begin());
        total += femur_loss(p1, t1);
        ++n;
      }
    }
    return n > 0 ? total / static_cast<double>(n) : 0.0;
  };

  std::vector<size_t> order(train.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = start_epoch + 1; epoch <= cfg.epochs_femur; ++epoch) {
    std::mt19937_64 rng(epoch_seed(cfg.seed, epoch));
    std::shuffle(order.begin(), order.end(), rng);

    double epoch_loss = 0.0;
    size_t seen = 0;
    for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const size_t end = std::min(order.size(), start + cfg.batch_size);
      const int bn = static_cast<int>(end - start);
      std::vector<const Grid*> imgs;
      for (size_t i = start; i < end; ++i) imgs.push_back(&train[order[i]].image);
      const Tensor x = batch_images(imgs);

      Tensor target(bn, 1, x.h, x.w);
      for (int i = 0; i < bn; ++i) {
        const Grid& g = train[order[start + i]].target;
        std::copy(g.begin(), g.end(), target.sample(i));
      }

      model.zero_grad();
      const Tensor pred = model.forward(x);
      Tensor d_pred(bn, 1, x.h, x.w);
      const double loss = femur_loss(pred, target, &d_pred);
      model.backward(d_pred);
      opt.step();
      epoch_loss += loss * bn;
      seen += bn;
    }

    LogRecord train_rec{epoch, "train"};
    train_rec.femur_loss = epoch_loss / static_cast<double>(seen);
    out.log.push_back(train_rec);
    if (options.verbose)
      std::cerr << "[femur] epoch " << epoch << " train mse " << train_rec.femur_loss << "\n";

    if (epoch % cfg.val_every == 0 && !val.empty()) {
      const double v = eval_val();
      LogRecord rec{epoch, "val"};
      rec.femur_loss = v;
      out.log.push_back(rec);
      if (options.verbose) std::cerr << "[femur] epoch " << epoch << " val mse " << v << "\n";
      if (v < best_metric) {
        best_metric = v;
        best_epoch = epoch;
        best = Checkpoint::capture("femur", model.config(), cfg.image_size, epoch, v,
                                   model.parameters());
      }
    }
    maybe_save_periodic(options, cfg, "femur", model, opt, epoch);
  }

  if (!std::isfinite(best_metric) || best_epoch == 0) {
    best = Checkpoint::capture("femur", model.config(), cfg.image_size, cfg.epochs_femur, 0.0,
                               model.parameters());
    best_epoch = cfg.epochs_femur;
    best_metric = 0.0;
  }
  best.apply(model);
  out.best_epoch = best_epoch;
  out.best_metric = best_metric;
  out.best = std::move(best);
  return out;
}

}  // namespace ageus
