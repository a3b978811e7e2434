#include "ageus/unet.hpp"

#include <stdexcept>

namespace ageus {

void NetConfig::validate() const {
  if (depth != 4) throw std::invalid_argument("depth is fixed at 4");
  if (base_width < 8 || (base_width & (base_width - 1)) != 0)
    throw std::invalid_argument("base_width must be a power of two >= 8");
  if (in_channels < 1) throw std::invalid_argument("in_channels must be >= 1");
}

void check_input_dims(const Tensor& x) {
  if (x.h % 16 != 0 || x.w % 16 != 0)
    throw std::invalid_argument("input spatial dims must be divisible by 16");
}

// ---- DoubleConv ----

Tensor DoubleConv::forward(const Tensor& x) {
  Tensor t = act1_.forward(norm1_.forward(conv1_.forward(x)));
  return act2_.forward(norm2_.forward(conv2_.forward(t)));
}

Tensor DoubleConv::backward(const Tensor& dy) {
  Tensor d = conv2_.backward(norm2_.backward(act2_.backward(dy)));
  return conv1_.backward(norm1_.backward(act1_.backward(d)));
}

void DoubleConv::init(std::mt19937_64& rng) {
  conv1_.init(rng);
  conv2_.init(rng);
}

std::vector<Param*> DoubleConv::params() {
  auto p = conv1_.params();
  auto p2 = conv2_.params();
  p.insert(p.end(), p2.begin(), p2.end());
  return p;
}

// ---- Encoder ----

Encoder::Encoder(const NetConfig& cfg) {
  const int w = cfg.base_width;
  stem_ = std::make_unique<DoubleConv>(cfg.in_channels, w, w, cfg.leaky_slope);
  pools_.resize(4);
  int ch = w;
  for (int i = 0; i < 4; ++i) {
    blocks_.push_back(std::make_unique<DoubleConv>(ch, 2 * ch, 2 * ch, cfg.leaky_slope));
    ch *= 2;
  }
}

Encoder::Features Encoder::forward(const Tensor& x) {
  Features f;
  Tensor t = stem_->forward(x);
  f.skips[0] = t;
  for (int i = 0; i < 4; ++i) {
    t = blocks_[i]->forward(pools_[i].forward(t));
    if (i < 3)
      f.skips[i + 1] = t;
    else
      f.bottleneck = t;
  }
  return f;
}

Tensor Encoder::backward(const Tensor& d_bottleneck, std::array<Tensor, 4>& d_skips) {
  Tensor d = d_bottleneck;
  for (int i = 3; i >= 0; --i) {
    Tensor db = blocks_[i]->backward(d);
    d = pools_[i].backward(db);
    if (i > 0) {
      for (size_t k = 0; k < d.size(); ++k) d.v[k] += d_skips[i].v[k];
    }
  }
  for (size_t k = 0; k < d.size(); ++k) d.v[k] += d_skips[0].v[k];
  return stem_->backward(d);
}

void Encoder::init(std::mt19937_64& rng) {
  stem_->init(rng);
  for (auto& b : blocks_) b->init(rng);
}

std::vector<Param*> Encoder::params() {
  std::vector<Param*> p = stem_->params();
  for (auto& b : blocks_) {
    auto q = b->params();
    p.insert(p.end(), q.begin(), q.end());
  }
  return p;
}

// ---- Decoder ----

Decoder::Decoder(const NetConfig& cfg, int out_channels) {
  const int w = cfg.base_width;
  skip_channels_ = {w, 2 * w, 4 * w, 8 * w};
  int ch = 16 * w;  // bottleneck width
  for (int i = 3; i >= 0; --i) {
    ups_.push_back(std::make_unique<ConvTranspose2>(ch, ch / 2));
    // after concat with the matching skip: full-width conv, then halve
    convs_.push_back(std::make_unique<DoubleConv>(ch, ch, ch / 2, cfg.leaky_slope));
    ch /= 2;
  }
  head_ = std::make_unique<Conv1x1>(w, out_channels);
}

Tensor Decoder::forward(const Tensor& bottleneck, const std::array<Tensor, 4>& skips) {
  Tensor t = bottleneck;
  for (int i = 0; i < 4; ++i) {
    Tensor up = ups_[i]->forward(t);
    t = convs_[i]->forward(concat_channels(up, skips[3 - i]));
  }
  return head_->forward(t);
}

Tensor Decoder::backward(const Tensor& d_logits, std::array<Tensor, 4>& d_skips) {
  Tensor d = head_->backward(d_logits);
  for (int i = 3; i >= 0; --i) {
    Tensor dcat = convs_[i]->backward(d);
    Tensor dup, dskip;
    split_channels(dcat, dcat.c - skip_channels_[3 - i], &dup, &dskip);
    auto& acc = d_skips[3 - i];
    if (acc.size() == 0)
      acc = dskip;
    else
      for (size_t k = 0; k < acc.size(); ++k) acc.v[k] += dskip.v[k];
    d = ups_[i]->backward(dup);
  }
  return d;
}

void Decoder::init(std::mt19937_64& rng) {
  for (int i = 0; i < 4; ++i) {
    ups_[i]->init(rng);
    convs_[i]->init(rng);
  }
  head_->init(rng);
}

std::vector<Param*> Decoder::params() {
  std::vector<Param*> p;
  for (int i = 0; i < 4; ++i) {
    for (auto* q : ups_[i]->params()) p.push_back(q);
    for (auto* q : convs_[i]->params()) p.push_back(q);
  }
  for (auto* q : head_->params()) p.push_back(q);
  return p;
}

// ---- SharedUNet ----

SharedUNet::SharedUNet(const NetConfig& cfg)
    : cfg_(cfg),
      encoder_((cfg.validate(), cfg)),
      dec_head_(cfg, cfg.seg_out_channels),
      dec_abd_(cfg, cfg.seg_out_channels) {
  init(kDefaultInitSeed);
}

SharedUNet::Outputs SharedUNet::forward(const Tensor& x) {
  check_input_dims(x);
  feats_ = encoder_.forward(x);
  Outputs out;
  out.head_logits = dec_head_.forward(feats_.bottleneck, feats_.skips);
  out.abd_logits = dec_abd_.forward(feats_.bottleneck, feats_.skips);
  return out;
}

void SharedUNet::backward(const Tensor& d_head, const Tensor& d_abd) {
  std::array<Tensor, 4> d_skips;
  Tensor db_head = dec_head_.backward(d_head, d_skips);
  Tensor db_abd = dec_abd_.backward(d_abd, d_skips);
  for (size_t k = 0; k < db_head.size(); ++k) db_head.v[k] += db_abd.v[k];
  encoder_.backward(db_head, d_skips);
}

void SharedUNet::init(uint64_t seed) {
  std::mt19937_64 rng(seed);
  encoder_.init(rng);
  dec_head_.init(rng);
  dec_abd_.init(rng);
}

void SharedUNet::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

std::vector<Param*> SharedUNet::parameters() {
  auto p = encoder_.params();
  for (auto* q : dec_head_.params()) p.push_back(q);
  for (auto* q : dec_abd_.params()) p.push_back(q);
  return p;
}

// ---- FemurUNet ----

FemurUNet::FemurUNet(const NetConfig& cfg)
    : cfg_(cfg), encoder_((cfg.validate(), cfg)), decoder_(cfg, cfg.femur_out_channels) {
  init(kDefaultInitSeed);
}

Tensor FemurUNet::forward(const Tensor& x) {
  check_input_dims(x);
  feats_ = encoder_.forward(x);
  return decoder_.forward(feats_.bottleneck, feats_.skips);
}

Tensor FemurUNet::infer(const Tensor& x) {
  Tensor y = forward(x);
  for (auto& v : y.v) v = std::clamp(v, 0.0, 1.0);
  return y;
}

void FemurUNet::backward(const Tensor& d_out) {
  std::array<Tensor, 4> d_skips;
  Tensor db = decoder_.backward(d_out, d_skips);
  encoder_.backward(db, d_skips);
}

void FemurUNet::init(uint64_t seed) {
  std::mt19937_64 rng(seed);
  encoder_.init(rng);
  decoder_.init(rng);
}

void FemurUNet::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

std::vector<Param*> FemurUNet::parameters() {
  auto p = encoder_.params();
  for (auto* q : decoder_.params()) p.push_back(q);
  return p;
}

long count_parameters(const std::vector<Param*>& params) {
  long n = 0;
  for (const auto* p : params) n += static_cast<long>(p->w.size());
  return n;
}

long count_parameters(SharedUNet& model) { return count_parameters(model.parameters()); }
long count_parameters(FemurUNet& model) { return count_parameters(model.parameters()); }

}  // namespace ageus
