#pragma once

#include "ageus/layers.hpp"

#include <array>
#include <memory>
#include <string>

namespace ageus {

// He-normal initialization seed used by freshly constructed models.
inline constexpr uint64_t kDefaultInitSeed = 0x243F6A8885A308D3ull;

struct NetConfig {
  int in_channels = 1;
  int base_width = 32;     // power of two >= 8; channels double per depth level
  int depth = 4;           // fixed
  double leaky_slope = 0.01;
  int seg_out_channels = 2;    // background/foreground softmax per decoder
  int femur_out_channels = 1;  // linear output, clamped to [0,1] at inference

  void validate() const;
};

// Two 3x3 convs, each followed by InstanceNorm and LeakyReLU.
class DoubleConv {
 public:
  DoubleConv(int cin, int cmid, int cout, double slope)
      : conv1_(cin, cmid), conv2_(cmid, cout), act1_(slope), act2_(slope) {}

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy);
  void init(std::mt19937_64& rng);
  std::vector<Param*> params();

 private:
  Conv3x3 conv1_, conv2_;
  InstanceNorm norm1_, norm2_;
  LeakyReLU act1_, act2_;
};

// Stem block plus 4 pool+DoubleConv downsampling blocks.
class Encoder {
 public:
  explicit Encoder(const NetConfig& cfg);

  struct Features {
    std::array<Tensor, 4> skips;  // stem, d1, d2, d3 outputs
    Tensor bottleneck;
  };

  Features forward(const Tensor& x);
  Tensor backward(const Tensor& d_bottleneck, std::array<Tensor, 4>& d_skips);
  void init(std::mt19937_64& rng);
  std::vector<Param*> params();

 private:
  std::unique_ptr<DoubleConv> stem_;
  std::vector<MaxPool2> pools_;
  std::vector<std::unique_ptr<DoubleConv>> blocks_;
};

// 4 upsampling blocks (transposed conv 2x2/2 + skip concat + DoubleConv),
// then a 1x1 conv head.
class Decoder {
 public:
  Decoder(const NetConfig& cfg, int out_channels);

  Tensor forward(const Tensor& bottleneck, const std::array<Tensor, 4>& skips);
  // Accumulates skip gradients, returns bottleneck gradient.
  Tensor backward(const Tensor& d_logits, std::array<Tensor, 4>& d_skips);
  void init(std::mt19937_64& rng);
  std::vector<Param*> params();
  Conv1x1& head() { return *head_; }

 private:
  std::vector<std::unique_ptr<ConvTranspose2>> ups_;
  std::vector<std::unique_ptr<DoubleConv>> convs_;
  std::unique_ptr<Conv1x1> head_;
  std::array<int, 4> skip_channels_{};
};

void check_input_dims(const Tensor& x);

// Single encoder feeding two plane-specific decoder branches.
class SharedUNet {
 public:
  explicit SharedUNet(const NetConfig& cfg);

  struct Outputs {
    Tensor head_logits;
    Tensor abd_logits;
  };

  Outputs forward(const Tensor& x);
  void backward(const Tensor& d_head, const Tensor& d_abd);
  void init(uint64_t seed);
  void zero_grad();

  std::vector<Param*> parameters();
  std::vector<Param*> encoder_params() { return encoder_.params(); }
  std::vector<Param*> head_decoder_params() { return dec_head_.params(); }
  std::vector<Param*> abd_decoder_params() { return dec_abd_.params(); }

  const NetConfig& config() const { return cfg_; }
  Decoder& head_decoder() { return dec_head_; }
  Decoder& abd_decoder() { return dec_abd_; }

 private:
  NetConfig cfg_;
  Encoder encoder_;
  Decoder dec_head_, dec_abd_;
  Encoder::Features feats_;
};

// Same encoder recipe with a single decoder branch; regression output.
class FemurUNet {
 public:
  explicit FemurUNet(const NetConfig& cfg);

  Tensor forward(const Tensor& x);
  // Linear output clamped to [0,1].
  Tensor infer(const Tensor& x);
  void backward(const Tensor& d_out);
  void init(uint64_t seed);
  void zero_grad();

  std::vector<Param*> parameters();
  const NetConfig& config() const { return cfg_; }

 private:
  NetConfig cfg_;
  Encoder encoder_;
  Decoder decoder_;
  Encoder::Features feats_;
};

long count_parameters(const std::vector<Param*>& params);
long count_parameters(SharedUNet& model);
long count_parameters(FemurUNet& model);

}  // namespace ageus
