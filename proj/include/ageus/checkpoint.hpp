#pragma once

#include "ageus/adam.hpp"
#include "ageus/unet.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace ageus {

inline constexpr const char* kCheckpointMagic = "AGEUS-CKPT-1";

struct AdamState {
  int64_t steps = 0;
  std::vector<std::vector<double>> m, v;
};

// Versioned checkpoint: config echo, parameter tensors, training epoch and
// validation metric, plus optional optimizer state for resuming.
struct Checkpoint {
  std::string arch;  // "shared" or "femur"
  NetConfig config;
  int image_size = 256;
  int epoch = 0;
  double val_metric = 0.0;
  std::vector<std::vector<double>> tensors;
  std::optional<AdamState> adam;

  static Checkpoint capture(const std::string& arch, const NetConfig& cfg, int image_size,
                            int epoch, double val_metric, const std::vector<Param*>& params,
                            const Adam* opt = nullptr);
  void apply(std::vector<Param*> params) const;
  void apply(SharedUNet& model) const;
  void apply(FemurUNet& model) const;
};

void save_checkpoint(const std::filesystem::path& file, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& file);

}  // namespace ageus
