#include "ageus/checkpoint.hpp"

#include <json.hpp>

#include <fstream>

namespace ageus {
namespace {

using nlohmann::json;

json config_to_json(const NetConfig& cfg) {
  return json{{"in_channels", cfg.in_channels},
              {"base_width", cfg.base_width},
              {"depth", cfg.depth},
              {"leaky_slope", cfg.leaky_slope},
              {"seg_out_channels", cfg.seg_out_channels},
              {"femur_out_channels", cfg.femur_out_channels},
              // layer census for audit: stem DoubleConv precedes the 4 pooled blocks
              {"layers", "stem+4down / per-branch 4up(convT2x2+concat+2conv3x3)+1x1head"}};
}

NetConfig config_from_json(const json& j) {
  NetConfig cfg;
  cfg.in_channels = j.at("in_channels");
  cfg.base_width = j.at("base_width");
  cfg.depth = j.at("depth");
  cfg.leaky_slope = j.at("leaky_slope");
  cfg.seg_out_channels = j.at("seg_out_channels");
  cfg.femur_out_channels = j.at("femur_out_channels");
  return cfg;
}

void write_vec(std::ostream& out, const std::vector<double>& v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> read_vec(std::istream& in, size_t n) {
  std::vector<double> v(n);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw std::runtime_error("truncated checkpoint");
  return v;
}

}  // namespace

Checkpoint Checkpoint::capture(const std::string& arch, const NetConfig& cfg, int image_size,
                               int epoch, double val_metric, const std::vector<Param*>& params,
                               const Adam* opt) {
  Checkpoint c;
  c.arch = arch;
  c.config = cfg;
  c.image_size = image_size;
  c.epoch = epoch;
  c.val_metric = val_metric;
  for (const auto* p : params) c.tensors.push_back(p->w);
  if (opt) {
    AdamState st;
    st.steps = opt->steps();
    st.m = opt->m();
    st.v = opt->v();
    c.adam = std::move(st);
  }
  return c;
}

void Checkpoint::apply(std::vector<Param*> params) const {
  if (params.size() != tensors.size())
    throw std::runtime_error("checkpoint parameter count mismatch");
  for (size_t i = 0; i < params.size(); ++i) {
    if (params[i]->w.size() != tensors[i].size())
      throw std::runtime_error("checkpoint tensor size mismatch");
    params[i]->w = tensors[i];
  }
}

void Checkpoint::apply(SharedUNet& model) const {
  if (arch != "shared") throw std::runtime_error("checkpoint arch mismatch: expected shared");
  apply(model.parameters());
}

void Checkpoint::apply(FemurUNet& model) const {
  if (arch != "femur") throw std::runtime_error("checkpoint arch mismatch: expected femur");
  apply(model.parameters());
}

void save_checkpoint(const std::filesystem::path& file, const Checkpoint& ckpt) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + file.string());

  json header;
  header["arch"] = ckpt.arch;
  header["config"] = config_to_json(ckpt.config);
  header["image_size"] = ckpt.image_size;
  header["epoch"] = ckpt.epoch;
  header["val_metric"] = ckpt.val_metric;
  json sizes = json::array();
  for (const auto& t : ckpt.tensors) sizes.push_back(t.size());
  header["tensor_sizes"] = sizes;
  header["has_adam"] = ckpt.adam.has_value();
  if (ckpt.adam) header["adam_steps"] = ckpt.adam->steps;

  const std::string hs = header.dump();
  const uint64_t hlen = hs.size();
  out.write(kCheckpointMagic, static_cast<std::streamsize>(std::string(kCheckpointMagic).size()));
  out.put('\n');
  out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  for (const auto& t : ckpt.tensors) write_vec(out, t);
  if (ckpt.adam) {
    for (const auto& t : ckpt.adam->m) write_vec(out, t);
    for (const auto& t : ckpt.adam->v) write_vec(out, t);
  }
  if (!out) throw std::runtime_error("checkpoint write failed: " + file.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + file.string());

  std::string magic(std::string(kCheckpointMagic).size(), '\0');
  in.read(magic.data(), static_cast<std::streamsize>(magic.size()));
  char nl = 0;
  in.get(nl);
  if (magic != kCheckpointMagic || nl != '\n')
    throw std::runtime_error("not an AGEUS checkpoint: " + file.string());

  uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  std::string hs(hlen, '\0');
  in.read(hs.data(), static_cast<std::streamsize>(hlen));
  if (!in) throw std::runtime_error("truncated checkpoint header");
  const json header = json::parse(hs);

  Checkpoint c;
  c.arch = header.at("arch");
  c.config = config_from_json(header.at("config"));
  c.image_size = header.at("image_size");
  c.epoch = header.at("epoch");
  c.val_metric = header.at("val_metric");
  for (const auto& s : header.at("tensor_sizes")) c.tensors.push_back(read_vec(in, s));
  if (header.at("has_adam").get<bool>()) {
    AdamState st;
    st.steps = header.at("adam_steps");
    for (const auto& t : c.tensors) st.m.push_back(read_vec(in, t.size()));
    for (const auto& t : c.tensors) st.v.push_back(read_vec(in, t.size()));
    c.adam = std::move(st);
  }
  return c;
}

}  // namespace ageus
