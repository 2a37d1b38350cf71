#include "auxvae/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "json.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload is little-endian; big-endian hosts unsupported");

namespace auxvae::ckpt {

using nlohmann::json;

namespace {

constexpr char kMagic[12] = {'A', 'U', 'X', 'V', 'A', 'E',
                             'C', 'K', 'P', 'T', '1', '\n'};

void append_floats(std::vector<float>& payload, const std::vector<float>& v) {
  payload.insert(payload.end(), v.begin(), v.end());
}

json shape_list(const std::map<std::string, nn::Tensor<float>>& tensors) {
  json arr = json::array();
  for (const auto& [path, t] : tensors)
    arr.push_back({{"path", path}, {"rows", t->rows}, {"cols", t->cols}});
  return arr;
}

}  // namespace

void save_checkpoint(const std::string& path,
                     const nn::ParamStore<float>& store,
                     const nn::AdamState<float>& adam,
                     const CheckpointMeta& meta) {
  json manifest;
  manifest["format"] = 1;
  manifest["code_version"] = meta.code_version;
  manifest["config_hash"] = meta.config_hash;
  manifest["setting_name"] = meta.setting_name;
  manifest["held_out"] = meta.held_out;
  manifest["store_seed"] = meta.store_seed;
  manifest["next_epoch"] = meta.next_epoch;
  manifest["adam"] = {{"lr", adam.lr},
                      {"beta1", adam.beta1},
                      {"beta2", adam.beta2},
                      {"eps", adam.eps},
                      {"weight_decay", adam.weight_decay},
                      {"step_count", adam.step_count}};
  manifest["params"] = shape_list(store.params());
  manifest["buffers"] = shape_list(store.buffers());

  std::vector<float> payload;
  for (const auto& [p, t] : store.params()) append_floats(payload, t->val);
  for (const auto& [p, t] : store.params()) {
    auto it = adam.m.find(p);
    if (it != adam.m.end() && it->second.size() == t->val.size())
      append_floats(payload, it->second);
    else
      payload.insert(payload.end(), t->val.size(), 0.0f);
  }
  for (const auto& [p, t] : store.params()) {
    auto it = adam.v.find(p);
    if (it != adam.v.end() && it->second.size() == t->val.size())
      append_floats(payload, it->second);
    else
      payload.insert(payload.end(), t->val.size(), 0.0f);
  }
  for (const auto& [p, t] : store.buffers()) append_floats(payload, t->val);

  std::string mstr = manifest.dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw std::runtime_error("save_checkpoint: cannot open " + path);
  out.write(kMagic, sizeof(kMagic));
  std::uint64_t mlen = mstr.size();
  out.write(reinterpret_cast<const char*>(&mlen), sizeof(mlen));
  out.write(mstr.data(), static_cast<std::streamsize>(mstr.size()));
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * sizeof(float)));
  if (!out) throw std::runtime_error("save_checkpoint: short write to " + path);
}

Checkpoint load_checkpoint(const std::string& path,
                           const std::string& expected_config_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);

  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("load_checkpoint: not a checkpoint file: " + path);

  std::uint64_t mlen = 0;
  in.read(reinterpret_cast<char*>(&mlen), sizeof(mlen));
  if (!in || mlen == 0 || mlen > (1ull << 30))
    throw std::runtime_error("load_checkpoint: corrupt manifest length");
  std::string mstr(mlen, '\0');
  in.read(mstr.data(), static_cast<std::streamsize>(mlen));
  if (!in) throw std::runtime_error("load_checkpoint: truncated manifest");

  json manifest = json::parse(mstr);
  if (manifest.at("format").get<int>() != 1)
    throw std::runtime_error("load_checkpoint: unsupported format version");

  Checkpoint ck;
  ck.meta.code_version = manifest.at("code_version").get<std::string>();
  ck.meta.config_hash = manifest.at("config_hash").get<std::string>();
  ck.meta.setting_name = manifest.at("setting_name").get<std::string>();
  ck.meta.held_out = manifest.at("held_out").get<std::string>();
  ck.meta.store_seed = manifest.at("store_seed").get<std::uint64_t>();
  ck.meta.next_epoch = manifest.at("next_epoch").get<int>();
  if (!expected_config_hash.empty() &&
      ck.meta.config_hash != expected_config_hash)
    throw std::runtime_error(
        "load_checkpoint: config hash mismatch (checkpoint " +
        ck.meta.config_hash + ", expected " + expected_config_hash + ")");

  const auto& ja = manifest.at("adam");
  ck.adam.lr = ja.at("lr").get<float>();
  ck.adam.beta1 = ja.at("beta1").get<float>();
  ck.adam.beta2 = ja.at("beta2").get<float>();
  ck.adam.eps = ja.at("eps").get<float>();
  ck.adam.weight_decay = ja.at("weight_decay").get<float>();
  ck.adam.step_count = ja.at("step_count").get<std::int64_t>();

  ck.store.set_seed(ck.meta.store_seed);

  struct Entry {
    std::string path;
    int rows, cols;
  };
  auto read_entries = [](const json& arr) {
    std::vector<Entry> out;
    for (const auto& e : arr)
      out.push_back({e.at("path").get<std::string>(), e.at("rows").get<int>(),
                     e.at("cols").get<int>()});
    return out;
  };
  auto params = read_entries(manifest.at("params"));
  auto buffers = read_entries(manifest.at("buffers"));

  std::size_t param_floats = 0, buffer_floats = 0;
  for (const auto& e : params) {
    if (e.rows <= 0 || e.cols <= 0)
      throw std::runtime_error("load_checkpoint: bad shape for " + e.path);
    param_floats += static_cast<std::size_t>(e.rows) * e.cols;
  }
  for (const auto& e : buffers)
    buffer_floats += static_cast<std::size_t>(e.rows) * e.cols;
  std::size_t total = 3 * param_floats + buffer_floats;

  std::vector<float> payload(total);
  in.read(reinterpret_cast<char*>(payload.data()),
          static_cast<std::streamsize>(total * sizeof(float)));
  if (!in || in.gcount() !=
                 static_cast<std::streamsize>(total * sizeof(float)))
    throw std::runtime_error("load_checkpoint: truncated payload in " + path);
  char extra;
  if (in.read(&extra, 1))
    throw std::runtime_error("load_checkpoint: trailing bytes in " + path);

  std::size_t off = 0;
  auto take = [&](std::size_t n) {
    std::vector<float> v(payload.begin() + off, payload.begin() + off + n);
    off += n;
    return v;
  };
  for (const auto& e : params) {
    auto t = ck.store.add_param(e.path, e.rows, e.cols, nn::Init::Zeros);
    t->val = take(t->val.size());
  }
  for (const auto& e : params)
    ck.adam.m[e.path] = take(static_cast<std::size_t>(e.rows) * e.cols);
  for (const auto& e : params)
    ck.adam.v[e.path] = take(static_cast<std::size_t>(e.rows) * e.cols);
  for (const auto& e : buffers) {
    auto t = ck.store.add_buffer(e.path, e.rows, e.cols);
    t->val = take(t->val.size());
  }
  return ck;
}

}  // namespace auxvae::ckpt
