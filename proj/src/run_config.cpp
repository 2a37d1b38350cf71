#include "auxvae/run_config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "auxvae/rng.hpp"
#include "json.hpp"

namespace auxvae::cli {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& msg) {
  throw std::invalid_argument("config: " + msg);
}

// Strict reader over one JSON object: every known field is type-checked,
// every unknown field is rejected with its dotted path.
class Section {
 public:
  // owns its object: child() hands out temporaries
  Section(json obj, std::string prefix)
      : obj_(std::move(obj)), prefix_(std::move(prefix)) {
    if (!obj_.is_object()) fail(prefix_ + " must be an object");
  }

  json child(const std::string& name) {
    seen_.insert(name);
    if (!obj_.contains(name)) return json::object();
    if (!obj_.at(name).is_object()) fail(path(name) + " must be an object");
    return obj_.at(name);
  }

  int get_int(const std::string& name, int def) {
    if (!mark(name)) return def;
    const json& v = obj_.at(name);
    if (!v.is_number_integer() && !v.is_number_unsigned())
      fail(path(name) + " must be an integer");
    return v.get<int>();
  }

  std::uint64_t get_u64(const std::string& name, std::uint64_t def) {
    if (!mark(name)) return def;
    const json& v = obj_.at(name);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0)
      return static_cast<std::uint64_t>(v.get<std::int64_t>());
    fail(path(name) + " must be a non-negative integer");
  }

  double get_double(const std::string& name, double def) {
    if (!mark(name)) return def;
    const json& v = obj_.at(name);
    if (!v.is_number()) fail(path(name) + " must be a number");
    return v.get<double>();
  }

  bool get_bool(const std::string& name, bool def) {
    if (!mark(name)) return def;
    const json& v = obj_.at(name);
    if (!v.is_boolean()) fail(path(name) + " must be a boolean");
    return v.get<bool>();
  }

  std::string get_string(const std::string& name, const std::string& def) {
    if (!mark(name)) return def;
    const json& v = obj_.at(name);
    if (!v.is_string()) fail(path(name) + " must be a string");
    return v.get<std::string>();
  }

  std::vector<int> get_int_list(const std::string& name,
                                std::vector<int> def) {
    if (!mark(name)) return def;
    const json& v = obj_.at(name);
    if (!v.is_array()) fail(path(name) + " must be an array of integers");
    std::vector<int> out;
    for (const auto& e : v) {
      if (!e.is_number_integer() && !e.is_number_unsigned())
        fail(path(name) + " must contain only integers");
      out.push_back(e.get<int>());
    }
    return out;
  }

  std::vector<double> get_double_list(const std::string& name,
                                      std::vector<double> def) {
    if (!mark(name)) return def;
    const json& v = obj_.at(name);
    if (!v.is_array()) fail(path(name) + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) fail(path(name) + " must contain only numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  std::vector<std::string> get_string_list(const std::string& name,
                                           std::vector<std::string> def) {
    if (!mark(name)) return def;
    const json& v = obj_.at(name);
    if (!v.is_array()) fail(path(name) + " must be an array of strings");
    std::vector<std::string> out;
    for (const auto& e : v) {
      if (!e.is_string()) fail(path(name) + " must contain only strings");
      out.push_back(e.get<std::string>());
    }
    return out;
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it)
      if (!seen_.count(it.key())) fail("unknown field " + path(it.key()));
  }

 private:
  bool mark(const std::string& name) {
    seen_.insert(name);
    return obj_.contains(name);
  }
  std::string path(const std::string& name) const {
    return prefix_.empty() ? name : prefix_ + "." + name;
  }

  json obj_;
  std::string prefix_;
  std::set<std::string> seen_;
};

RunConfig parse_document(const json& root) {
  RunConfig cfg;
  Section top(root, "");

  cfg.seed = top.get_u64("seed", 0);

  {
    Section s(top.child("paths"), "paths");
    cfg.paths.data_dir = s.get_string("data_dir", cfg.paths.data_dir);
    cfg.paths.out_dir = s.get_string("out_dir", cfg.paths.out_dir);
    cfg.paths.checkpoint_dir =
        s.get_string("checkpoint_dir", cfg.paths.checkpoint_dir);
    s.finish();
  }
  {
    Section s(top.child("synth"), "synth");
    auto& sy = cfg.synth;
    sy.num_participants = s.get_int("num_participants", sy.num_participants);
    sy.trials_per_condition =
        s.get_int("trials_per_condition", sy.trials_per_condition);
    sy.load_levels_lbs = s.get_double_list("load_levels_lbs", sy.load_levels_lbs);
    sy.num_styles = s.get_int("num_styles", sy.num_styles);
    sy.cadence_slow_per_lb =
        s.get_double("cadence_slow_per_lb", sy.cadence_slow_per_lb);
    sy.amp_atten_per_lb = s.get_double("amp_atten_per_lb", sy.amp_atten_per_lb);
    sy.style_asym_gain = s.get_double("style_asym_gain", sy.style_asym_gain);
    sy.noise_std = s.get_double("noise_std", sy.noise_std);
    cfg.synth_window_steps =
        s.get_int("window_time_steps", cfg.synth_window_steps);
    cfg.layout.num_channels = s.get_int("num_channels", cfg.layout.num_channels);
    cfg.layout.sample_rate_hz =
        s.get_double("sample_rate_hz", cfg.layout.sample_rate_hz);
    s.finish();
  }
  {
    Section s(top.child("model"), "model");
    auto& e = cfg.model.enc;
    e.tcn_channels = s.get_int_list("tcn_channels", e.tcn_channels);
    e.kernel_size = s.get_int("kernel_size", e.kernel_size);
    e.pool_window = s.get_int("pool_window", e.pool_window);
    e.attn_dim = s.get_int("attn_dim", e.attn_dim);
    e.num_heads = s.get_int("num_heads", e.num_heads);
    e.head_key_dim = s.get_int("head_key_dim", e.head_key_dim);
    e.head_value_dim = s.get_int("head_value_dim", e.head_value_dim);
    e.latent_dim = s.get_int("latent_dim", e.latent_dim);
    cfg.model.head_hidden = s.get_int("head_hidden", cfg.model.head_hidden);
    cfg.model.input_len = s.get_int("input_len", cfg.model.input_len);
    cfg.model.aux_len = s.get_int("aux_len", cfg.model.aux_len);
    cfg.model.setting =
        model::setting_by_name(s.get_string("setting", cfg.model.setting.name));
    s.finish();
  }
  {
    Section s(top.child("train"), "train");
    auto& t = cfg.train;
    t.lr = s.get_double("lr", t.lr);
    t.batch_size = s.get_int("batch_size", t.batch_size);
    t.max_epochs = s.get_int("max_epochs", t.max_epochs);
    t.lr_step_epochs = s.get_int("lr_step_epochs", t.lr_step_epochs);
    t.lr_decay = s.get_double("lr_decay", t.lr_decay);
    t.weight_decay = s.get_double("weight_decay", t.weight_decay);
    t.warmup_frac = s.get_double("warmup_frac", t.warmup_frac);
    t.num_z_samples = s.get_int("num_z_samples", t.num_z_samples);
    t.grad_chunk = s.get_int("grad_chunk", t.grad_chunk);
    t.repeats = s.get_int("repeats", t.repeats);
    t.num_threads = s.get_int("num_threads", t.num_threads);
    t.max_folds = s.get_int("max_folds", t.max_folds);
    s.finish();
  }
  {
    Section s(top.child("inference"), "inference");
    cfg.inference.num_latent_samples =
        s.get_int("num_latent_samples", cfg.inference.num_latent_samples);
    cfg.inference.deterministic_latent = s.get_bool(
        "deterministic_latent", cfg.inference.deterministic_latent);
    s.finish();
  }
  {
    std::vector<std::string> def;
    for (const auto& st : model::registered_settings()) def.push_back(st.name);
    cfg.ablation = top.get_string_list("ablation", def);
  }
  top.finish();
  return cfg;
}

void validate_resolved(const RunConfig& cfg) {
  cfg.synth.validate();
  cfg.layout.validate();
  cfg.model.validate();
  cfg.train.validate();
  if (cfg.synth_window_steps < 2)
    fail("synth.window_time_steps must be at least 2");
  if (cfg.inference.num_latent_samples < 1)
    fail("inference.num_latent_samples must be >= 1");
  std::set<std::string> seen;
  for (const auto& name : cfg.ablation) {
    model::setting_by_name(name);  // throws on unknown names
    if (!seen.insert(name).second) fail("ablation lists " + name + " twice");
  }
  if (cfg.ablation.empty()) fail("ablation must list at least one setting");
}

}  // namespace

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

std::string canonical_config_text(const RunConfig& cfg) {
  json doc;
  doc["seed"] = cfg.seed;
  doc["synth"] = {{"num_participants", cfg.synth.num_participants},
                  {"trials_per_condition", cfg.synth.trials_per_condition},
                  {"load_levels_lbs", cfg.synth.load_levels_lbs},
                  {"num_styles", cfg.synth.num_styles},
                  {"cadence_slow_per_lb", cfg.synth.cadence_slow_per_lb},
                  {"amp_atten_per_lb", cfg.synth.amp_atten_per_lb},
                  {"style_asym_gain", cfg.synth.style_asym_gain},
                  {"noise_std", cfg.synth.noise_std},
                  {"window_time_steps", cfg.synth_window_steps},
                  {"num_channels", cfg.layout.num_channels},
                  {"sample_rate_hz", cfg.layout.sample_rate_hz}};
  doc["model"] = {{"tcn_channels", cfg.model.enc.tcn_channels},
                  {"kernel_size", cfg.model.enc.kernel_size},
                  {"pool_window", cfg.model.enc.pool_window},
                  {"attn_dim", cfg.model.enc.attn_dim},
                  {"num_heads", cfg.model.enc.num_heads},
                  {"head_key_dim", cfg.model.enc.head_key_dim},
                  {"head_value_dim", cfg.model.enc.head_value_dim},
                  {"latent_dim", cfg.model.enc.latent_dim},
                  {"head_hidden", cfg.model.head_hidden},
                  {"input_len", cfg.model.input_len},
                  {"aux_len", cfg.model.aux_len},
                  {"setting", cfg.model.setting.name}};
  doc["train"] = {{"lr", cfg.train.lr},
                  {"batch_size", cfg.train.batch_size},
                  {"max_epochs", cfg.train.max_epochs},
                  {"lr_step_epochs", cfg.train.lr_step_epochs},
                  {"lr_decay", cfg.train.lr_decay},
                  {"weight_decay", cfg.train.weight_decay},
                  {"warmup_frac", cfg.train.warmup_frac},
                  {"num_z_samples", cfg.train.num_z_samples},
                  {"grad_chunk", cfg.train.grad_chunk},
                  {"repeats", cfg.train.repeats},
                  {"num_threads", cfg.train.num_threads},
                  {"max_folds", cfg.train.max_folds}};
  doc["inference"] = {
      {"num_latent_samples", cfg.inference.num_latent_samples},
      {"deterministic_latent", cfg.inference.deterministic_latent}};
  doc["ablation"] = cfg.ablation;
  return doc.dump();
}

RunConfig parse_run_config(const std::string& json_text,
                           const CliOverrides& overrides) {
  json root;
  try {
    root = json::parse(json_text.empty() ? "{}" : json_text);
  } catch (const json::parse_error& e) {
    fail(std::string("not valid JSON: ") + e.what());
  }
  RunConfig cfg = parse_document(root);

  if (overrides.seed) cfg.seed = *overrides.seed;
  if (overrides.epochs) cfg.train.max_epochs = *overrides.epochs;
  if (overrides.folds) cfg.train.max_folds = *overrides.folds;
  cfg.synth.seed = cfg.seed;
  cfg.train.seed = cfg.seed;

  validate_resolved(cfg);
  std::string canon = canonical_config_text(cfg);
  cfg.config_hash = hash_hex(fnv1a_bytes(canon.data(), canon.size()));

  if (const char* env = std::getenv("AUXVAE_OUT_DIR"); env && *env)
    cfg.paths.out_dir = env;
  if (overrides.data_dir) cfg.paths.data_dir = *overrides.data_dir;
  if (overrides.out_dir) cfg.paths.out_dir = *overrides.out_dir;
  if (overrides.checkpoint_dir) cfg.paths.checkpoint_dir = *overrides.checkpoint_dir;
  if (cfg.paths.checkpoint_dir.empty())
    cfg.paths.checkpoint_dir = cfg.paths.out_dir + "/checkpoints";
  return cfg;
}

RunConfig load_run_config(const std::string& path,
                          const CliOverrides& overrides) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str(), overrides);
}

}  // namespace auxvae::cli
