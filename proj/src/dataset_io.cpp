#include "auxvae/dataset_io.hpp"

#include <bit>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

static_assert(std::endian::native == std::endian::little,
              "window files are little-endian; big-endian hosts unsupported");

namespace auxvae::data {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_window_file(const fs::path& path, const GaitWindow& w) {
  std::vector<float> buf(w.values.size());
  for (std::size_t i = 0; i < w.values.size(); ++i)
    buf[i] = static_cast<float>(w.values[i]);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for write: " + path.string());
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!out) throw std::runtime_error("short write: " + path.string());
}

GaitWindow read_window_file(const fs::path& path, int time_steps,
                            int num_channels) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  auto bytes = static_cast<std::size_t>(in.tellg());
  std::size_t expect =
      static_cast<std::size_t>(time_steps) * num_channels * sizeof(float);
  if (bytes != expect)
    throw std::runtime_error("window file size mismatch: " + path.string());
  in.seekg(0);
  std::vector<float> buf(static_cast<std::size_t>(time_steps) * num_channels);
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(bytes));
  if (!in) throw std::runtime_error("short read: " + path.string());
  GaitWindow w = make_window(time_steps, num_channels);
  for (std::size_t i = 0; i < buf.size(); ++i)
    w.values[i] = static_cast<double>(buf[i]);
  w.validate();
  return w;
}

std::string window_filename(const std::string& pid, const std::string& trial) {
  return pid + "_" + trial + ".f32";
}

}  // namespace

void write_dataset(const std::string& dir,
                   const std::vector<ParticipantRecord>& records,
                   const DatasetMeta& meta) {
  meta.layout.validate();
  fs::path root(dir);
  fs::create_directories(root / "windows");

  json jparticipants = json::array();
  for (const auto& r : records) {
    r.baseline_gait.validate();
    json jp;
    jp["id"] = r.participant_id;
    std::string base_file = window_filename(r.participant_id, "baseline");
    write_window_file(root / "windows" / base_file, r.baseline_gait);
    jp["baseline"] = {{"file", base_file},
                      {"time_steps", r.baseline_gait.time_steps}};
    json jtrials = json::array();
    for (const auto& t : r.trials) {
      t.loaded_gait.validate();
      std::string tf = window_filename(r.participant_id, t.trial_id);
      write_window_file(root / "windows" / tf, t.loaded_gait);
      jtrials.push_back({{"id", t.trial_id},
                         {"file", tf},
                         {"time_steps", t.loaded_gait.time_steps},
                         {"load_lbs", t.load_lbs},
                         {"style", t.style.index}});
    }
    jp["trials"] = std::move(jtrials);
    jparticipants.push_back(std::move(jp));
  }

  json j;
  j["schema_version"] = meta.schema_version;
  j["code_version"] = meta.code_version;
  j["config_hash"] = meta.config_hash;
  j["seed"] = meta.seed;
  j["num_channels"] = meta.layout.num_channels;
  j["sample_rate_hz"] = meta.layout.sample_rate_hz;
  j["channel_names"] = meta.layout.channel_names;
  j["num_styles"] = meta.num_styles;
  j["styles"] =
      meta.styles.empty() ? style_names(meta.num_styles) : meta.styles;
  j["participants"] = std::move(jparticipants);

  std::ofstream out(root / "metadata.json", std::ios::trunc);
  if (!out)
    throw std::runtime_error("cannot write metadata.json under " + dir);
  out << j.dump(2) << "\n";
}

LoadedDataset load_dataset(const std::string& dir) {
  fs::path root(dir);
  std::ifstream in(root / "metadata.json");
  if (!in)
    throw std::runtime_error("no metadata.json under " + dir);
  json j = json::parse(in);

  LoadedDataset ds;
  ds.meta.schema_version = j.at("schema_version").get<int>();
  if (ds.meta.schema_version != 1)
    throw std::runtime_error("unsupported dataset schema_version");
  ds.meta.code_version = j.at("code_version").get<std::string>();
  ds.meta.config_hash = j.at("config_hash").get<std::string>();
  ds.meta.seed = j.at("seed").get<std::uint64_t>();
  ds.meta.layout.num_channels = j.at("num_channels").get<int>();
  ds.meta.layout.sample_rate_hz = j.at("sample_rate_hz").get<double>();
  ds.meta.layout.channel_names =
      j.at("channel_names").get<std::vector<std::string>>();
  ds.meta.num_styles = j.at("num_styles").get<int>();
  ds.meta.styles = j.at("styles").get<std::vector<std::string>>();
  ds.meta.layout.validate();

  int channels = ds.meta.layout.num_channels;
  for (const auto& jp : j.at("participants")) {
    ParticipantRecord r;
    r.participant_id = jp.at("id").get<std::string>();
    const auto& jb = jp.at("baseline");
    r.baseline_gait =
        read_window_file(root / "windows" / jb.at("file").get<std::string>(),
                         jb.at("time_steps").get<int>(), channels);
    for (const auto& jt : jp.at("trials")) {
      TrialSample t;
      t.participant_id = r.participant_id;
      t.trial_id = jt.at("id").get<std::string>();
      t.loaded_gait =
          read_window_file(root / "windows" / jt.at("file").get<std::string>(),
                           jt.at("time_steps").get<int>(), channels);
      t.load_lbs = jt.at("load_lbs").get<double>();
      int style = jt.at("style").get<int>();
      if (style < 0 || style >= ds.meta.num_styles)
        throw std::runtime_error("trial style index out of range");
      t.style = CarryStyle{style, ds.meta.num_styles};
      r.trials.push_back(std::move(t));
    }
    ds.records.push_back(std::move(r));
  }
  return ds;
}

}  // namespace auxvae::data
