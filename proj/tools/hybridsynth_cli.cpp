// hybridsynth command-line front end. Every subcommand works inside one run
// directory (--out) and talks to the library only through the C API.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>

#include <CLI11.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include "hybridsynth/hybridsynth.h"

namespace fs = std::filesystem;
namespace pt = boost::property_tree;
using nlohmann::json;

namespace {

constexpr int kUsage = 1;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Carries a library status out of the command body.
struct StageFailure {
  hs_status status;
};

void check(hs_status s) {
  if (s != HS_OK) throw StageFailure{s};
}

struct AganDeleter {
  void operator()(hs_agan* p) const { hs_agan_free(p); }
};
struct SynthDeleter {
  void operator()(hs_synth* p) const { hs_synth_free(p); }
};
using AganPtr = std::unique_ptr<hs_agan, AganDeleter>;
using SynthPtr = std::unique_ptr<hs_synth, SynthDeleter>;

struct Options {
  std::string config_file;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> preset;
  std::optional<long long> n;
  std::string out;  // empty: [paths] out, then ./hybridsynth_run
  std::string data, images, checkpoints, input, first, second;
};

// Resolved settings: module sections as JSON, plus run-level values.
struct Resolved {
  json config;
  std::string preset;
  std::uint64_t seed = 1;
  fs::path out, checkpoints;
  std::map<std::string, std::string> paths;
};

json parse_typed(const std::string& text, const json& like, const std::string& key) {
  try {
    std::size_t used = 0;
    if (like.is_boolean()) {
      if (text == "true" || text == "1" || text == "yes") return true;
      if (text == "false" || text == "0" || text == "no") return false;
      throw std::invalid_argument(text);
    }
    if (like.is_number_integer() || like.is_number_unsigned()) {
      const long long v = std::stoll(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
      return v;
    }
    if (like.is_number_float()) {
      const double v = std::stod(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
      return v;
    }
  } catch (const std::logic_error&) {
    throw UsageError("config key '" + key + "': cannot parse '" + text + "'");
  }
  return text;
}

std::string ini_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? v : fallback;
}

Resolved resolve(const Options& o, const std::string& command) {
  pt::ptree ini;
  if (!o.config_file.empty()) {
    if (!fs::exists(o.config_file)) throw UsageError("config file " + o.config_file + " not found");
    try {
      pt::read_ini(o.config_file, ini);
    } catch (const pt::ini_parser_error& e) {
      throw UsageError(e.what());
    }
  }

  Resolved r;
  r.preset = o.preset.value_or(ini.get<std::string>("run.preset", "desk"));
  char* text = nullptr;
  check(hs_default_config(r.preset.c_str(), &text));
  r.config = json::parse(text);
  hs_free_string(text);

  for (const auto& [section, entries] : ini) {
    if (section == "run") {
      for (const auto& [key, value] : entries) {
        if (key == "seed")
          r.seed = parse_typed(value.data(), json(std::uint64_t{0}), "run.seed").get<std::uint64_t>();
        else if (key != "preset")
          throw UsageError("unknown config key 'run." + key + "'");
      }
      continue;
    }
    if (section == "paths") {
      for (const auto& [key, value] : entries) {
        static const std::set<std::string> known{"out", "data", "images", "checkpoints"};
        if (!known.count(key)) throw UsageError("unknown config key 'paths." + key + "'");
        r.paths[key] = value.data();
      }
      continue;
    }
    if (!r.config.contains(section)) throw UsageError("unknown config section [" + section + "]");
    json& target = r.config[section];
    for (const auto& [key, value] : entries) {
      if (!target.contains(key))
        throw UsageError("unknown config key '" + section + "." + key + "'");
      target[key] = parse_typed(value.data(), target[key], section + "." + key);
    }
  }

  if (o.seed) r.seed = *o.seed;
  if (o.n) {
    if (*o.n < 0) throw UsageError("--n must be >= 0");
    if (command == "toygen") r.config["toy"]["n"] = *o.n;
    else if (command == "tsne") r.config["tsne"]["sample_n"] = *o.n;
    else r.config["sample"]["n"] = *o.n;
  }
  if (!o.out.empty())
    r.out = o.out;
  else
    r.out = r.paths.count("out") ? r.paths["out"] : "hybridsynth_run";
  if (!o.checkpoints.empty())
    r.checkpoints = o.checkpoints;
  else if (r.paths.count("checkpoints"))
    r.checkpoints = r.paths["checkpoints"];
  else
    r.checkpoints = env_or("HYBRIDSYNTH_CACHE", (r.out / "checkpoints").string());
  return r;
}

// Copies the resolved configuration into the run directory.
void write_resolved(const Resolved& r, const std::string& command) {
  pt::ptree ini;
  ini.put("run.preset", r.preset);
  ini.put("run.seed", r.seed);
  ini.put("paths.out", r.out.string());
  ini.put("paths.checkpoints", r.checkpoints.string());
  for (const auto& [section, entries] : r.config.items())
    for (const auto& [key, value] : entries.items()) ini.put(section + "." + key, ini_text(value));
  fs::create_directories(r.out);
  pt::write_ini((r.out / (command + ".config.ini")).string(), ini);
}

std::string pick(const std::string& flag, const Resolved& r, const char* key,
                 const fs::path& fallback) {
  if (!flag.empty()) return flag;
  if (auto it = r.paths.find(key); it != r.paths.end()) return it->second;
  return fallback.string();
}

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::exists(p)) throw UsageError("missing " + what + " " + p.string());
}

AganPtr load_agan(const Resolved& r) {
  const fs::path path = r.checkpoints / "agan.ckpt";
  hs_agan* h = nullptr;
  check(hs_agan_load(path.c_str(), &h));
  return AganPtr(h);
}

SynthPtr load_synth(const Resolved& r) {
  const fs::path path = r.checkpoints / "synth.ckpt";
  hs_synth* h = nullptr;
  check(hs_synth_load(path.c_str(), &h));
  return SynthPtr(h);
}

void say(const std::string& line) { std::cout << line << std::endl; }

// ------------------------------------------------------------------ commands

void cmd_toygen(const Options&, const Resolved& r) {
  const std::string toy = r.config["toy"].dump();
  const fs::path raw = r.out / "raw", external = r.out / "external";
  check(hs_toygen(toy.c_str(), r.seed, raw.c_str()));
  // A second corpus with a different seed stands in for the open image
  // database used for alpha-GAN pretraining.
  check(hs_toygen(toy.c_str(), r.seed ^ 0x9e3779b97f4a7c15ULL, external.c_str()));
  say("wrote " + raw.string() + " and " + external.string());
}

void cmd_prepare(const Options& o, const Resolved& r) {
  const fs::path raw = pick(o.data, r, "data", r.out / "raw");
  require_file(raw / "records.csv", "raw corpus");
  const fs::path out = r.out / "prepared";
  const std::string cfg = r.config["prepare"].dump();
  check(hs_prepare(raw.c_str(), cfg.c_str(), r.seed, out.c_str()));
  say("wrote " + out.string());
}

void cmd_pretrain(const Options& o, const Resolved& r) {
  const fs::path images = pick(o.images, r, "images", r.out / "external" / "images");
  if (!fs::is_directory(images)) throw UsageError("missing pretraining image folder " + images.string());
  const std::string cfg = r.config["agan"].dump();
  hs_agan* raw = nullptr;
  check(hs_agan_create(cfg.c_str(), r.seed, &raw));
  AganPtr model(raw);
  const long steps = r.config["pretrain"]["steps"].get<long>();
  const fs::path log = r.out / "agan_losses.csv";
  check(hs_agan_pretrain(model.get(), images.c_str(), steps, r.seed, log.c_str()));
  fs::create_directories(r.checkpoints);
  const fs::path ckpt = r.checkpoints / "agan.ckpt";
  check(hs_agan_save(model.get(), ckpt.c_str()));
  say("wrote " + ckpt.string());
}

void cmd_encode(const Options&, const Resolved& r) {
  const AganPtr model = load_agan(r);
  const fs::path prepared = r.out / "prepared", out = r.out / "encoded_pds.csv";
  require_file(prepared / "schema.json", "prepared corpus");
  check(hs_encode(model.get(), prepared.c_str(), out.c_str()));
  say("wrote " + out.string());
}

void cmd_fit(const Options&, const Resolved& r) {
  const fs::path encoded = r.out / "encoded_pds.csv", prepared = r.out / "prepared";
  require_file(encoded, "encoded table");
  const std::string cfg = r.config["synth"].dump();
  hs_synth* raw = nullptr;
  check(hs_synth_create(cfg.c_str(), r.seed, &raw));
  SynthPtr synth(raw);
  const fs::path log = r.out / "synth_epochs.csv";
  check(hs_synth_fit(synth.get(), encoded.c_str(), prepared.c_str(), log.c_str()));
  fs::create_directories(r.checkpoints);
  const fs::path ckpt = r.checkpoints / "synth.ckpt";
  check(hs_synth_save(synth.get(), ckpt.c_str()));
  say("wrote " + ckpt.string());
}

void cmd_sample(const Options&, const Resolved& r) {
  const SynthPtr synth = load_synth(r);
  const auto n = r.config["sample"]["n"].get<long long>();
  if (n < 0) throw UsageError("sample.n must be >= 0");
  const fs::path out = r.out / "sds.csv", reference = r.out / "encoded_pds.csv";
  check(hs_synth_sample(synth.get(), static_cast<size_t>(n), r.seed, out.c_str(),
                        fs::exists(reference) ? reference.c_str() : nullptr));
  say("wrote " + out.string());
}

void cmd_unmatched(const Options&, const Resolved& r) {
  const fs::path sds = r.out / "sds.csv", out = r.out / "uds.csv";
  require_file(sds, "synthetic table");
  check(hs_make_unmatched(sds.c_str(), (r.out / "prepared").c_str(), r.seed, out.c_str()));
  say("wrote " + out.string());
}

void cmd_decode(const Options& o, const Resolved& r) {
  const std::string which = o.input.empty() ? "sds" : o.input;
  if (which != "sds" && which != "uds") throw UsageError("--input must be sds or uds");
  const fs::path table = r.out / (which + ".csv"), out = r.out / ("decoded_" + which);
  require_file(table, "encoded table");
  const AganPtr model = load_agan(r);
  check(hs_decode(model.get(), table.c_str(), (r.out / "prepared").c_str(), out.c_str()));
  say("wrote " + out.string());
}

void cmd_evaluate(const Options&, const Resolved& r) {
  const AganPtr model = load_agan(r);
  const SynthPtr synth = load_synth(r);
  const fs::path out = r.out / "results.csv";
  const std::string cfg = r.config["eval"].dump();
  check(hs_evaluate(model.get(), synth.get(), (r.out / "prepared").c_str(), cfg.c_str(), r.seed,
                    out.c_str()));
  say("wrote " + out.string());
}

void cmd_tsne(const Options& o, const Resolved& r) {
  const fs::path first = o.first.empty() ? r.out / "encoded_pds.csv" : fs::path(o.first);
  const fs::path second = o.second.empty() ? r.out / "sds.csv" : fs::path(o.second);
  require_file(first, "table");
  require_file(second, "table");
  const fs::path csv = r.out / "tsne.csv", png = r.out / "tsne.png";
  const std::string cfg = r.config["tsne"].dump();
  double mixing = 0.0;
  check(hs_tsne(first.c_str(), second.c_str(), (r.out / "prepared").c_str(), cfg.c_str(), r.seed,
                csv.c_str(), png.c_str(), &mixing));
  say("wrote " + csv.string() + " and " + png.string() + " (mixing score " +
      std::to_string(mixing) + ")");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic hybrid image + clinical records"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(hs_version()));

  Options o;
  using Handler = void (*)(const Options&, const Resolved&);
  std::vector<std::pair<CLI::App*, Handler>> commands;
  auto add = [&](const char* name, const char* help, Handler h) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", o.config_file, "INI configuration file");
    sub->add_option("--seed", o.seed, "Master seed; every stage seed derives from it");
    sub->add_option("--preset", o.preset, "Configuration preset")
        ->check(CLI::IsMember({"paper", "desk"}));
    sub->add_option("--n", o.n, "Row count (toygen records, sample rows, t-SNE rows per input)");
    sub->add_option("--out", o.out, "Run directory (default hybridsynth_run)");
    sub->add_option("--checkpoints", o.checkpoints, "Checkpoint directory");
    commands.emplace_back(sub, h);
    return sub;
  };

  add("toygen", "Write a toy hybrid corpus with planted image/table links", cmd_toygen);
  add("prepare", "Filter, split, impute and resize a raw corpus", cmd_prepare)
      ->add_option("--data", o.data, "Raw corpus directory (records.csv + images/)");
  add("pretrain-agan", "Pretrain the alpha-GAN on an image folder", cmd_pretrain)
      ->add_option("--images", o.images, "Folder of PNG images");
  add("encode", "Encode the training and validation records", cmd_encode);
  add("fit-tabular", "Train the tabular synthesizer on the encoded table", cmd_fit);
  add("sample", "Sample a synthetic table (sds.csv)", cmd_sample);
  add("make-unmatched", "Shuffle image features against clinical columns (uds.csv)",
      cmd_unmatched);
  add("decode", "Decode synthetic image features into images", cmd_decode)
      ->add_option("--input", o.input, "Table to decode: sds or uds");
  CLI::App* tsne = add("tsne", "Embed two tables with t-SNE and score their overlap", cmd_tsne);
  tsne->add_option("--first", o.first, "First table (default encoded_pds.csv)");
  tsne->add_option("--second", o.second, "Second table (default sds.csv)");
  add("evaluate", "Run the utility scenario matrix", cmd_evaluate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  for (const auto& [sub, handler] : commands) {
    if (!sub->parsed()) continue;
    const std::string name = sub->get_name();
    try {
      const Resolved r = resolve(o, name);
      write_resolved(r, name);
      handler(o, r);
      return 0;
    } catch (const UsageError& e) {
      std::cerr << "hybridsynth " << name << ": " << e.what() << '\n';
      return kUsage;
    } catch (const StageFailure& f) {
      std::cerr << "hybridsynth " << name << ": " << hs_last_error() << '\n';
      return static_cast<int>(f.status);
    } catch (const std::exception& e) {
      std::cerr << "hybridsynth " << name << ": " << e.what() << '\n';
      return kUsage;
    }
  }
  return kUsage;
}
