// Drives the hybridsynth executable end to end.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#include "test_support.hpp"

namespace fs = std::filesystem;
using hybridsynth::testing::slurp;
using hybridsynth::testing::TempDir;

#ifndef HS_CLI_PATH
#error "HS_CLI_PATH must name the hybridsynth executable"
#endif

namespace {

const char* const kChain[] = {"toygen", "prepare", "pretrain-agan", "encode",
                              "fit-tabular", "sample", "make-unmatched", "decode",
                              "tsne", "evaluate"};

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string("\"") + HS_CLI_PATH + "\" " + args + " >>\"" + log.string() +
                          "\" 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

fs::path write_config(const fs::path& dir) {
  const fs::path ini = dir / "tiny.ini";
  std::ofstream out(ini);
  out << "[toy]\nn = 200\nimage_size = 16\n"
         "[prepare]\nimage_size = 16\n"
         "[agan]\nimage_size = 16\nlatent_dim = 8\n"
         "[pretrain]\nsteps = 20\n"
         "[synth]\nepochs = 3\n"
         "[sample]\nn = 150\n"
         "[eval]\nrepeats = 2\nimage_max_epochs = 2\ntree_boost_rounds = 40\n"
         "[tsne]\nsample_n = 60\niterations = 250\n";
  return ini;
}

void run_chain(const fs::path& ini, const fs::path& out, std::uint64_t seed) {
  fs::create_directories(out.parent_path());
  for (const char* stage : kChain) {
    const std::string args = std::string(stage) + " --config \"" + ini.string() + "\" --out \"" +
                             out.string() + "\" --seed " + std::to_string(seed);
    INFO("stage " << std::string(stage) << ", log " << (out.parent_path() / "cli.log").string());
    REQUIRE(run_cli(args, out.parent_path() / "cli.log") == 0);
  }
}

// Relative path -> contents. Manifests are compared without their timestamp
// and the resolved configs without the run directory they record.
std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const std::string rel = fs::relative(e.path(), root).generic_string();
    std::string body = slurp(e.path());
    if (rel.size() > 5 && rel.ends_with("manifest.json")) {
      auto j = nlohmann::json::parse(body);
      j.erase("timestamp");
      body = j.dump();
    }
    if (rel.ends_with(".config.ini")) {
      const std::string where = root.string();
      for (std::size_t at; (at = body.find(where)) != std::string::npos;) body.replace(at, where.size(), "<run>");
    }
    files[rel] = std::move(body);
  }
  return files;
}

}  // namespace

TEST_CASE("the full chain is byte-reproducible for a fixed seed") {
  TempDir dir("cli_chain");
  const fs::path ini = write_config(dir.path());
  run_chain(ini, dir.path() / "a" / "run", 21);
  run_chain(ini, dir.path() / "b" / "run", 21);

  const auto a = snapshot(dir.path() / "a" / "run");
  const auto b = snapshot(dir.path() / "b" / "run");
  CHECK(a.size() == b.size());
  for (const char* f : {"sds.csv", "uds.csv", "encoded_pds.csv", "results.csv", "tsne.csv",
                        "tsne.png", "checkpoints/agan.ckpt", "checkpoints/synth.ckpt",
                        "agan_losses.csv", "synth_epochs.csv", "prepared/split.json"})
    CHECK_MESSAGE(a.count(f) == 1, f);
  int differing = 0;
  for (const auto& [name, body] : a) {
    auto it = b.find(name);
    if (it == b.end() || it->second != body) {
      ++differing;
      MESSAGE("differs: " << name);
    }
  }
  CHECK(differing == 0);
  CHECK(a.size() > 200);

  const std::string sds = a.at("sds.csv");
  CHECK(std::count(sds.begin(), sds.end(), '\n') == 151);
  CHECK(a.at("results.csv").rfind("scenario,task,feature_source,metric,value,ci_low,ci_high,repeats,seed_list\n", 0) == 0);

  // A different master seed moves the synthetic table.
  run_chain(ini, dir.path() / "c" / "run", 22);
  CHECK(slurp(dir.path() / "c" / "run" / "sds.csv") != sds);
}

TEST_CASE("exit codes and messages") {
  TempDir dir("cli_codes");
  const fs::path log = dir.path() / "log.txt";
  const std::string out = " --out \"" + (dir.path() / "run").string() + "\"";

  CHECK(run_cli("", log) == 1);
  CHECK(run_cli("frobnicate", log) == 1);
  CHECK(run_cli("--version", log) == 0);
  CHECK(slurp(log).find("1.0.0") != std::string::npos);

  // Stages whose inputs do not exist yet fail as usage errors and say what is missing.
  fs::remove(log);
  CHECK(run_cli("evaluate" + out, log) != 0);
  CHECK(run_cli("make-unmatched" + out, log) == 1);
  CHECK(slurp(log).find("missing synthetic table") != std::string::npos);

  const fs::path bad = dir.path() / "bad.ini";
  std::ofstream(bad) << "[synth]\nepochz = 4\n";
  fs::remove(log);
  CHECK(run_cli("fit-tabular --config \"" + bad.string() + "\"" + out, log) == 1);
  CHECK(slurp(log).find("epochz") != std::string::npos);

  CHECK(run_cli("toygen --preset enormous" + out, log) == 1);

  // A raw corpus without images is a data error.
  fs::create_directories(dir.path() / "raw");
  std::ofstream(dir.path() / "raw" / "records.csv") << "id,a\nr1,1\n";
  CHECK(run_cli("prepare --data \"" + (dir.path() / "raw").string() + "\"" + out, log) == 2);
}
