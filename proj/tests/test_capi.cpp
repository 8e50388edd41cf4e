// Exercises the shared library through its public C header only.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hybridsynth/hybridsynth.h"
#include "test_support.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using hybridsynth::testing::slurp;
using hybridsynth::testing::TempDir;

namespace {

json defaults(const char* preset) {
  char* text = nullptr;
  REQUIRE(hs_default_config(preset, &text) == HS_OK);
  const json j = json::parse(text);
  hs_free_string(text);
  return j;
}

// A corpus small enough that every stage finishes in seconds.
struct TinyRun {
  TempDir dir{"capi"};
  json config = defaults("desk");
  fs::path raw() const { return dir.path() / "raw"; }
  fs::path prepared() const { return dir.path() / "prepared"; }

  TinyRun() {
    config["toy"]["n"] = 120;
    config["toy"]["image_size"] = 16;
    config["prepare"]["image_size"] = 16;
    config["agan"]["image_size"] = 16;
    config["agan"]["latent_dim"] = 6;
    config["synth"]["epochs"] = 2;
    config["synth"]["batch_size"] = 20;
    REQUIRE(hs_toygen(config["toy"].dump().c_str(), 5, raw().c_str()) == HS_OK);
    REQUIRE(hs_prepare(raw().c_str(), config["prepare"].dump().c_str(), 5, prepared().c_str()) ==
            HS_OK);
  }
};

std::size_t line_count(const fs::path& p) {
  const std::string s = slurp(p);
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

}  // namespace

TEST_CASE("version and default configuration") {
  CHECK(std::string(hs_version()) == "1.0.0");
  for (const char* preset : {"paper", "desk"}) {
    const json j = defaults(preset);
    for (const char* section : {"agan", "pretrain", "synth", "sample", "eval", "prepare", "toy", "tsne"})
      CHECK(j.contains(section));
  }
  CHECK(defaults("paper")["agan"]["latent_dim"] == 128);
  CHECK(defaults("paper")["agan"]["image_size"] == 256);

  char* text = nullptr;
  CHECK(hs_default_config("huge", &text) == HS_USAGE_ERROR);
  CHECK(text == nullptr);
  CHECK(std::strlen(hs_last_error()) > 0);
  CHECK(hs_default_config(nullptr, &text) == HS_USAGE_ERROR);
}

TEST_CASE("status codes separate usage errors from data errors") {
  TempDir dir("capi_err");
  CHECK(hs_prepare((dir.path() / "absent").c_str(), "{}", 1, (dir.path() / "p").c_str()) ==
        HS_DATA_ERROR);
  CHECK(std::string(hs_last_error()).find("prepare") == 0);

  CHECK(hs_toygen("{not json", 1, dir.path().c_str()) == HS_USAGE_ERROR);
  CHECK(hs_toygen(R"({"n": 10, "image_size": 6})", 1, (dir.path() / "t").c_str()) == HS_USAGE_ERROR);

  hs_agan* model = nullptr;
  CHECK(hs_agan_load((dir.path() / "none.ckpt").c_str(), &model) == HS_DATA_ERROR);
  CHECK(model == nullptr);
  json bad = defaults("desk")["agan"];
  bad["image_size"] = 48;
  CHECK(hs_agan_create(bad.dump().c_str(), 1, &model) == HS_USAGE_ERROR);

  hs_synth* synth = nullptr;
  CHECK(hs_synth_create(R"({"epochs": -3})", 1, &synth) == HS_USAGE_ERROR);
  CHECK(hs_synth_load((dir.path() / "none.ckpt").c_str(), &synth) == HS_DATA_ERROR);

  // A successful call clears the message.
  char* text = nullptr;
  REQUIRE(hs_default_config("desk", &text) == HS_OK);
  hs_free_string(text);
  CHECK(std::string(hs_last_error()).empty());
}

TEST_CASE("alpha-GAN handle: encode/decode buffers, save and load") {
  TinyRun run;
  hs_agan* model = nullptr;
  REQUIRE(hs_agan_create(run.config["agan"].dump().c_str(), 3, &model) == HS_OK);
  CHECK(hs_agan_latent_dim(model) == 6);
  CHECK(hs_agan_image_size(model) == 16);
  CHECK(hs_agan_training_steps(model) == 0);

  const fs::path log = run.dir.path() / "losses.csv";
  REQUIRE(hs_agan_pretrain(model, (run.raw() / "images").c_str(), 4, 3, log.c_str()) == HS_OK);
  CHECK(hs_agan_training_steps(model) == 4);
  CHECK(line_count(log) == 5);
  CHECK(hs_agan_pretrain(model, (run.dir.path() / "nothing").c_str(), 1, 3, nullptr) ==
        HS_DATA_ERROR);

  std::vector<float> pixels(16 * 16);
  for (std::size_t i = 0; i < pixels.size(); ++i) pixels[i] = std::sin(0.3f * static_cast<float>(i));
  std::vector<float> code(6), again(6), image(16 * 16);
  REQUIRE(hs_agan_encode(model, pixels.data(), code.data()) == HS_OK);
  REQUIRE(hs_agan_decode(model, code.data(), image.data()) == HS_OK);
  for (float p : image) {
    CHECK(p >= -1.0f);
    CHECK(p <= 1.0f);
  }
  CHECK(hs_agan_encode(model, nullptr, code.data()) == HS_USAGE_ERROR);

  const fs::path ckpt = run.dir.path() / "agan.ckpt";
  REQUIRE(hs_agan_save(model, ckpt.c_str()) == HS_OK);
  hs_agan* loaded = nullptr;
  REQUIRE(hs_agan_load(ckpt.c_str(), &loaded) == HS_OK);
  CHECK(hs_agan_training_steps(loaded) == 4);
  REQUIRE(hs_agan_encode(loaded, pixels.data(), again.data()) == HS_OK);
  CHECK(again == code);

  const fs::path encoded = run.dir.path() / "encoded.csv";
  REQUIRE(hs_encode(loaded, run.prepared().c_str(), encoded.c_str()) == HS_OK);
  const std::string header = slurp(encoded).substr(0, slurp(encoded).find('\n'));
  CHECK(header.rfind("z0,z1,z2,z3,z4,z5,size_score,", 0) == 0);

  hs_agan_free(model);
  hs_agan_free(loaded);
  hs_agan_free(nullptr);
}

TEST_CASE("full handle chain: fit, sample, unmatched, decode, t-SNE") {
  TinyRun run;
  const fs::path base = run.dir.path();
  hs_agan* model = nullptr;
  REQUIRE(hs_agan_create(run.config["agan"].dump().c_str(), 8, &model) == HS_OK);
  REQUIRE(hs_agan_pretrain(model, (run.raw() / "images").c_str(), 2, 8, nullptr) == HS_OK);
  REQUIRE(hs_encode(model, run.prepared().c_str(), (base / "enc.csv").c_str()) == HS_OK);

  hs_synth* synth = nullptr;
  REQUIRE(hs_synth_create(run.config["synth"].dump().c_str(), 8, &synth) == HS_OK);
  CHECK(hs_synth_is_fitted(synth) == 0);
  CHECK(hs_synth_sample(synth, 5, 8, (base / "early.csv").c_str(), nullptr) != HS_OK);
  REQUIRE(hs_synth_fit(synth, (base / "enc.csv").c_str(), run.prepared().c_str(),
                       (base / "epochs.csv").c_str()) == HS_OK);
  CHECK(hs_synth_is_fitted(synth) == 1);

  REQUIRE(hs_synth_sample(synth, 30, 8, (base / "sds.csv").c_str(), (base / "enc.csv").c_str()) ==
          HS_OK);
  CHECK(line_count(base / "sds.csv") == 31);
  REQUIRE(hs_synth_sample(synth, 30, 8, (base / "sds2.csv").c_str(), nullptr) == HS_OK);
  CHECK(slurp(base / "sds.csv") == slurp(base / "sds2.csv"));
  CHECK(fs::exists(base / "sds.manifest.json"));

  const fs::path ckpt = base / "synth.ckpt";
  REQUIRE(hs_synth_save(synth, ckpt.c_str()) == HS_OK);
  hs_synth* loaded = nullptr;
  REQUIRE(hs_synth_load(ckpt.c_str(), &loaded) == HS_OK);
  REQUIRE(hs_synth_sample(loaded, 30, 8, (base / "sds3.csv").c_str(), nullptr) == HS_OK);
  CHECK(slurp(base / "sds3.csv") == slurp(base / "sds.csv"));

  // The training header is enforced against the reference table.
  {
    std::ofstream other(base / "other.csv");
    other << "id,a,b\nx,1,2\n";
  }
  CHECK(hs_synth_sample(synth, 3, 8, (base / "bad.csv").c_str(), (base / "other.csv").c_str()) ==
        HS_DATA_ERROR);

  REQUIRE(hs_make_unmatched((base / "sds.csv").c_str(), run.prepared().c_str(), 8,
                            (base / "uds.csv").c_str()) == HS_OK);
  CHECK(line_count(base / "uds.csv") == 31);
  REQUIRE(hs_decode(model, (base / "uds.csv").c_str(), run.prepared().c_str(),
                    (base / "decoded").c_str()) == HS_OK);
  CHECK(line_count(base / "decoded" / "records.csv") == 31);

  double mixing = -1;
  json tsne = run.config["tsne"];
  tsne["sample_n"] = 25;
  tsne["iterations"] = 250;
  REQUIRE(hs_tsne((base / "enc.csv").c_str(), (base / "sds.csv").c_str(), run.prepared().c_str(),
                  tsne.dump().c_str(), 8, (base / "tsne.csv").c_str(), nullptr, &mixing) == HS_OK);
  CHECK(mixing >= 0.0);
  CHECK(mixing <= 1.0);
  CHECK(line_count(base / "tsne.csv") == 51);

  hs_synth_free(synth);
  hs_synth_free(loaded);
  hs_agan_free(model);
}
