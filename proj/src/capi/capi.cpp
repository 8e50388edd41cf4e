#include "hybridsynth/hybridsynth.h"

#include <cstdlib>
#include <cstring>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "common/digest.hpp"
#include "common/error.hpp"
#include "common/rng.hpp"
#include "pipeline/workflow.hpp"

using namespace hybridsynth;
namespace fs = std::filesystem;

struct hs_agan {
  agan::AGanModel model;
  // Checkpoint bookkeeping; saving updates it on a const handle.
  mutable std::string digest;
  mutable std::optional<pipeline::GenerationManifest> pending;
};

struct hs_synth {
  tabular::TabularSynthesizer synth;
  mutable std::string digest;
  mutable std::optional<pipeline::GenerationManifest> pending;
};

namespace {

thread_local std::string g_last_error;

hs_status fail(hs_status s, const std::string& message) {
  g_last_error = message;
  return s;
}

template <class F>
hs_status guarded(const char* stage, F&& body) {
  g_last_error.clear();
  try {
    body();
    return HS_OK;
  } catch (const DataError& e) {
    return fail(HS_DATA_ERROR, std::string(stage) + ": " + e.what());
  } catch (const NumericError& e) {
    return fail(HS_NUMERIC_ERROR, std::string(stage) + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    return fail(HS_USAGE_ERROR, std::string(stage) + ": " + e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(HS_USAGE_ERROR, std::string(stage) + ": bad configuration: " + e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(HS_DATA_ERROR, std::string(stage) + ": " + e.what());
  } catch (const std::exception& e) {
    return fail(HS_DATA_ERROR, std::string(stage) + ": " + e.what());
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

nlohmann::json parse_config(const char* text) {
  if (!text || !*text) return nlohmann::json::object();
  return nlohmann::json::parse(text);
}

fs::path opt_path(const char* p) { return p ? fs::path(p) : fs::path(); }

void write_manifest(pipeline::GenerationManifest m, const fs::path& output,
                    std::initializer_list<std::pair<const char*, const std::string*>> digests = {}) {
  for (const auto& [name, digest] : digests)
    if (digest && !digest->empty()) m.digests[name] = *digest;
  m.write(pipeline::manifest_path_for(output));
}

}  // namespace

extern "C" {

const char* hs_version(void) { return "1.0.0"; }

const char* hs_last_error(void) { return g_last_error.c_str(); }

void hs_free_string(char* s) { std::free(s); }

hs_status hs_default_config(const char* preset, char** out_json) {
  return guarded("config", [&] {
    require(preset && out_json, "preset and out_json are required");
    const std::string text = pipeline::default_config(preset).dump(2);
    char* buf = static_cast<char*>(std::malloc(text.size() + 1));
    if (!buf) throw std::bad_alloc();
    std::memcpy(buf, text.c_str(), text.size() + 1);
    *out_json = buf;
  });
}

hs_status hs_toygen(const char* toy_json, uint64_t seed, const char* out_dir) {
  return guarded("toygen", [&] {
    require(out_dir, "out_dir is required");
    const nlohmann::json j = parse_config(toy_json);
    toy::ToySpec spec;
    spec.n = j.value("n", spec.n);
    spec.image_size = j.value("image_size", spec.image_size);
    spec.missing_rate = j.value("missing_rate", spec.missing_rate);
    spec.seed = seed;
    pipeline::write_toy_corpus(spec, out_dir);
  });
}

hs_status hs_prepare(const char* raw_dir, const char* prepare_json, uint64_t master_seed,
                     const char* out_dir) {
  return guarded("prepare", [&] {
    require(raw_dir && out_dir, "raw_dir and out_dir are required");
    const auto options = pipeline::PrepareOptions::from_json(parse_config(prepare_json));
    const auto m = pipeline::prepare_corpus(raw_dir, out_dir, options, master_seed);
    m.write(fs::path(out_dir) / "manifest.json");
  });
}

// ---------------------------------------------------------------- alpha-GAN

hs_status hs_agan_create(const char* agan_json, uint64_t master_seed, hs_agan** out) {
  return guarded("pretrain-agan", [&] {
    require(out, "out is required");
    const agan::AGanConfig config = agan::agan_config_from_json(parse_config(agan_json));
    config.validate();
    const std::uint64_t seed = stage_seed(master_seed, Stage::AganInit);
    auto* h = new hs_agan{agan::build_networks(config, seed), {}, {}};
    pipeline::GenerationManifest m;
    m.stage = "pretrain-agan";
    m.seeds["agan_init"] = seed;
    m.timestamp = pipeline::GenerationManifest::now();
    h->pending = m;
    *out = h;
  });
}

hs_status hs_agan_load(const char* path, hs_agan** out) {
  return guarded("load alpha-GAN checkpoint", [&] {
    require(path && out, "path and out are required");
    if (!fs::exists(path)) throw DataError(std::string("missing checkpoint ") + path);
    *out = new hs_agan{agan::AGanModel::load(path), file_digest(path), {}};
  });
}

hs_status hs_agan_save(const hs_agan* model, const char* path) {
  return guarded("save alpha-GAN checkpoint", [&] {
    require(model && path, "model and path are required");
    model->model.save(path);
    const hs_agan* h = model;
    h->digest = file_digest(path);
    if (h->pending) {
      pipeline::GenerationManifest m = *h->pending;
      m.digests["checkpoint"] = h->digest;
      m.write(pipeline::manifest_path_for(path));
      h->pending.reset();
    }
  });
}

void hs_agan_free(hs_agan* model) { delete model; }

int hs_agan_latent_dim(const hs_agan* model) { return model ? model->model.config().latent_dim : 0; }

int hs_agan_image_size(const hs_agan* model) { return model ? model->model.config().image_size : 0; }

long hs_agan_training_steps(const hs_agan* model) {
  return model ? model->model.training_steps() : 0;
}

hs_status hs_agan_encode(const hs_agan* model, const float* pixels, float* code) {
  return guarded("encode", [&] {
    require(model && pixels && code, "model, pixels and code are required");
    const int s = model->model.config().image_size;
    Image im(s, s);
    std::memcpy(im.pixels.data(), pixels, im.pixels.size() * sizeof(float));
    const agan::LatentCode z = model->model.encode(im);
    std::memcpy(code, z.values.data(), z.values.size() * sizeof(float));
  });
}

hs_status hs_agan_decode(const hs_agan* model, const float* code, float* pixels) {
  return guarded("decode", [&] {
    require(model && code && pixels, "model, code and pixels are required");
    agan::LatentCode z;
    z.values.assign(code, code + model->model.config().latent_dim);
    const Image im = model->model.decode(z);
    std::memcpy(pixels, im.pixels.data(), im.pixels.size() * sizeof(float));
  });
}

hs_status hs_agan_pretrain(hs_agan* model, const char* image_dir, long steps, uint64_t master_seed,
                           const char* loss_log) {
  return guarded("pretrain-agan", [&] {
    require(model && image_dir, "model and image_dir are required");
    require(steps >= 0, "steps must be >= 0");
    pipeline::GenerationManifest m =
        pipeline::pretrain_stage(model->model, image_dir, steps, master_seed, opt_path(loss_log));
    if (model->pending) m.seeds.insert(model->pending->seeds.begin(), model->pending->seeds.end());
    if (!model->digest.empty()) m.digests["initial_checkpoint"] = model->digest;
    model->pending = m;
  });
}

hs_status hs_encode(const hs_agan* model, const char* prepared_dir, const char* out_csv) {
  return guarded("encode", [&] {
    require(model && prepared_dir && out_csv, "model, prepared_dir and out_csv are required");
    write_manifest(pipeline::encode_stage(model->model, prepared_dir, out_csv), out_csv,
                   {{"agan", &model->digest}});
  });
}

hs_status hs_decode(const hs_agan* model, const char* encoded_csv, const char* prepared_dir,
                    const char* out_dir) {
  return guarded("decode", [&] {
    require(model && encoded_csv && prepared_dir && out_dir,
            "model, encoded_csv, prepared_dir and out_dir are required");
    auto m = pipeline::decode_stage(model->model, encoded_csv, prepared_dir, out_dir);
    if (!model->digest.empty()) m.digests["agan"] = model->digest;
    m.write(fs::path(out_dir) / "manifest.json");
  });
}

// ---------------------------------------------------------------- synthesizer

hs_status hs_synth_create(const char* synth_json, uint64_t master_seed, hs_synth** out) {
  return guarded("fit-tabular", [&] {
    require(out, "out is required");
    const tabular::SynthConfig config = tabular::synth_config_from_json(parse_config(synth_json));
    config.validate();
    *out = new hs_synth{tabular::TabularSynthesizer(config, stage_seed(master_seed, Stage::SynthTrain)),
                        {}, {}};
  });
}

hs_status hs_synth_load(const char* path, hs_synth** out) {
  return guarded("load synthesizer checkpoint", [&] {
    require(path && out, "path and out are required");
    if (!fs::exists(path)) throw DataError(std::string("missing checkpoint ") + path);
    *out = new hs_synth{tabular::TabularSynthesizer::load(path), file_digest(path), {}};
  });
}

hs_status hs_synth_save(const hs_synth* synth, const char* path) {
  return guarded("save synthesizer checkpoint", [&] {
    require(synth && path, "synth and path are required");
    synth->synth.save(path);
    const hs_synth* h = synth;
    h->digest = file_digest(path);
    if (h->pending) {
      pipeline::GenerationManifest m = *h->pending;
      m.digests["checkpoint"] = h->digest;
      m.write(pipeline::manifest_path_for(path));
      h->pending.reset();
    }
  });
}

void hs_synth_free(hs_synth* synth) { delete synth; }

int hs_synth_is_fitted(const hs_synth* synth) { return synth && synth->synth.fitted() ? 1 : 0; }

hs_status hs_synth_fit(hs_synth* synth, const char* encoded_csv, const char* prepared_dir,
                       const char* epoch_log) {
  return guarded("fit-tabular", [&] {
    require(synth && encoded_csv && prepared_dir, "synth, encoded_csv and prepared_dir are required");
    synth->pending =
        pipeline::fit_stage(synth->synth, encoded_csv, prepared_dir, opt_path(epoch_log));
  });
}

hs_status hs_synth_sample(const hs_synth* synth, size_t n, uint64_t master_seed,
                          const char* out_csv, const char* reference_csv) {
  return guarded("sample", [&] {
    require(synth && out_csv, "synth and out_csv are required");
    if (!synth->synth.fitted()) throw DataError("synthesizer is not fitted");
    write_manifest(pipeline::sample_stage(synth->synth, n, master_seed, out_csv,
                                          opt_path(reference_csv)),
                   out_csv, {{"synth", &synth->digest}});
  });
}

hs_status hs_make_unmatched(const char* sds_csv, const char* prepared_dir, uint64_t master_seed,
                            const char* out_csv) {
  return guarded("make-unmatched", [&] {
    require(sds_csv && prepared_dir && out_csv, "sds_csv, prepared_dir and out_csv are required");
    write_manifest(pipeline::unmatched_stage(sds_csv, prepared_dir, master_seed, out_csv), out_csv);
  });
}

// ---------------------------------------------------------------- evaluation

hs_status hs_evaluate(const hs_agan* model, const hs_synth* synth, const char* prepared_dir,
                      const char* eval_json, uint64_t master_seed, const char* out_csv) {
  return guarded("evaluate", [&] {
    require(model && synth && prepared_dir && out_csv,
            "model, synth, prepared_dir and out_csv are required");
    if (!synth->synth.fitted()) throw DataError("synthesizer is not fitted");
    write_manifest(pipeline::evaluate_stage(model->model, synth->synth, prepared_dir,
                                            parse_config(eval_json), master_seed, out_csv),
                   out_csv, {{"agan", &model->digest}, {"synth", &synth->digest}});
  });
}

hs_status hs_tsne(const char* first_csv, const char* second_csv, const char* prepared_dir,
                  const char* tsne_json, uint64_t master_seed, const char* out_csv,
                  const char* out_png, double* mixing) {
  return guarded("tsne", [&] {
    require(first_csv && second_csv && prepared_dir && out_csv,
            "first_csv, second_csv, prepared_dir and out_csv are required");
    const auto options = pipeline::TsneOptions::from_json(parse_config(tsne_json));
    write_manifest(pipeline::tsne_stage(first_csv, second_csv, prepared_dir, options, master_seed,
                                        out_csv, opt_path(out_png), mixing),
                   out_csv);
  });
}

}  // extern "C"
