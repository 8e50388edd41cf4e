/* hybridsynth: synthetic hybrid (image + clinical table) records.
 *
 * C interface. Every function returning hs_status sets a thread-local
 * message readable through hs_last_error() when it fails. Handles are
 * opaque and owned by the caller; release them with the matching _free.
 * Strings returned through char** are released with hs_free_string.
 *
 * Configuration travels as JSON text. hs_default_config returns every
 * section for a preset; stage functions take the relevant section.
 */
#ifndef HYBRIDSYNTH_H
#define HYBRIDSYNTH_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define HS_API __declspec(dllexport)
#else
#define HS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hs_status {
  HS_OK = 0,
  HS_USAGE_ERROR = 1,   /* bad argument or configuration */
  HS_DATA_ERROR = 2,    /* missing file, header or schema mismatch */
  HS_NUMERIC_ERROR = 3  /* non-finite value during training or fitting */
} hs_status;

typedef struct hs_agan hs_agan;
typedef struct hs_synth hs_synth;

HS_API const char* hs_version(void);
HS_API const char* hs_last_error(void);
HS_API void hs_free_string(char* s);

/* JSON object with sections agan, pretrain, synth, sample, eval, prepare,
 * toy and tsne. preset is "paper" or "desk". */
HS_API hs_status hs_default_config(const char* preset, char** out_json);

/* Toy corpus: records.csv, images/, schema.json, truth.csv, manifest.json.
 * toy_json keys: n, image_size, missing_rate. */
HS_API hs_status hs_toygen(const char* toy_json, uint64_t seed, const char* out_dir);

/* Filter, split 6:2:2, impute and resize a raw corpus directory. */
HS_API hs_status hs_prepare(const char* raw_dir, const char* prepare_json, uint64_t master_seed,
                            const char* out_dir);

/* ---- alpha-GAN */

HS_API hs_status hs_agan_create(const char* agan_json, uint64_t master_seed, hs_agan** out);
HS_API hs_status hs_agan_load(const char* path, hs_agan** out);
HS_API hs_status hs_agan_save(const hs_agan* model, const char* path);
HS_API void hs_agan_free(hs_agan* model);
HS_API int hs_agan_latent_dim(const hs_agan* model);
HS_API int hs_agan_image_size(const hs_agan* model);
HS_API long hs_agan_training_steps(const hs_agan* model);

/* pixels: image_size * image_size floats in [-1, 1], row-major.
 * code: latent_dim floats. */
HS_API hs_status hs_agan_encode(const hs_agan* model, const float* pixels, float* code);
HS_API hs_status hs_agan_decode(const hs_agan* model, const float* code, float* pixels);

/* Trains on every PNG below image_dir. loss_log may be NULL. */
HS_API hs_status hs_agan_pretrain(hs_agan* model, const char* image_dir, long steps,
                                  uint64_t master_seed, const char* loss_log);

/* Encodes the training and validation records of a prepared corpus. */
HS_API hs_status hs_encode(const hs_agan* model, const char* prepared_dir, const char* out_csv);

/* Decoded records (records.csv + images/) for an encoded table. */
HS_API hs_status hs_decode(const hs_agan* model, const char* encoded_csv, const char* prepared_dir,
                           const char* out_dir);

/* ---- tabular synthesizer */

HS_API hs_status hs_synth_create(const char* synth_json, uint64_t master_seed, hs_synth** out);
HS_API hs_status hs_synth_load(const char* path, hs_synth** out);
HS_API hs_status hs_synth_save(const hs_synth* synth, const char* path);
HS_API void hs_synth_free(hs_synth* synth);
HS_API int hs_synth_is_fitted(const hs_synth* synth);

/* epoch_log may be NULL. */
HS_API hs_status hs_synth_fit(hs_synth* synth, const char* encoded_csv, const char* prepared_dir,
                              const char* epoch_log);

/* reference_csv (may be NULL) must carry the synthesizer's training header. */
HS_API hs_status hs_synth_sample(const hs_synth* synth, size_t n, uint64_t master_seed,
                                 const char* out_csv, const char* reference_csv);

/* Row-permutes the latent block of a synthetic table against its clinical
 * block. */
HS_API hs_status hs_make_unmatched(const char* sds_csv, const char* prepared_dir,
                                   uint64_t master_seed, const char* out_csv);

/* ---- evaluation */

/* Scenario matrix (pds, sds<k>, uds<k>) on the prepared test split. */
HS_API hs_status hs_evaluate(const hs_agan* model, const hs_synth* synth, const char* prepared_dir,
                             const char* eval_json, uint64_t master_seed, const char* out_csv);

/* out_png and mixing may be NULL. */
HS_API hs_status hs_tsne(const char* first_csv, const char* second_csv, const char* prepared_dir,
                         const char* tsne_json, uint64_t master_seed, const char* out_csv,
                         const char* out_png, double* mixing);

#ifdef __cplusplus
}
#endif

#endif /* HYBRIDSYNTH_H */
