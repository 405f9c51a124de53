/* attribex C interface. All handles are opaque; every call that can fail
 * returns an ax_status and leaves a message in ax_last_error() (per thread).
 * Strings returned through char** are owned by the caller: free them with
 * ax_string_free. */
#ifndef ATTRIBEX_H
#define ATTRIBEX_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define AX_API __declspec(dllexport)
#else
#define AX_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ax_status {
  AX_OK = 0,
  AX_ERR_VALIDATION = 1, /* bad input, config, model file, sizes */
  AX_ERR_NUMERICS = 2,   /* non-finite values, failed decompositions */
  AX_ERR_IO = 3,
  AX_ERR_INTERNAL = 4
} ax_status;

typedef struct ax_model ax_model;
typedef struct ax_dataset ax_dataset;
typedef struct ax_explanation ax_explanation;
typedef struct ax_batch ax_batch; /* ordered list of explanations */
typedef struct ax_kkm ax_kkm;

AX_API const char* ax_version(void);
AX_API const char* ax_last_error(void);
AX_API void ax_string_free(char* s);
/* trace, debug, info, warn, error, off. Defaults to $ATTRIBEX_LOG or warn. */
AX_API ax_status ax_set_log_level(const char* level);

/* ---- models ---- */
AX_API ax_status ax_model_load(const char* path, ax_model** out);
AX_API ax_status ax_model_save(const ax_model* model, const char* path);
AX_API void ax_model_free(ax_model* model);
AX_API size_t ax_model_input_size(const ax_model* model);
AX_API size_t ax_model_output_size(const ax_model* model);
/* Writes up to `cap` dims; *rank receives the full rank. */
AX_API ax_status ax_model_input_shape(const ax_model* model, size_t* dims, size_t cap, size_t* rank);
AX_API ax_status ax_forward(const ax_model* model, const double* x, size_t n, double* out, size_t out_n);
AX_API ax_status ax_gradient(const ax_model* model, const double* x, size_t n, size_t target, double* grad);

/* ---- datasets ---- */
AX_API ax_status ax_dataset_load(const char* path, ax_dataset** out);
AX_API void ax_dataset_free(ax_dataset* ds);
AX_API size_t ax_dataset_size(const ax_dataset* ds);
AX_API ax_status ax_dataset_sample(const ax_dataset* ds, size_t index, const double** data, size_t* n);
/* *has_label is 0 when the sample carries no label. */
AX_API ax_status ax_dataset_label(const ax_dataset* ds, size_t index, long* label, int* has_label);

/* ---- explanations ---- */
typedef struct ax_explain_options {
  const char* method; /* occlusion gradient gxi smoothgrad ig smooth-ig lrp */
  const char* rules;  /* lrp0, eps=V, gamma=V, composite, zb:L,H */
  int64_t target;     /* < 0: argmax of the output */
  int has_seed;
  uint64_t seed;
  size_t steps;   /* 0: method default */
  size_t samples; /* 0: method default */
  int has_sigma;
  double sigma;
  size_t patch;  /* 0: default */
  size_t stride; /* 0: default */
  double fill;
} ax_explain_options;

AX_API void ax_explain_options_init(ax_explain_options* opts);
AX_API ax_status ax_explain(const ax_model* model, const double* x, size_t n, const ax_explain_options* opts,
                            ax_explanation** out);
/* Sample i uses a seed derived from (seed, i); threads == 0 picks the core count. */
AX_API ax_status ax_explain_batch(const ax_model* model, const ax_dataset* ds, const ax_explain_options* opts,
                                  size_t threads, ax_batch** out);
/* Pair relevance of <phi(x), phi(x')> with shape [n, n_prime]. */
AX_API ax_status ax_bilrp(const ax_model* embed, const double* x, size_t n, const double* x_prime, size_t n_prime,
                          const char* rules, ax_explanation** out);

AX_API void ax_explanation_free(ax_explanation* e);
AX_API ax_status ax_explanation_load(const char* path, ax_explanation** out);
AX_API ax_status ax_explanation_save(const ax_explanation* e, const char* path);
AX_API size_t ax_explanation_size(const ax_explanation* e);
AX_API const double* ax_explanation_values(const ax_explanation* e);
AX_API double ax_explanation_sum(const ax_explanation* e);
AX_API size_t ax_explanation_target(const ax_explanation* e);
AX_API const char* ax_explanation_method(const ax_explanation* e);

/* A file holding one explanation object or an array of them. */
AX_API ax_status ax_batch_load(const char* path, ax_batch** out);
AX_API ax_status ax_batch_save(const ax_batch* b, const char* path);
AX_API void ax_batch_free(ax_batch* b);
AX_API size_t ax_batch_size(const ax_batch* b);
AX_API const ax_explanation* ax_batch_get(const ax_batch* b, size_t index);

/* ---- evaluation ---- */
typedef struct ax_flip_options {
  const char* impute; /* zero, mean, neighbor */
  size_t iterations;  /* neighbor-mean sweeps, 0: 10 */
  size_t step_size;
  int64_t target; /* < 0: argmax */
} ax_flip_options;

AX_API void ax_flip_options_init(ax_flip_options* opts);
/* Number of points on a flip curve over n features. */
AX_API size_t ax_flip_length(size_t n, size_t step_size);
/* relevance == NULL: seeded random removal order. `mean_source` supplies the
 * dataset mean for mean/neighbor imputation and may be NULL for zero. */
AX_API ax_status ax_pixel_flip(const ax_model* model, const double* x, size_t n, const double* relevance,
                               uint64_t seed, const ax_flip_options* opts, const ax_dataset* mean_source,
                               double* scores, size_t scores_n, double* auc);
/* Explains and flips every sample; explain == NULL runs the random baseline.
 * Returns CSV rows sample,step,score plus mean rows and auc rows. */
AX_API ax_status ax_flip_dataset(const ax_model* model, const ax_dataset* ds, const ax_explain_options* explain,
                                 uint64_t seed, const ax_flip_options* opts, size_t threads, char** csv);
AX_API ax_status ax_filesize_proxy(const double* relevance, size_t n, int bins, size_t* bytes);
/* methods: comma-separated method names, e.g. "lrp,smooth-ig,occlusion";
 * the remaining knobs (seed, stride, ...) come from `base`. */
AX_API ax_status ax_bench(const ax_model* model, const ax_dataset* ds, const char* methods, size_t repetitions,
                          const ax_explain_options* base, char** json);

/* ---- dataset analysis ---- */
/* blur < 0 selects the default (1 pixel on grids, none otherwise). */
AX_API ax_status ax_spray(const ax_batch* b, double blur, size_t k, uint64_t seed, char** json);
/* groups_json may be NULL (one group each way). */
AX_API ax_status ax_pool(const ax_batch* b, const char* groups_json, char** json);

/* ---- theory ---- */
AX_API ax_status ax_verify(uint64_t first_seed, uint64_t last_seed, char** json, int* all_passed);

/* ---- neuralization ---- */
AX_API ax_status ax_kkm_load(const char* path, ax_kkm** out);
AX_API void ax_kkm_free(ax_kkm* k);
AX_API ax_status ax_kkm_logit(const ax_kkm* k, const double* x, size_t n, size_t cluster, double* logit);
AX_API ax_status ax_kkm_neuralize(const ax_kkm* k, size_t cluster, ax_model** out);
AX_API ax_status ax_neuralize_logit(const ax_model* model, size_t cls, double beta, ax_model** out);

/* ---- output ---- */
AX_API ax_status ax_render_ppm(const ax_explanation* e, size_t upscale, const char* path);
AX_API ax_status ax_gen_fixtures(uint64_t seed, const char* dir);

#ifdef __cplusplus
}
#endif

#endif
