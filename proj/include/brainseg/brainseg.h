/* C interface to the brainseg library. Every call returns a bs_status;
 * details of the most recent failure are available from bs_last_error. */
#ifndef BRAINSEG_BRAINSEG_H
#define BRAINSEG_BRAINSEG_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(BRAINSEG_BUILDING_LIBRARY)
#    define BS_API __declspec(dllexport)
#  else
#    define BS_API __declspec(dllimport)
#  endif
#else
#  define BS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bs_status {
  BS_OK = 0,
  BS_ERR_FORMAT = 1,
  BS_ERR_UNSUPPORTED = 2,
  BS_ERR_DIMENSION = 3,
  BS_ERR_IO = 4,
  BS_ERR_VALIDATION = 5,
  BS_ERR_DEGENERATE = 6,
  BS_ERR_SINGULAR = 7,
  BS_ERR_CONFIG = 8,
  BS_ERR_CLASS_ABSENT = 9,
  BS_ERR_INVALID_ARGUMENT = 10,
  BS_ERR_INTERNAL = 11
} bs_status;

typedef enum bs_volume_kind {
  BS_VOLUME_SCALAR = 0, /* float intensities */
  BS_VOLUME_LABELS = 1, /* tissue codes 0..4 */
  BS_VOLUME_MASK = 2    /* 0 outside, 1 inside */
} bs_volume_kind;

typedef struct bs_context bs_context;
typedef struct bs_volume bs_volume;

typedef void (*bs_log_fn)(const char* message, void* user);

BS_API const char* bs_version(void);
BS_API const char* bs_status_name(bs_status status);

BS_API bs_status bs_context_create(bs_context** out);
BS_API void bs_context_destroy(bs_context* ctx);
/* Overrides applied on top of configuration files. threads >= 1. */
BS_API bs_status bs_context_set_threads(bs_context* ctx, int threads);
BS_API bs_status bs_context_set_seed(bs_context* ctx, uint64_t seed);
BS_API bs_status bs_context_set_log(bs_context* ctx, bs_log_fn fn, void* user);
/* Message of the last failed call on this context; "" if none. */
BS_API const char* bs_last_error(const bs_context* ctx);

/* Strings returned through char** are owned by the caller. */
BS_API void bs_string_free(char* s);

/* ---- volumes ---- */
BS_API bs_status bs_volume_load(bs_context* ctx, const char* path, bs_volume_kind kind, bs_volume** out);
BS_API bs_status bs_volume_save(bs_context* ctx, const bs_volume* vol, const char* path);
BS_API bs_status bs_volume_create(bs_context* ctx, bs_volume_kind kind, const int dims[3], const double spacing[3],
                                  const float* values, bs_volume** out);
BS_API void bs_volume_destroy(bs_volume* vol);
BS_API bs_volume_kind bs_volume_get_kind(const bs_volume* vol);
BS_API void bs_volume_get_dims(const bs_volume* vol, int dims[3]);
/* Copies all voxels (x fastest) into out, which must hold nx*ny*nz values. */
BS_API bs_status bs_volume_copy_values(bs_context* ctx, const bs_volume* vol, float* out, size_t capacity);

/* ---- stages ---- */
/* Writes t1w.nii, t2w.nii, pdw.nii, mask.nii, phantom_gt.nii and init_labels.nii
 * into out_dir. spec_json may be NULL for the standard phantom; degrade_json may
 * be NULL for an undegraded initialization. */
BS_API bs_status bs_phantom_generate(bs_context* ctx, const char* spec_json, const char* degrade_json,
                                     const char* out_dir);
/* Nominal GM/WM CNR of one channel ("t1w", "t2w", "pdw"). is_infinite is set
 * when the phantom has no noise on that channel. */
BS_API bs_status bs_phantom_cnr(bs_context* ctx, const char* spec_json, const char* channel, double* cnr,
                                int* is_infinite);
/* Relabels ground truth into a flawed initialization. */
BS_API bs_status bs_degrade(bs_context* ctx, const char* truth_path, const char* degrade_json, const char* out_path);

/* Normalizes the inputs named by a pipeline config and writes the partition
 * tree as JSON. */
BS_API bs_status bs_partition(bs_context* ctx, const char* config_path, const char* out_json_path);
/* Two-stage classification of every subdomain of a partition; writes one
 * label volume per subdomain plus manifest.json into out_dir. */
BS_API bs_status bs_classify(bs_context* ctx, const char* config_path, const char* partition_json_path,
                             const char* out_dir);
/* Fuses the subdomain labelings listed in a manifest into one label volume. */
BS_API bs_status bs_stitch(bs_context* ctx, const char* config_path, const char* partition_json_path,
                           const char* manifest_path, const char* out_labels_path);
/* Full pipeline. report_json may be NULL; otherwise receives the report text. */
BS_API bs_status bs_pipeline_run(bs_context* ctx, const char* config_path, char** report_json);

/* ---- quality ---- */
/* ssim_json may be NULL for default parameters. */
BS_API bs_status bs_mssim(bs_context* ctx, const bs_volume* ref, const bs_volume* test, const bs_volume* mask,
                          const char* ssim_json, double* out);
BS_API bs_status bs_ssim_map(bs_context* ctx, const bs_volume* ref, const bs_volume* test, const bs_volume* mask,
                             const char* ssim_json, bs_volume** out);
/* class_name: "CSF", "GM", "WM" or "MWM". */
BS_API bs_status bs_dice(bs_context* ctx, const bs_volume* a, const bs_volume* b, const char* class_name,
                         double* out);
/* Paints each labeled voxel with its class mean of the reference. */
BS_API bs_status bs_render_classified(bs_context* ctx, const bs_volume* labels, const bs_volume* reference,
                                      const bs_volume* mask, bs_volume** out);

#ifdef __cplusplus
}
#endif

#endif
