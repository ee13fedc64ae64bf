/* unidial - unified vision-dialog transformer, C API.
 *
 * All functions returning ud_status leave a human-readable message in
 * ud_last_error() on failure. Strings returned through out-parameters are
 * heap-allocated; release them with ud_free(). Handles are opaque; one
 * handle must not be used from two threads at once.
 */
#ifndef UNIDIAL_H
#define UNIDIAL_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ud_status {
  UD_OK = 0,
  UD_ERR_USAGE = 1,    /* bad key, value, flag or selector */
  UD_ERR_DATA = 2,     /* unreadable/malformed input, hash mismatch */
  UD_ERR_TRAIN = 3,    /* non-finite loss or aborted training */
  UD_ERR_INTERNAL = 4  /* anything else */
} ud_status;

typedef struct ud_config ud_config;

/* Message of the most recent failure on this thread; never NULL. */
const char* ud_last_error(void);

void ud_free(char* text);

/* ---- configuration ---------------------------------------------------- */

ud_config* ud_config_new(void);
void ud_config_free(ud_config* cfg);

/* Flat key=value file; '#' comments. Later ud_config_set calls override. */
ud_status ud_config_load(ud_config* cfg, const char* path);
ud_status ud_config_set(ud_config* cfg, const char* key, const char* value);

/* Canonical resolved key=value text / its 16-hex-digit hash. */
ud_status ud_config_dump(const ud_config* cfg, char** text);
ud_status ud_config_hash(const ud_config* cfg, char** hex);

/* ---- runs -------------------------------------------------------------- */

/* Writes config.txt, vocab.txt, train_log.txt and model.ckpt to out_dir. */
ud_status ud_train(const ud_config* cfg, const char* out_dir, char** summary);

/* split is "train" or "eval"; writes metrics.txt/.json and candidates.ckpt. */
ud_status ud_eval(const ud_config* cfg, const char* checkpoint,
                  const char* split, const char* out_dir, char** report);

/* Greedy answers for eval instances [start, start+count), one per line. */
ud_status ud_generate(const ud_config* cfg, const char* checkpoint,
                      size_t start, size_t count, size_t max_len,
                      char** answers);

/* turns_csv / vis_csv are comma-separated lists, e.g. "0,3,9" and "1,0".
 * Trains one model per grid cell under out_dir; returns the result table. */
ud_status ud_ablate(const ud_config* cfg, const char* turns_csv,
                    const char* vis_csv, const char* out_dir, char** table);

ud_status ud_params_report(const ud_config* cfg, char** report);

/* Writes corpus_train.json / corpus_eval.json / dense_eval.json / images. */
ud_status ud_synth(const ud_config* cfg, const char* out_dir, char** summary);

/* ---- small utilities --------------------------------------------------- */

/* '0'/'X' visibility grid for a (context, answer) layout. */
ud_status ud_mask_grid(size_t context_len, size_t answer_len,
                       int bidirectional, char** grid);

/* (P*P*C)*D + D */
uint64_t ud_count_patch_params(size_t patch, size_t channels, size_t dim);

#ifdef __cplusplus
}
#endif

#endif /* UNIDIAL_H */
