/*
 * Copyright (c) 2026 The Inhibitor Attention Authors
 *
 * Licensed under the Apache License, Version 2.0;
 * You may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an 'AS IS' BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef INHIBITOR_INHIBITOR_H
#define INHIBITOR_INHIBITOR_H

#include <stddef.h>
#include <stdint.h>

#if defined(INHIBITOR_BUILDING_LIBRARY)
#define IHB_API __attribute__((visibility("default")))
#else
#define IHB_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ihb_status {
  IHB_OK = 0,
  IHB_ERR_DIMENSION = 1,
  IHB_ERR_CONTRACT = 2,
  IHB_ERR_DEGENERATE = 3,
  IHB_ERR_NUMERIC = 4,
  IHB_ERR_INPUT = 5,
  IHB_ERR_CONFIG = 6,
  IHB_ERR_CORRUPT_CHECKPOINT = 7,
  IHB_ERR_IO = 8,
  IHB_ERR_INTERNAL = 9,
  IHB_ERR_INVALID_ARGUMENT = 10
} ihb_status;

typedef struct ihb_config ihb_config;
typedef struct ihb_dataset ihb_dataset;
typedef struct ihb_model ihb_model;

/* Message of the last failed call on this thread ("" after success). */
IHB_API const char* ihb_last_error(void);
IHB_API const char* ihb_status_name(ihb_status status);
IHB_API const char* ihb_version(void);

/* Strings returned through char** out-parameters are owned by the caller. */
IHB_API void ihb_string_free(char* s);

/* ---- configuration --------------------------------------------------- */

/* A readable file path, or a built-in preset name such as "layerwise" or
 * "desk/finetune". */
IHB_API ihb_status ihb_config_resolve(const char* path_or_preset, ihb_config** out);
IHB_API ihb_status ihb_config_parse(const char* text, ihb_config** out);
IHB_API void ihb_config_free(ihb_config* config);
IHB_API ihb_status ihb_config_serialize(const ihb_config* config, char** out_text);
/* Newline-separated list of built-in preset names. */
IHB_API ihb_status ihb_config_preset_names(char** out_text);
IHB_API ihb_status ihb_config_set_seed(ihb_config* config, uint64_t seed);
IHB_API ihb_status ihb_config_seed(const ihb_config* config, uint64_t* out);
/* "layerwise", "full_layer", "task_specific" or "finetune". */
IHB_API ihb_status ihb_config_set_regime(ihb_config* config, const char* regime);
IHB_API ihb_status ihb_config_regime(const ihb_config* config, char** out);
IHB_API ihb_status ihb_config_set_variant(ihb_config* config, const char* variant);
IHB_API ihb_status ihb_config_seq_len(const ihb_config* config, size_t* out);
/* Classifier width of the config's model (0 when it has no head). */
IHB_API ihb_status ihb_config_n_classes(const ihb_config* config, size_t* out);
/* Non-zero when the model exceeds a laptop-sized budget. */
IHB_API ihb_status ihb_config_full_scale(const ihb_config* config, int* out);

/* ---- datasets -------------------------------------------------------- */

/* labeled != 0: "label<TAB>text" lines; otherwise one document per line. */
IHB_API ihb_status ihb_dataset_load(const char* path, int labeled, ihb_dataset** out);
/* Training and held-out splits as described by the config's [data]
 * section (synthetic corpus unless paths are set). `eval_out` may be NULL. */
IHB_API ihb_status ihb_dataset_from_config(const ihb_config* config, ihb_dataset** train_out,
                                           ihb_dataset** eval_out);
IHB_API ihb_status ihb_dataset_save(const ihb_dataset* data, const char* path, int labeled);
IHB_API ihb_status ihb_dataset_size(const ihb_dataset* data, size_t* out);
IHB_API void ihb_dataset_free(ihb_dataset* data);

/* ---- models ---------------------------------------------------------- */

/* Fresh model with the config's architecture. `variant` overrides the
 * config's attention variant when non-NULL. */
IHB_API ihb_status ihb_model_init(const ihb_config* config, const char* variant, uint64_t seed,
                                  ihb_model** out);
IHB_API ihb_status ihb_model_load(const char* path, ihb_model** out);
IHB_API ihb_status ihb_model_save(const ihb_model* model, const char* path);
/* Copy of `teacher` switched to `variant`, with per-head scalars reset. */
IHB_API ihb_status ihb_model_student(const ihb_model* teacher, const char* variant, ihb_model** out);
/* Attaches a fresh classifier head with `n_classes` outputs when the model
 * has none; a model with a matching head is left unchanged. */
IHB_API ihb_status ihb_model_ensure_classifier(ihb_model* model, size_t n_classes, uint64_t seed);
/* JSON: {"config": {...}, "parameters": [{"name", "shape"}...]} */
IHB_API ihb_status ihb_model_describe(const ihb_model* model, char** out_json);
IHB_API void ihb_model_free(ihb_model* model);

/* ---- training and evaluation ----------------------------------------- */

/* Receives one JSON object per applied optimizer step:
 * {"step","phase","layer","loss","lr","seed"}. */
typedef void (*ihb_loss_callback)(const char* jsonl_record, void* user);

/* Runs the config's regime (layerwise, full_layer or task_specific) from
 * `teacher` into `student`. `summary_json` (may be NULL) receives per-phase
 * loss summaries and freeze audits. */
IHB_API ihb_status ihb_distill(const ihb_config* config, const ihb_model* teacher, ihb_model* student,
                               const ihb_dataset* data, ihb_loss_callback callback, void* user,
                               char** summary_json);
IHB_API ihb_status ihb_finetune(const ihb_config* config, ihb_model* model, const ihb_dataset* train,
                                const ihb_dataset* eval, ihb_loss_callback callback, void* user,
                                char** summary_json);
IHB_API ihb_status ihb_eval_accuracy(const ihb_model* model, const ihb_dataset* data, size_t seq_len,
                                     double* out);
IHB_API ihb_status ihb_eval_hidden_mse(const ihb_model* teacher, const ihb_model* student,
                                       const ihb_dataset* data, size_t seq_len, double* out);

/* ---- diagnostics ----------------------------------------------------- */

/* JSON array of {"op","instances","max_rel_error"}. */
IHB_API ihb_status ihb_gradcheck(const char* variant, uint64_t seed, size_t trials, char** out_json);
/* Operation-count comparison; `grid` NULL selects the default grid. */
IHB_API ihb_status ihb_bench(const char* grid, char** out_csv, char** out_table);

#ifdef __cplusplus
}
#endif

#endif /* INHIBITOR_INHIBITOR_H */
