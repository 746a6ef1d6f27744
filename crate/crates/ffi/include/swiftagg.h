#ifndef SWIFTAGG_H
#define SWIFTAGG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result code of every fallible call.
 */
typedef enum SwiftaggStatus {
  SWIFTAGG_STATUS_OK = 0,
  SWIFTAGG_STATUS_NULL_POINTER = 1,
  SWIFTAGG_STATUS_INVALID_UTF8 = 2,
  SWIFTAGG_STATUS_CONFIG_INVALID = 3,
  SWIFTAGG_STATUS_TOO_MANY_DROPOUTS = 4,
  SWIFTAGG_STATUS_NON_CONFORMING_FIELD = 5,
  SWIFTAGG_STATUS_NO_PRIME = 6,
  SWIFTAGG_STATUS_BUFFER_TOO_SMALL = 7,
  SWIFTAGG_STATUS_INTERNAL = 8,
  SWIFTAGG_STATUS_PANIC = 9,
} SwiftaggStatus;

/*
 A run configuration.
 */
typedef struct SwiftaggConfig SwiftaggConfig;

/*
 The report of one simulated round.
 */
typedef struct SwiftaggReport SwiftaggReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or null. Valid until the
 next call into the library from this thread.
 */
const char *swiftagg_last_error_message(void);

/*
 Parses a JSON run config.

 # Safety
 `json` must be a NUL-terminated string; `out` must be valid for writes.
 */
enum SwiftaggStatus swiftagg_config_from_json(const char *json, struct SwiftaggConfig **out);

/*
 A config with the given dimensions, a chain tree, no dropouts and seed 0.

 # Safety
 `out` must be valid for writes.
 */
enum SwiftaggStatus swiftagg_config_new(size_t users,
                                        size_t max_colluders,
                                        size_t max_dropouts,
                                        size_t partitions,
                                        size_t model_len,
                                        uint64_t ell,
                                        struct SwiftaggConfig **out);

/*
 # Safety
 `config` must be a live handle.
 */
enum SwiftaggStatus swiftagg_config_set_seed(struct SwiftaggConfig *config, uint64_t seed);

/*
 Marks `user` as dropped before the intra-group round.

 # Safety
 `config` must be a live handle.
 */
enum SwiftaggStatus swiftagg_config_add_dropout(struct SwiftaggConfig *config, size_t user);

/*
 # Safety
 `config` must be null or a handle not yet freed.
 */
void swiftagg_config_free(struct SwiftaggConfig *config);

/*
 Runs one round.

 # Safety
 `config` must be a live handle; `out` must be valid for writes.
 */
enum SwiftaggStatus swiftagg_simulate(const struct SwiftaggConfig *config,
                                      struct SwiftaggReport **out);

/*
 Normalized server load as an exact fraction.

 # Safety
 `report` must be a live handle; `num` and `den` valid for writes.
 */
enum SwiftaggStatus swiftagg_report_r_server(const struct SwiftaggReport *report,
                                             uint64_t *num,
                                             uint64_t *den);

/*
 Largest per-user load among surviving users as an exact fraction.

 # Safety
 `report` must be a live handle; `num` and `den` valid for writes.
 */
enum SwiftaggStatus swiftagg_report_r_user_max(const struct SwiftaggReport *report,
                                               uint64_t *num,
                                               uint64_t *den);

/*
 # Safety
 `report` must be a live handle; `total` and `silent` valid for writes.
 */
enum SwiftaggStatus swiftagg_report_edges(const struct SwiftaggReport *report,
                                          size_t *total,
                                          size_t *silent);

/*
 # Safety
 `report` must be a live handle; `prime` valid for writes.
 */
enum SwiftaggStatus swiftagg_report_prime(const struct SwiftaggReport *report, uint64_t *prime);

/*
 Copies the recovered aggregate into `buf`. `len` receives the aggregate
 length; when `capacity` is smaller nothing is copied and
 `BufferTooSmall` is returned.

 # Safety
 `report` must be a live handle; `buf` valid for `capacity` writes (may be
 null when `capacity` is 0); `len` valid for writes.
 */
enum SwiftaggStatus swiftagg_report_recovered(const struct SwiftaggReport *report,
                                              uint64_t *buf,
                                              size_t capacity,
                                              size_t *len);

/*
 Serializes the report as JSON. Release the string with
 [`swiftagg_string_free`].

 # Safety
 `report` must be a live handle; `out` valid for writes.
 */
enum SwiftaggStatus swiftagg_report_to_json(const struct SwiftaggReport *report, char **out);

/*
 # Safety
 `report` must be null or a handle not yet freed.
 */
void swiftagg_report_free(struct SwiftaggReport *report);

/*
 # Safety
 `s` must be null or a string returned by this library and not yet freed.
 */
void swiftagg_string_free(char *s);

/*
 Smallest prime in `(users*(ell-1), 2*users*(ell-1)]`.

 # Safety
 `prime` must be valid for writes.
 */
enum SwiftaggStatus swiftagg_select_prime(uint64_t users, uint64_t ell, uint64_t *prime);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SWIFTAGG_H */
