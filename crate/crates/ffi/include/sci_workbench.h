#ifndef SCI_WORKBENCH_H
#define SCI_WORKBENCH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible entry point.
 */
typedef enum SciStatus {
  SCI_STATUS_OK = 0,
  SCI_STATUS_NULL_POINTER = 1,
  SCI_STATUS_INVALID_UTF8 = 2,
  SCI_STATUS_USAGE = 3,
  SCI_STATUS_CATALOG = 4,
  SCI_STATUS_INVALID_ARGUMENT = 5,
  SCI_STATUS_DOMAIN = 6,
  SCI_STATUS_PANIC = 7,
} SciStatus;

/**
 * A loaded problem catalog.
 */
typedef struct SciCatalog SciCatalog;

/**
 * A finished run report.
 */
typedef struct SciReport SciReport;

/**
 * Sharpness flags: 1 true, 0 false, -1 unknown.
 */
typedef struct SciVerdict {
  int8_t pointwise_exact;
  int8_t witness_sharp;
  int8_t worst_case_exact;
} SciVerdict;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Runs one command given as `argc` C strings (without the program name).
 *
 * # Safety
 * `argv` must point to `argc` valid NUL-terminated strings; `out` must be writable.
 */
enum SciStatus sci_dispatch(size_t argc, const char *const *argv, struct SciReport **out);

/**
 * Runs one command given as a JSON array of argument strings.
 *
 * # Safety
 * `args_json` must be a valid NUL-terminated string; `out` must be writable.
 */
enum SciStatus sci_dispatch_json(const char *args_json, struct SciReport **out);

/**
 * Serializes a report as JSON. Free the string with [`sci_string_free`].
 *
 * # Safety
 * `report` must come from a dispatch call; `out` must be writable.
 */
enum SciStatus sci_report_json(const struct SciReport *report, char **out);

/**
 * 1 if every check passed, 0 if some failed, -1 for a null handle.
 *
 * # Safety
 * `report` must be null or come from a dispatch call.
 */
int32_t sci_report_passed(const struct SciReport *report);

/**
 * Number of checks in the report, 0 for a null handle.
 *
 * # Safety
 * `report` must be null or come from a dispatch call.
 */
size_t sci_report_check_count(const struct SciReport *report);

/**
 * # Safety
 * `report` must be null or come from a dispatch call, and not be freed twice.
 */
void sci_report_free(struct SciReport *report);

/**
 * Loads a catalog file; a null path gives the shipped catalog.
 *
 * # Safety
 * `path` must be null or a valid NUL-terminated string; `out` must be writable.
 */
enum SciStatus sci_catalog_load(const char *path, struct SciCatalog **out);

/**
 * Number of catalog entries, 0 for a null handle.
 *
 * # Safety
 * `catalog` must be null or come from [`sci_catalog_load`].
 */
size_t sci_catalog_entry_count(const struct SciCatalog *catalog);

/**
 * Number of (diagonal, window) pairs across spectral entries.
 *
 * # Safety
 * `catalog` must be null or come from [`sci_catalog_load`].
 */
size_t sci_catalog_spectral_pairs(const struct SciCatalog *catalog);

/**
 * # Safety
 * `catalog` must be null or come from [`sci_catalog_load`], and not be freed twice.
 */
void sci_catalog_free(struct SciCatalog *catalog);

/**
 * Sharpness flags of `len` exact heights at level `k`.
 *
 * # Safety
 * `heights` must point to `len` values; `out` must be writable.
 */
enum SciStatus sci_classify_heights(const uint32_t *heights,
                                    size_t len,
                                    uint32_t k,
                                    struct SciVerdict *out);

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call into the library on the same thread.
 */
const char *sci_last_error_message(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library, and not be freed twice.
 */
void sci_string_free(char *s);

/**
 * Library version, a static string.
 */
const char *sci_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SCI_WORKBENCH_H */
