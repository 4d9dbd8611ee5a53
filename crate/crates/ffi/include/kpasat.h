#ifndef KPASAT_H
#define KPASAT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Outcome of [`kpa_instance_solve`], numbered like solver exit codes.
 */
typedef enum KpaSolveResult {
  KPA_SOLVE_RESULT_UNKNOWN = 0,
  KPA_SOLVE_RESULT_SAT = 10,
  KPA_SOLVE_RESULT_UNSAT = 20,
} KpaSolveResult;

/**
 * Result code of every fallible call.
 */
typedef enum KpaStatus {
  KPA_STATUS_OK = 0,
  KPA_STATUS_NULL_POINTER = 1,
  KPA_STATUS_INVALID_UTF8 = 2,
  KPA_STATUS_INVALID_INPUT = 3,
  KPA_STATUS_IO = 4,
  KPA_STATUS_SOLVER = 5,
  KPA_STATUS_BUFFER_TOO_SMALL = 6,
  KPA_STATUS_PANIC = 7,
} KpaStatus;

/**
 * A small-scale AES cipher.
 */
typedef struct KpaCipher KpaCipher;

/**
 * A CNF instance, possibly carrying attack metadata.
 */
typedef struct KpaInstance KpaInstance;

/**
 * Runtime summary; quartiles interpolate linearly.
 */
typedef struct KpaSummary {
  size_t count;
  double median;
  double lower_quartile;
  double upper_quartile;
  double mean;
  double cv_percent;
  double min;
  double max;
} KpaSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or an empty string.
 * Valid until the next kpasat call on the same thread.
 */
const char *kpa_last_error(void);

/**
 * Creates SR(rounds, rows, cols, word_bits) with default field, matrices
 * and S-box.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum KpaStatus kpa_cipher_new(uint32_t rounds,
                              uint32_t rows,
                              uint32_t cols,
                              uint32_t word_bits,
                              struct KpaCipher **out);

/**
 * # Safety
 * `cipher` must come from [`kpa_cipher_new`] and not be used afterwards.
 */
void kpa_cipher_free(struct KpaCipher *cipher);

/**
 * Encrypts one hex block; `key` is hex or a named key (k3, k4, k6).
 *
 * # Safety
 * Pointers must be valid; `out` must hold `out_len` bytes.
 */
enum KpaStatus kpa_cipher_encrypt(const struct KpaCipher *cipher,
                                  const char *key,
                                  const char *plaintext,
                                  char *out,
                                  size_t out_len);

/**
 * # Safety
 * As [`kpa_cipher_encrypt`].
 */
enum KpaStatus kpa_cipher_decrypt(const struct KpaCipher *cipher,
                                  const char *key,
                                  const char *ciphertext,
                                  char *out,
                                  size_t out_len);

/**
 * Builds the known-plaintext instance for `key` and `count` plaintexts.
 * `key_token` may be null.
 *
 * # Safety
 * `plaintexts` must point to `count` valid strings.
 */
enum KpaStatus kpa_instance_generate(const struct KpaCipher *cipher,
                                     const char *key,
                                     const char *key_token,
                                     const char *const *plaintexts,
                                     size_t count,
                                     struct KpaInstance **out);

/**
 * Reads a DIMACS file.
 *
 * # Safety
 * Pointers must be valid.
 */
enum KpaStatus kpa_instance_read(const char *path, struct KpaInstance **out);

/**
 * Writes DIMACS with metadata comments; the secret key only if asked.
 *
 * # Safety
 * Pointers must be valid.
 */
enum KpaStatus kpa_instance_write_dimacs(const struct KpaInstance *instance,
                                         const char *path,
                                         bool include_key);

/**
 * Variable count, 0 for a null handle.
 *
 * # Safety
 * `instance` must be null or valid.
 */
uint32_t kpa_instance_num_vars(const struct KpaInstance *instance);

/**
 * Clause count, 0 for a null handle.
 *
 * # Safety
 * `instance` must be null or valid.
 */
uint64_t kpa_instance_num_clauses(const struct KpaInstance *instance);

/**
 * Solves with the built-in solver. A non-positive `timeout_secs` means no
 * limit. When SAT and the instance has metadata, the recovered key is
 * written to `key_out` (empty string otherwise) and `verified` tells
 * whether it re-encrypts every plaintext correctly.
 *
 * # Safety
 * Pointers must be valid; `key_out` must hold `key_len` bytes.
 */
enum KpaStatus kpa_instance_solve(const struct KpaInstance *instance,
                                  uint64_t seed,
                                  double timeout_secs,
                                  enum KpaSolveResult *result,
                                  char *key_out,
                                  size_t key_len,
                                  bool *verified);

/**
 * # Safety
 * `instance` must come from this library and not be used afterwards.
 */
void kpa_instance_free(struct KpaInstance *instance);

/**
 * Summarizes `n` runtimes.
 *
 * # Safety
 * `times` must point to `n` doubles.
 */
enum KpaStatus kpa_stats_summarize(const double *times, size_t n, struct KpaSummary *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KPASAT_H */
