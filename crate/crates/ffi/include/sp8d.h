#ifndef SP8D_H
#define SP8D_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum Sp8dStatus {
  SP8D_STATUS_OK = 0,
  SP8D_STATUS_NULL_POINTER = 1,
  SP8D_STATUS_INVALID_ARGUMENT = 2,
  SP8D_STATUS_CONVENTION_NOT_FOUND = 3,
  SP8D_STATUS_NUMERICAL = 4,
  SP8D_STATUS_CONFIG = 5,
  SP8D_STATUS_IO = 6,
  SP8D_STATUS_PANIC = 7,
} Sp8dStatus;

typedef enum Sp8dFormat {
  SP8D_FORMAT_PDM_BPSK = 0,
  SP8D_FORMAT_PB5B8D = 1,
  SP8D_FORMAT_PA7B8D = 2,
  SP8D_FORMAT_PDM_QPSK = 3,
} Sp8dFormat;

// Opaque constellation handle.
typedef struct Sp8dConstellation Sp8dConstellation;

typedef struct Sp8dCensus {
  size_t pb;
  size_t pa;
  size_t pi;
} Sp8dCensus;

// `flag`: 0 none, 1 BER upper bound (cap reached), 2 error free.
// `q2_db` is NaN when no errors were counted.
typedef struct Sp8dBerRecord {
  uint64_t bits_compared;
  uint64_t bit_errors;
  double ber;
  double q2_db;
  uint64_t realizations;
  int32_t flag;
} Sp8dBerRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty after a success.
// Valid until the next call on the same thread.
const char *sp8d_last_error_message(void);

// Library version, static NUL-terminated string.
const char *sp8d_version(void);

// Builds one of the four formats. Free the handle with `sp8d_constellation_free`.
//
// # Safety
// `out` must be a valid pointer to writable storage for one pointer.
enum Sp8dStatus sp8d_constellation_build(enum Sp8dFormat format, struct Sp8dConstellation **out);

// # Safety
// `c` must be null or a handle returned by `sp8d_constellation_build`, not yet freed.
void sp8d_constellation_free(struct Sp8dConstellation *c);

// Number of symbols; 0 for a null handle.
//
// # Safety
// `c` must be null or a live handle.
size_t sp8d_constellation_len(const struct Sp8dConstellation *c);

// Information bits per 8D symbol; 0 for a null handle.
//
// # Safety
// `c` must be null or a live handle.
uint32_t sp8d_constellation_info_bits(const struct Sp8dConstellation *c);

// Squared minimum Euclidean distance; NaN for a null handle.
//
// # Safety
// `c` must be null or a live handle.
double sp8d_constellation_dmin_sq(const struct Sp8dConstellation *c);

// # Safety
// `c` must be a live handle and `out` valid for one write.
enum Sp8dStatus sp8d_constellation_census(const struct Sp8dConstellation *c,
                                          struct Sp8dCensus *out);

// Real 8D coordinates `(Re x1, Im x1, Re y1, Im y1, Re x2, Im x2, Re y2, Im y2)`
// and 8-bit label of the symbol at `index` (symbols are sorted by label).
//
// # Safety
// `c` must be a live handle, `coords` valid for 8 writes, `label` for one.
enum Sp8dStatus sp8d_constellation_symbol(const struct Sp8dConstellation *c,
                                          size_t index,
                                          double *coords,
                                          uint8_t *label);

// Maps a bit stream (one bit per byte, values 0/1) to symbol indices.
// `n_bits` must be a multiple of the information bits per symbol; on
// success `*out_len` symbols were written.
//
// # Safety
// `bits` valid for `n_bits` reads, `out_indices` for `out_cap` writes, `out_len` for one.
enum Sp8dStatus sp8d_encode(const struct Sp8dConstellation *c,
                            const uint8_t *bits,
                            size_t n_bits,
                            size_t *out_indices,
                            size_t out_cap,
                            size_t *out_len);

// Minimum-distance decision of a received real 8D vector.
//
// # Safety
// `received` valid for 8 reads; `out_index` and `out_info` for one write each.
enum Sp8dStatus sp8d_ml_decide(const struct Sp8dConstellation *c,
                               const double *received,
                               size_t *out_index,
                               uint8_t *out_info);

// Overhead bits `b6 b7 b8` (low three bits of `*out`) for 5 information bits.
//
// # Safety
// `out` valid for one write.
enum Sp8dStatus sp8d_pb5b8d_overhead(uint8_t info, uint8_t *out);

// Overhead bit `b8` for 7 information bits.
//
// # Safety
// `out` valid for one write.
enum Sp8dStatus sp8d_pa7b8d_overhead(uint8_t info, uint8_t *out);

// # Safety
// `out` valid for one write.
enum Sp8dStatus sp8d_q2_from_ber(double ber, double *out);

// Runs one Monte Carlo point for `format` using a TOML run configuration
// (the same keys as the command-line tool; span count `spans`, launch
// power `power_dbm`).
//
// # Safety
// `config_toml` must be a NUL-terminated UTF-8 string; `out` valid for one write.
enum Sp8dStatus sp8d_run_point_toml(const char *config_toml,
                                    enum Sp8dFormat format,
                                    struct Sp8dBerRecord *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SP8D_H */
