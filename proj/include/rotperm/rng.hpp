#pragma once

#include <array>
#include <cstdint>

namespace rotperm {

// Stream roles keep draws for different purposes statistically independent
// even when they share (seed, id). Values are part of the reproducibility
// contract: changing them changes every generated dataset.
enum class StreamRole : uint32_t {
  longitudinal_effect = 1,
  cross_sectional_effect = 2,
  unit_noise = 3,
  weighted_draw = 4,
  multiplier = 5,
  swap_bits = 6,
  rotation_shuffle = 7,
  rep_params = 8,
  probe = 9,
  generic = 10,
};

// Counter-based stream built on Philox4x32-10. A stream is addressed by
// (seed, role, id); draws within a stream are addressed by a block counter.
// Streams never share state, so clusters/occasions/replicates can be
// generated in any order (or concurrently) with identical results.
class RandomStream {
 public:
  RandomStream(uint64_t seed, StreamRole role, uint64_t id);

  uint64_t next_u64();
  // Uniform on [0,1) with 53 random bits.
  double next_double();
  // Uniform on (0,1]; safe as a log() argument.
  double next_double_pos();
  // Standard normal via Box-Muller; the second variate of each pair is
  // cached inside the stream.
  double next_normal();
  // Gamma(shape, scale) via Marsaglia-Tsang, with the power-of-uniform
  // boost for shape < 1 (underflows to 0 for extremely small shapes,
  // which is the correct double).
  double next_gamma(double shape, double scale);
  // Unbiased integer in [0, bound) by rejection.
  uint64_t next_below(uint64_t bound);

 private:
  std::array<uint32_t, 4> next_block();

  std::array<uint32_t, 2> key_;
  std::array<uint32_t, 2> stream_id_;
  uint32_t role_;
  uint64_t block_idx_ = 0;
  std::array<uint32_t, 4> buf_{};
  int buf_pos_ = 4;  // empty
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

// Packs structured indices into a stream id. Occasion and unit are small;
// cluster ids fit comfortably in 32 bits.
uint64_t stream_id(uint32_t cluster_id, uint16_t occasion, uint16_t unit);

// Derives an independent sub-seed, e.g. one per simulation repetition.
uint64_t derive_seed(uint64_t seed, uint64_t a, uint64_t b = 0);

}  // namespace rotperm
