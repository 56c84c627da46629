#include "rotperm/rng.hpp"

#include <cmath>

namespace rotperm {

namespace {

constexpr uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr uint32_t kPhiloxW1 = 0xBB67AE85u;

std::array<uint32_t, 4> philox4x32_10(std::array<uint32_t, 4> ctr,
                                      std::array<uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    const uint64_t p0 = uint64_t(kPhiloxM0) * ctr[0];
    const uint64_t p1 = uint64_t(kPhiloxM1) * ctr[2];
    const std::array<uint32_t, 4> next = {
        uint32_t(p1 >> 32) ^ ctr[1] ^ key[0],
        uint32_t(p1),
        uint32_t(p0 >> 32) ^ ctr[3] ^ key[1],
        uint32_t(p0),
    };
    ctr = next;
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  return ctr;
}

uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

RandomStream::RandomStream(uint64_t seed, StreamRole role, uint64_t id)
    : key_{uint32_t(seed), uint32_t(seed >> 32)},
      stream_id_{uint32_t(id), uint32_t(id >> 32)},
      role_(static_cast<uint32_t>(role)) {}

std::array<uint32_t, 4> RandomStream::next_block() {
  // Counter layout: (block index lo, block index hi ^ role, id lo, id hi).
  // Distinct (role, id) pairs can never collide in counter space.
  const std::array<uint32_t, 4> ctr = {
      uint32_t(block_idx_),
      uint32_t(block_idx_ >> 32) ^ (role_ << 8),
      stream_id_[0],
      stream_id_[1],
  };
  ++block_idx_;
  return philox4x32_10(ctr, key_);
}

uint64_t RandomStream::next_u64() {
  if (buf_pos_ >= 4) {
    buf_ = next_block();
    buf_pos_ = 0;
  }
  const uint64_t lo = buf_[buf_pos_];
  const uint64_t hi = buf_[buf_pos_ + 1];
  buf_pos_ += 2;
  return lo | (hi << 32);
}

double RandomStream::next_double() {
  return double(next_u64() >> 11) * 0x1.0p-53;
}

double RandomStream::next_double_pos() {
  return double((next_u64() >> 11) + 1) * 0x1.0p-53;
}

double RandomStream::next_normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  const double u1 = next_double_pos();
  const double u2 = next_double();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * M_PI * u2;
  cached_normal_ = radius * std::sin(angle);
  has_cached_normal_ = true;
  return radius * std::cos(angle);
}

double RandomStream::next_gamma(double shape, double scale) {
  if (shape < 1.0) {
    const double g = next_gamma(shape + 1.0, 1.0);
    const double u = next_double_pos();
    // g * u^(1/shape), evaluated in log space so tiny shapes underflow
    // cleanly instead of producing NaN.
    return scale * g * std::exp(std::log(u) / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = next_normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = next_double_pos();
    if (u < 1.0 - 0.0331 * x * x * x * x) return scale * d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
      return scale * d * v;
  }
}

uint64_t RandomStream::next_below(uint64_t bound) {
  // Classic rejection: draw until below the largest multiple of bound.
  const uint64_t limit = bound * (~uint64_t(0) / bound);
  uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % bound;
}

uint64_t stream_id(uint32_t cluster_id, uint16_t occasion, uint16_t unit) {
  return uint64_t(cluster_id) | (uint64_t(occasion) << 32) |
         (uint64_t(unit) << 48);
}

uint64_t derive_seed(uint64_t seed, uint64_t a, uint64_t b) {
  return splitmix64(splitmix64(seed ^ splitmix64(a)) ^ splitmix64(~b));
}

}  // namespace rotperm
