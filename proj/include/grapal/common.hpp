// common.hpp -- shared aliases, error taxonomy, and seed-stream helpers.

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace grapal {

using i64 = std::int64_t;
using u64 = std::uint64_t;
using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IndexError : Error { using Error::Error; };
struct ShapeError : Error { using Error::Error; };
struct SettingError : Error { using Error::Error; };
struct SamplingError : Error { using Error::Error; };
struct ProtocolError : Error { using Error::Error; };
struct MetricError : Error { using Error::Error; };
struct MaskError : Error { using Error::Error; };
struct TapeError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

using Rng = std::mt19937_64;

// Attribute slots (domain/time) use this sentinel when the column is absent
// for a particular instance.
inline constexpr int kNoAttr = std::numeric_limits<int>::min();

// Fixed stream tags so that scenario construction, parameter init, dropout,
// and method-internal sampling never consume from the same RNG stream.
enum : u64 {
  kStreamScenario = 1,
  kStreamInit = 2,
  kStreamDropout = 3,
  kStreamMethod = 4,
  kStreamBaseline = 5,
};

// splitmix64-style mixer; derives an independent seed for (seed, stream).
inline u64 mix_seed(u64 seed, u64 stream) {
  u64 z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline Rng make_rng(u64 seed, u64 stream) { return Rng(mix_seed(seed, stream)); }

}  // namespace grapal
