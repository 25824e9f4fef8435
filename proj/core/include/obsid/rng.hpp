#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace obsid {

using Rng = std::mt19937_64;

/// Mixes a base seed with stream tags (iteration, stage, restart, ...) into an
/// independent 64-bit seed. Distinct tag tuples give statistically unrelated
/// streams, so one stage consuming more draws never shifts another stage.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags);

inline Rng make_rng(std::uint64_t base, std::initializer_list<std::uint64_t> tags) {
  return Rng(derive_seed(base, tags));
}

/// Stage tags used by the calibration loop.
enum class Stream : std::uint64_t {
  importance = 1,
  rejection = 2,
  optimizer = 3,
  simulator = 4,
  prior_mean = 5,
};

inline std::uint64_t tag(Stream s) { return static_cast<std::uint64_t>(s); }

}  // namespace obsid
