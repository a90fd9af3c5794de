#pragma once

// Diagonal disorder in qubit frequencies and counter-based seeding.

#include <cstddef>
#include <cstdint>
#include <vector>

namespace tcm {

enum class DisorderShape { Flat, FlatPlusGaussianJitter };

struct DisorderSpec {
  double mean = 5755.0;         // band centre, MHz
  double spread_delta = 120.0;  // full width of the flat band, MHz
  DisorderShape shape = DisorderShape::Flat;
  double jitter_sigma = 0.0;    // std of the Gaussian jitter, MHz (jittered shape only)
  std::uint64_t master_seed = 0;
};

void validate(const DisorderSpec& spec);

struct Realization {
  std::vector<double> epsilons;
  std::size_t realization_index = 0;
  std::uint64_t derived_seed = 0;
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Stream seed for work item `index` under `master_seed`. Depends only on the
/// pair, so items can be drawn in any order on any thread.
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t index);

/// Uniform double in [0, 1) from the top 53 bits of a 64-bit draw.
inline double unit_interval(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

Realization draw_realization(const DisorderSpec& spec, std::size_t n_qubits, std::size_t index);

}  // namespace tcm
