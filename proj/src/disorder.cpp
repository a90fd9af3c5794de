#include "tcm/disorder.hpp"

#include <cmath>
#include <random>

#include "tcm/errors.hpp"

namespace tcm {

void validate(const DisorderSpec& spec) {
  if (!std::isfinite(spec.mean) || !std::isfinite(spec.spread_delta) ||
      !std::isfinite(spec.jitter_sigma)) {
    throw InvalidArgument("disorder parameters must be finite");
  }
  if (!(spec.spread_delta >= 0.0)) throw InvalidArgument("disorder spread must be non-negative");
  if (spec.jitter_sigma < 0.0) throw InvalidArgument("jitter sigma must be non-negative");
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t index) {
  return mix64(mix64(master_seed) ^ mix64(index * 0xD1B54A32D192ED03ULL + 1));
}

Realization draw_realization(const DisorderSpec& spec, std::size_t n_qubits, std::size_t index) {
  validate(spec);
  if (n_qubits == 0) throw InvalidArgument("a realization needs at least one qubit");

  Realization r;
  r.realization_index = index;
  r.derived_seed = derive_seed(spec.master_seed, index);
  r.epsilons.resize(n_qubits);

  std::mt19937_64 engine(r.derived_seed);
  const double lo = spec.mean - 0.5 * spec.spread_delta;
  for (auto& eps : r.epsilons) {
    eps = lo + spec.spread_delta * unit_interval(engine());
    // Rounding in lo + width*u can land one ulp past the upper edge.
    eps = std::min(eps, spec.mean + 0.5 * spec.spread_delta);
  }
  if (spec.shape == DisorderShape::FlatPlusGaussianJitter && spec.jitter_sigma > 0.0) {
    std::normal_distribution<double> jitter(0.0, spec.jitter_sigma);
    for (auto& eps : r.epsilons) eps += jitter(engine);
  }
  return r;
}

}  // namespace tcm
