#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace mrfppm {

using Rng = std::mt19937_64;

/// Named sub-streams. Every random draw in a run descends from one seed through these.
enum class Stream : std::uint64_t {
  kChain = 1,
  kPriorChain = 2,
  kSimulation = 3,
  kWarmStart = 4,
  kInit = 5,
};

/// Deterministic sub-stream for (seed, stream, index). Distinct triples give unrelated engines.
Rng make_stream(std::uint64_t seed, Stream stream, std::uint64_t index = 0);

double draw_uniform(Rng& rng);
double draw_normal(Rng& rng);
/// Gamma with shape/rate parameterization (mean shape/rate).
double draw_gamma(double shape, double rate, Rng& rng);

/// Index drawn with probability proportional to exp(log_weights[k]).
/// Weights are shifted by their maximum before exponentiation.
std::size_t sample_log_weights(std::span<const double> log_weights, Rng& rng);

double log_gamma_density(double x, double shape, double rate);

}  // namespace mrfppm
