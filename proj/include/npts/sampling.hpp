#pragma once

#include "npts/conjugate.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace npts {

double log_sum_exp(std::span<const double> log_weights);

/// Normalized probabilities from unnormalized log weights.
std::vector<double> normalize_log_weights(std::span<const double> log_weights);

/// Draw an index with probability proportional to exp(log_weights[i]).
std::size_t sample_log_categorical(std::span<const double> log_weights, Rng& rng);

/// Index of the maximum; ties are broken uniformly at random. The rng is only
/// consumed when more than one entry attains the maximum.
std::size_t argmax_random_tie(std::span<const double> values, Rng& rng);

/// Independent random stream for (base_seed, stream_index), built by passing a
/// SplitMix64 counter sequence through std::seed_seq.
Rng make_stream(std::uint64_t base_seed, std::uint64_t stream_index);

} // namespace npts
