#include "npts/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace npts {

namespace {

std::uint64_t splitmix64(std::uint64_t& state)
{
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace

double log_sum_exp(std::span<const double> log_weights)
{
    if (log_weights.empty())
        return -std::numeric_limits<double>::infinity();
    const double top = *std::max_element(log_weights.begin(), log_weights.end());
    if (!std::isfinite(top))
        return top;
    double acc = 0.0;
    for (double lw : log_weights)
        acc += std::exp(lw - top);
    return top + std::log(acc);
}

std::vector<double> normalize_log_weights(std::span<const double> log_weights)
{
    if (log_weights.empty())
        throw std::domain_error("log weights have no finite mass");
    const double top = *std::max_element(log_weights.begin(), log_weights.end());
    if (!std::isfinite(top))
        throw std::domain_error("log weights have no finite mass");
    // shift by the max and divide, so large offsets cost no precision
    std::vector<double> p(log_weights.size());
    std::transform(log_weights.begin(), log_weights.end(), p.begin(),
                   [top](double lw) { return std::exp(lw - top); });
    double total = 0.0;
    for (double v : p)
        total += v;
    for (auto& v : p)
        v /= total;
    return p;
}

std::size_t sample_log_categorical(std::span<const double> log_weights, Rng& rng)
{
    if (log_weights.size() == 1)
        return 0;
    const double top = *std::max_element(log_weights.begin(), log_weights.end());
    if (!std::isfinite(top))
        throw std::domain_error("log weights have no finite mass");

    double total = 0.0;
    for (double lw : log_weights)
        total += std::exp(lw - top);
    std::uniform_real_distribution<double> unif(0.0, total);
    double u = unif(rng);
    for (std::size_t k = 0; k < log_weights.size(); ++k) {
        u -= std::exp(log_weights[k] - top);
        if (u < 0.0)
            return k;
    }
    // round-off: fall back to the last entry with mass
    for (std::size_t k = log_weights.size(); k-- > 0;)
        if (std::isfinite(log_weights[k]))
            return k;
    return log_weights.size() - 1;
}

std::size_t argmax_random_tie(std::span<const double> values, Rng& rng)
{
    if (values.empty())
        throw std::invalid_argument("argmax of an empty range");
    const double top = *std::max_element(values.begin(), values.end());
    std::vector<std::size_t> ties;
    for (std::size_t i = 0; i < values.size(); ++i)
        if (values[i] == top)
            ties.push_back(i);
    if (ties.size() == 1)
        return ties.front();
    std::uniform_int_distribution<std::size_t> pick(0, ties.size() - 1);
    return ties[pick(rng)];
}

Rng make_stream(std::uint64_t base_seed, std::uint64_t stream_index)
{
    std::uint64_t state = base_seed;
    const std::uint64_t a = splitmix64(state);
    state = a ^ (stream_index * 0xd1342543de82ef95ULL + 0x632be59bd9b4e019ULL);
    std::vector<std::uint32_t> words;
    for (int i = 0; i < 4; ++i) {
        const std::uint64_t v = splitmix64(state);
        words.push_back(static_cast<std::uint32_t>(v));
        words.push_back(static_cast<std::uint32_t>(v >> 32));
    }
    std::seed_seq seq(words.begin(), words.end());
    return Rng(seq);
}

} // namespace npts
