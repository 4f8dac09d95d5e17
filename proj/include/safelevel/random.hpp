#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace safelevel::probkit {

/// Splittable pseudo-random stream. The variate sequence is a pure function
/// of (seed, stream_id); distinct stream ids give independent sequences.
///
/// The generator is xoshiro256** with its state derived from the pair via
/// SplitMix64, so it also models UniformRandomBitGenerator.
class RandomStream {
public:
    using result_type = std::uint64_t;

    explicit RandomStream(std::uint64_t seed, std::uint64_t stream_id = 0);

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_id_; }
    /// Number of 64-bit words drawn so far.
    std::uint64_t draws() const noexcept { return draws_; }

    /// Child stream keyed by `index`; independent of this stream's position.
    RandomStream substream(std::uint64_t index) const;

    std::uint64_t operator()() noexcept;
    /// Uniform variate on the open interval (0, 1).
    double uniform() noexcept;

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::uint64_t draws_ = 0;
    std::array<std::uint64_t, 4> state_{};
};

/// Poisson(mean) variate: sequential-search inversion below mean 30,
/// transformed rejection (PTRS) at and above.
std::uint64_t sample_poisson(double mean, RandomStream& stream);

/// Binomial(n, p) variate by exact inversion, searching from 0 for small
/// n·min(p, 1−p) and outward from the mode otherwise.
std::uint64_t sample_binomial(std::uint64_t n, double p, RandomStream& stream);

}  // namespace safelevel::probkit
