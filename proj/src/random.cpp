#include "safelevel/random.hpp"

#include <cmath>

#include "safelevel/errors.hpp"
#include "safelevel/probkit.hpp"

namespace safelevel::probkit {
namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

constexpr double kPoissonInversionLimit = 30.0;
constexpr double kBinomialInversionLimit = 30.0;

std::uint64_t poisson_by_inversion(double mean, RandomStream& stream) {
    const double u = stream.uniform();
    std::uint64_t k = 0;
    double pmf = std::exp(-mean);
    double cdf = pmf;
    while (u > cdf) {
        ++k;
        pmf *= mean / static_cast<double>(k);
        if (pmf == 0.0) break;  // rounding left cdf just short of u
        cdf += pmf;
    }
    return k;
}

// Hörmann (1993), "The transformed rejection method for generating Poisson
// random variables", algorithm PTRS.
std::uint64_t poisson_by_ptrs(double mean, RandomStream& stream) {
    const double slam = std::sqrt(mean);
    const double log_mean = std::log(mean);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);

    while (true) {
        const double u = stream.uniform() - 0.5;
        const double v = stream.uniform();
        const double us = 0.5 - std::abs(u);
        const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
        if (us >= 0.07 && v <= v_r) return static_cast<std::uint64_t>(k);
        if (k < 0.0 || (us < 0.013 && v > us)) continue;
        if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
            -mean + k * log_mean - log_gamma(k + 1.0)) {
            return static_cast<std::uint64_t>(k);
        }
    }
}

// Requires 0 < p <= 0.5.
std::uint64_t binomial_from_zero(std::uint64_t n, double p, RandomStream& stream) {
    const double u = stream.uniform();
    const double odds = p / (1.0 - p);
    double pmf = std::exp(static_cast<double>(n) * std::log1p(-p));
    double cdf = pmf;
    std::uint64_t k = 0;
    while (u > cdf && k < n) {
        pmf *= odds * static_cast<double>(n - k) / static_cast<double>(k + 1);
        ++k;
        if (pmf == 0.0) break;
        cdf += pmf;
    }
    return k;
}

// Requires 0 < p <= 0.5; searches from the mode in the direction of u.
std::uint64_t binomial_from_mode(std::uint64_t n, double p, RandomStream& stream) {
    const double u = stream.uniform();
    const double odds = p / (1.0 - p);
    auto k = static_cast<std::uint64_t>(std::floor(static_cast<double>(n + 1) * p));
    if (k > n) k = n;
    double pmf = binom_pmf(k, n, p);
    double cdf = binom_lower_tail(k, n, p);

    if (u <= cdf) {
        while (k > 0 && u <= cdf - pmf) {
            cdf -= pmf;
            pmf *= static_cast<double>(k) / (odds * static_cast<double>(n - k + 1));
            --k;
            if (pmf == 0.0) break;
        }
        return k;
    }
    while (u > cdf && k < n) {
        pmf *= odds * static_cast<double>(n - k) / static_cast<double>(k + 1);
        ++k;
        if (pmf == 0.0) break;
        cdf += pmf;
    }
    return k;
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
    std::uint64_t z = mix64(seed ^ kGolden) ^ rotl(mix64(stream_id + 0x632BE59BD9B4E019ULL), 17);
    for (auto& word : state_) {
        z += kGolden;
        word = mix64(z);
    }
    if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = kGolden;
}

RandomStream RandomStream::substream(std::uint64_t index) const {
    return RandomStream(seed_, mix64(stream_id_ ^ mix64(index + kGolden)));
}

std::uint64_t RandomStream::operator()() noexcept {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    ++draws_;
    return result;
}

double RandomStream::uniform() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

std::uint64_t sample_poisson(double mean, RandomStream& stream) {
    if (!(mean >= 0.0) || std::isinf(mean)) throw DomainError("sample_poisson: mean must be non-negative and finite");
    if (mean == 0.0) return 0;
    if (mean < kPoissonInversionLimit) return poisson_by_inversion(mean, stream);
    return poisson_by_ptrs(mean, stream);
}

std::uint64_t sample_binomial(std::uint64_t n, double p, RandomStream& stream) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("sample_binomial: p must lie in [0, 1]");
    if (n == 0 || p == 0.0) return 0;
    if (p == 1.0) return n;
    const bool flipped = p > 0.5;
    const double q = flipped ? 1.0 - p : p;
    const std::uint64_t k = static_cast<double>(n) * q < kBinomialInversionLimit
                                ? binomial_from_zero(n, q, stream)
                                : binomial_from_mode(n, q, stream);
    return flipped ? n - k : k;
}

}  // namespace safelevel::probkit
