#pragma once

#include <cmath>
#include <cstdint>

namespace derf {

namespace detail {

constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ull;

// SplitMix64 finalizer. Bijective mixing of a 64-bit word.
inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ull;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebull;
    z ^= z >> 31;
    return z;
}

} // namespace detail

/// Counter-based splittable random stream.
///
/// Output word m is mix(key + m*gamma), so a stream is a pure function of
/// (key, counter). split(i) derives a child stream with an unrelated key,
/// which lets experiment cells draw independent randomness in any order
/// (or in parallel) while staying reproducible for a fixed seed.
///
/// Gaussians use Box-Muller on explicit uniforms, so the sequence is
/// identical across platforms and standard libraries.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed)
        : key_(detail::mix64(seed + detail::kGoldenGamma)) {}

    /// Derives an independent child stream; (key, child) -> child key is a hash.
    RngStream split(std::uint64_t child) const {
        return RngStream(from_key_tag{},
                         detail::mix64(key_ ^ detail::mix64((child + 1) * detail::kGoldenGamma)));
    }

    RngStream split(std::uint64_t a, std::uint64_t b) const { return split(a).split(b); }
    RngStream split(std::uint64_t a, std::uint64_t b, std::uint64_t c) const {
        return split(a).split(b).split(c);
    }

    std::uint64_t next_u64() {
        counter_ += detail::kGoldenGamma;
        return detail::mix64(key_ + counter_);
    }

    /// Uniform on [0, 1) with 53 random bits.
    double next_uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Standard normal draw (Box-Muller, second value cached).
    double next_gaussian() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        // u1 in (0, 1] so log(u1) is finite.
        const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
        const double u2 = next_uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 2.0 * M_PI * u2;
        cached_ = r * std::sin(t);
        have_cached_ = true;
        return r * std::cos(t);
    }

private:
    struct from_key_tag {};
    RngStream(from_key_tag, std::uint64_t key) : key_(key) {}

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    bool have_cached_ = false;
    double cached_ = 0.0;
};

} // namespace derf
