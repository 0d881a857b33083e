#pragma once

// Reproducible random streams.
//
// Every stream is a xoshiro256** generator whose 256-bit state is filled by
// splitmix64 from a 64-bit key. The key is derived from a SeedSpec by
// folding (master seed, FNV-1a(experiment), n, replication, FNV-1a(purpose))
// through the splitmix64 finalizer. Both algorithms are fixed; changing
// either changes every stored result.

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>

namespace corrq {

inline constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Identifies one independent substream: (master seed, experiment, n,
/// replication, purpose).
struct SeedSpec {
    std::uint64_t master_seed = 0;
    std::string experiment = "default";
    std::uint64_t n = 0;
    std::uint64_t replication = 0;
    std::string purpose = "main";

    [[nodiscard]] std::uint64_t key() const noexcept {
        std::uint64_t acc = master_seed;
        std::uint64_t k = splitmix64(acc);
        for (std::uint64_t part : {fnv1a(experiment), n, replication, fnv1a(purpose)}) {
            acc = k ^ part;
            k = splitmix64(acc);
        }
        return k;
    }

    [[nodiscard]] SeedSpec with_purpose(std::string p) const {
        SeedSpec s = *this;
        s.purpose = std::move(p);
        return s;
    }
    [[nodiscard]] SeedSpec with_replication(std::uint64_t r) const {
        SeedSpec s = *this;
        s.replication = r;
        return s;
    }
    [[nodiscard]] SeedSpec with_n(std::uint64_t value) const {
        SeedSpec s = *this;
        s.n = value;
        return s;
    }
};

class Stream {
public:
    using result_type = std::uint64_t;

    explicit Stream(std::uint64_t key) noexcept {
        std::uint64_t sm = key;
        for (auto& w : s_) w = splitmix64(sm);
    }
    explicit Stream(const SeedSpec& spec) noexcept : Stream(spec.key()) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept { return next(); }

    result_type next() noexcept {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform on the open interval (0, 1); never returns 0 or 1.
    double uniform_open() noexcept {
        return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Exponential with the given rate by inversion, -ln(U)/rate.
    double exponential(double rate) noexcept { return -std::log(uniform_open()) / rate; }

    /// Standard normal by Box-Muller; the second variate is cached.
    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform_open()));
        const double phi = 2.0 * 3.14159265358979323846 * uniform_open();
        spare_ = r * std::sin(phi);
        has_spare_ = true;
        return r * std::cos(phi);
    }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t s_[4]{};
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace corrq
