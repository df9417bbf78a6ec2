#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace ecommit {

/// Written into generated scenario files. Bump the suffix whenever any draw
/// below changes, so old files are never mistaken for reproducible ones.
inline constexpr const char* kRngIdentity = "mt19937_64/u53/box-muller-cos/fisher-yates/v1";

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a(std::string_view text);

/// The only source of randomness in the library. Draws are defined here
/// rather than through <random> distributions, whose output is left to the
/// standard library vendor.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    /// Standard normal, one cosine branch of Box-Muller per call.
    double normal();
    /// Uniform on [0, n) by rejection; n > 0.
    std::uint64_t below(std::uint64_t n);

    template <class T>
    void shuffle(std::vector<T>& items)
    {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace ecommit
