#pragma once

#include <cstdint>
#include <initializer_list>

namespace ginnlp {

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Child seed for a path of indices below `base`, e.g. derive_seed(master, {instance})
// or derive_seed(master, {entry, trial, noise_idx, irrelevant_idx}). Each step
// hashes the running seed together with the next index.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) noexcept
{
    std::uint64_t s = mix64(base);
    for (auto idx : path) {
        s = mix64(s ^ mix64(idx + 0x632be59bd9b4e019ULL));
    }
    return s;
}

} // namespace ginnlp
