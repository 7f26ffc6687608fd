// Copyright 2026 The qlgf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace qlgf {

using Rng = std::mt19937_64;

namespace detail {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline constexpr std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace detail

/// Substream seed for (master seed, stream path, index). Every stochastic
/// component draws from its own substream, so results do not depend on the
/// order in which trials are scheduled across threads.
///
///   seed = splitmix64(splitmix64(master ^ fnv1a(path)) + index)
///
/// For a fixed master and path the map index -> seed is a bijection
/// (splitmix64 is invertible), so substreams in one sweep never collide.
inline constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view path, std::uint64_t index = 0) {
    return detail::splitmix64(detail::splitmix64(master ^ detail::fnv1a(path)) + index);
}

inline Rng make_stream(std::uint64_t master, std::string_view path, std::uint64_t index = 0) {
    return Rng(derive_seed(master, path, index));
}

}  // namespace qlgf
