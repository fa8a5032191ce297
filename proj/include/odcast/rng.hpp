#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace odcast {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
	x += 0x9e3779b97f4a7c15ULL;
	x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
	x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
	return x ^ (x >> 31);
}

/// Seed of an independent substream derived from (seed, index).
constexpr std::uint64_t substream(std::uint64_t seed, std::uint64_t index) {
	return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

/// Seed of a named substream; FNV-1a over the name.
constexpr std::uint64_t substream(std::uint64_t seed, std::string_view name) {
	std::uint64_t h = 0xcbf29ce484222325ULL;
	for (char c : name) {
		h ^= std::uint64_t(static_cast<unsigned char>(c));
		h *= 0x100000001b3ULL;
	}
	return substream(seed, h);
}

using Rng = std::mt19937_64;

} // namespace odcast
