#pragma once

// Splittable seeding. A stream is identified by a root seed plus a path of
// integers (trial, round, batch, ...); each path hashes to an independent
// 64-bit seed, so results do not depend on the order streams are consumed.

#include <cstdint>
#include <initializer_list>
#include <random>

namespace kmlab {

using Engine = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = splitmix64(root);
  for (std::uint64_t p : path) h = splitmix64(h ^ splitmix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

inline Engine make_engine(std::uint64_t root, std::initializer_list<std::uint64_t> path = {}) {
  const std::uint64_t s = derive_seed(root, path);
  std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32)};
  return Engine(seq);
}

}  // namespace kmlab
