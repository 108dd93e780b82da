#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace glam {

// splitmix64 finalizer, used to derive independent sub-stream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t hash_tag(std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Seed of the sub-stream identified by (seed, tag, index).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag,
                                    std::uint64_t index = 0) {
  return mix64(mix64(seed ^ hash_tag(tag)) + mix64(index + 0x51ed2701ULL));
}

// Explicit random stream. Uniform and normal variates are produced by code in
// this library (not std distributions) so that streams are reproducible
// across standard library implementations.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  Rng substream(std::string_view tag, std::uint64_t index = 0) {
    return Rng(derive_seed(engine_(), tag, index));
  }

  // Uniform on the open interval (0, 1).
  double uniform() {
    std::uint64_t bits = engine_() >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  double normal();

  std::uint64_t next_u64() { return engine_(); }

private:
  std::mt19937_64 engine_;
};

}  // namespace glam
