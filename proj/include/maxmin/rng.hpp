#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace maxmin {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to decorrelate derived seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic per-(purpose, timestep, agent) seed stream derived from one
/// master seed. Every algorithm in the harness draws its seeds through this
/// so runs with matched master seeds are paired sample-for-sample.
class SeedStream {
 public:
  explicit SeedStream(std::uint64_t master) : master_(master) {}

  std::uint64_t derive(std::string_view purpose, std::uint64_t a = 0,
                       std::uint64_t b = 0) const {
    std::uint64_t h = master_;
    for (char c : purpose) h = mix64(h ^ static_cast<std::uint64_t>(c));
    h = mix64(h ^ mix64(a + 0x100));
    h = mix64(h ^ mix64(b + 0x200));
    return h;
  }

  Rng make(std::string_view purpose, std::uint64_t a = 0,
           std::uint64_t b = 0) const {
    return Rng(derive(purpose, a, b));
  }

  std::uint64_t master() const { return master_; }

 private:
  std::uint64_t master_;
};

}  // namespace maxmin
