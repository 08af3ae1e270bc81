#include "lcat/rng.hpp"

#include <cmath>
#include <limits>

namespace lcat {

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
  std::uniform_int_distribution<std::int64_t> dist(lo, hi);
  return dist(engine_);
}

std::uint64_t Rng::geometric_skip(double p) {
  if (p >= 1.0) return 0;
  if (p <= 0.0) return std::numeric_limits<std::uint64_t>::max();
  const double u = uniform_open_low();
  const double k = std::floor(std::log(u) / std::log1p(-p));
  if (k >= 1.8e19) return std::numeric_limits<std::uint64_t>::max();
  return static_cast<std::uint64_t>(k);
}

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_tag(std::string_view tag) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view tag, std::uint64_t grid_index,
                          std::uint64_t run_index) noexcept {
  std::uint64_t h = mix64(master);
  h = mix64(h ^ hash_tag(tag));
  h = mix64(h ^ (grid_index * 0x9e3779b97f4a7c15ULL));
  h = mix64(h ^ (run_index + 0x632be59bd9b4e019ULL));
  return h;
}

}  // namespace lcat
