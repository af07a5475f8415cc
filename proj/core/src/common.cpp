#include "salc/common.hpp"

#include <bit>
#include <iomanip>
#include <ostream>

namespace salc {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = splitmix64(base);
  for (std::uint64_t p : parts) h = splitmix64(h ^ splitmix64(p));
  return h;
}

std::uint64_t mix_seed(std::uint64_t base, std::string_view label) {
  // FNV-1a keeps label hashing stable across standard libraries.
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return mix_seed(base, {h});
}

std::uint64_t bits_of(double value) {
  if (value == 0.0) value = 0.0;  // fold -0.0
  return std::bit_cast<std::uint64_t>(value);
}

void set_exact_precision(std::ostream& os) {
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
}

}  // namespace salc
