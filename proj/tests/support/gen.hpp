#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

// Hand-rolled generators for property tests.
namespace gen {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) {
    return lo + (hi - lo) * (static_cast<double>(rng_() >> 11) * 0x1.0p-53);
  }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(rng_() % n); }
  int integer(int lo, int hi) { return lo + static_cast<int>(index(static_cast<std::size_t>(hi - lo + 1))); }
  bool coin(double p = 0.5) { return uniform() < p; }
  std::uint64_t raw() { return rng_(); }

  std::string word(std::size_t min_len = 1, std::size_t max_len = 8) {
    static constexpr char kAlpha[] = "abcdefghijklmnopqrstuvwxyz0123456789";
    std::string s;
    const std::size_t n = min_len + index(max_len - min_len + 1);
    for (std::size_t i = 0; i < n; ++i) s += kAlpha[index(sizeof(kAlpha) - 1)];
    return s;
  }

  // Printable text that exercises JSON escaping and multi-byte UTF-8.
  std::string text(std::size_t max_len = 24) {
    static const std::vector<std::string> kPieces = {"a", "Z", "7", " ", "\"", "\\", "/", "\n",
                                                     "\t", "é", "€", "😀", ":", ",", "{", "}"};
    std::string s;
    const std::size_t n = index(max_len + 1);
    for (std::size_t i = 0; i < n; ++i) s += kPieces[index(kPieces.size())];
    return s;
  }

 private:
  std::mt19937_64 rng_;
};

}  // namespace gen
