#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

namespace wavetwin {

/// FNV-1a 64-bit hash; used for config fingerprints in artifact metadata.
inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t h = 0xcbf29ce484222325ULL) {
   for (unsigned char c : data) {
      h ^= static_cast<std::uint64_t>(c);
      h *= 0x100000001b3ULL;
   }
   return h;
}

/// splitmix64 finalizer; used to derive independent sub-seeds from the
/// single top-level seed.  Sub-seed for purpose P and index i is
/// splitmix64(seed ^ fnv1a64(P) ^ (i+1)).
inline std::uint64_t splitmix64(std::uint64_t x) {
   x += 0x9e3779b97f4a7c15ULL;
   x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
   x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
   return x ^ (x >> 31);
}

inline std::uint64_t sub_seed(std::uint64_t seed, std::string_view purpose, std::uint64_t index = 0) {
   return splitmix64(seed ^ fnv1a64(purpose) ^ (index + 1));
}

/// Two-sided 95% standard-normal quantile, hard-coded.
inline constexpr double kNormalQuantile975 = 1.959963984540054;

/// Inverse standard-normal CDF (Acklam's rational approximation,
/// relative accuracy about 1e-9; refined to ~1e-12 with one Halley step).
double normal_quantile(double p);

class WallTimer {
public:
   WallTimer() : start_(clock::now()) {}
   void reset() { start_ = clock::now(); }
   double seconds() const {
      return std::chrono::duration<double>(clock::now() - start_).count();
   }

private:
   using clock = std::chrono::steady_clock;
   clock::time_point start_;
};

}  // namespace wavetwin
