#pragma once

#include <cstdint>
#include <cstdio>
#include <string>

namespace oatta {

// Shortest-faithful text form of a double (17 significant digits round-trips
// IEEE 754 binary64 exactly). Used by every CSV writer so reruns are
// byte-identical.
inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

// FNV-1a over bytes; stable config fingerprint for run manifests.
inline std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace oatta
