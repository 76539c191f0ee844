#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace agree {

// Exit codes shared by the CLI: 0 success, 2 usage, 3 data, 4 numeric.
enum class ExitCode : int { Ok = 0, Usage = 2, Data = 3, Numeric = 4 };

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

struct UsageError : Error {
  explicit UsageError(const std::string& what) : Error(ExitCode::Usage, what) {}
};
struct DataError : Error {
  explicit DataError(const std::string& what) : Error(ExitCode::Data, what) {}
};
struct NumericError : Error {
  explicit NumericError(const std::string& what) : Error(ExitCode::Numeric, what) {}
};

enum class Number : std::uint8_t { Singular = 0, Plural = 1 };

inline Number flip(Number n) { return n == Number::Singular ? Number::Plural : Number::Singular; }
std::string_view to_string(Number n);
Number number_from_string(std::string_view s);

std::string to_lower(std::string_view s);
bool starts_with_ci(std::string_view s, std::string_view prefix);

// Stable 64-bit hashing. Results are identical on every platform, so
// anything keyed on them (splits, coins, samplers) is reproducible.
std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t splitmix64(std::uint64_t x);
// Each consumer hashes in its own stream so that, say, the split and the
// dependency choice stay independent even under the same seed.
enum class HashStream : std::uint64_t { Split = 1, Select = 2, Coin = 3, Sample = 4 };
inline std::uint64_t stable_hash(std::string_view key, std::uint64_t seed, HashStream stream) {
  const std::uint64_t s = splitmix64(seed + 0x9e3779b97f4a7c15ULL) ^ splitmix64(static_cast<std::uint64_t>(stream) << 32);
  return splitmix64(fnv1a64(key) ^ splitmix64(s));
}
// Maps a 64-bit hash onto [0, 1) using its top 53 bits.
inline double unit_interval(std::uint64_t h) {
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace agree
