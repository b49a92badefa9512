#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "tickrand/bitstring.hpp"
#include "tickrand/error.hpp"

namespace tickrand {

/// SplitMix64 (Steele, Lea and Flood 2014): a 64-bit Weyl sequence passed through a mixing function.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

/// n raw SplitMix64 words.
inline std::vector<std::uint64_t> prng_words(std::uint64_t seed, std::size_t n) {
  SplitMix64 g(seed);
  std::vector<std::uint64_t> out(n);
  for (auto& w : out) w = g.next();
  return out;
}

/// n words interpreted as strictly positive values: (w >> 2) + 1.
inline std::vector<std::int64_t> prng_stream(std::uint64_t seed, std::size_t n) {
  if (n < 1) throw DomainError("prng_stream needs n >= 1");
  SplitMix64 g(seed);
  std::vector<std::int64_t> out(n);
  for (auto& v : out) v = static_cast<std::int64_t>(g.next() >> 2) + 1;
  return out;
}

/// n bits from SplitMix64 words, most significant bit of each word first.
inline BitString prng_bits(std::uint64_t seed, std::size_t n) {
  SplitMix64 g(seed);
  BitString out;
  out.reserve(n);
  while (out.size() < n) {
    const std::uint64_t w = g.next();
    for (int b = 63; b >= 0 && out.size() < n; --b) out.push_back((w >> b) & 1U);
  }
  return out;
}

/// μ(1..n_max) by a linear sieve; index 0 is unused (0).
inline std::vector<std::int8_t> mobius_values(std::size_t n_max) {
  std::vector<std::int8_t> mu(n_max + 1, 0);
  if (n_max >= 1) mu[1] = 1;
  std::vector<std::uint32_t> primes;
  std::vector<bool> composite(n_max + 1, false);
  for (std::size_t i = 2; i <= n_max; ++i) {
    if (!composite[i]) {
      primes.push_back(static_cast<std::uint32_t>(i));
      mu[i] = -1;
    }
    for (auto p : primes) {
      const std::size_t ip = i * p;
      if (ip > n_max) break;
      composite[ip] = true;
      if (i % p == 0) {
        mu[ip] = 0;
        break;
      }
      mu[ip] = static_cast<std::int8_t>(-mu[i]);
    }
  }
  return mu;
}

/// Möbius signs for n = 1..n_max: 1 for μ = +1, 0 for μ = −1, nothing for μ = 0.
inline BitString mobius_stream(std::size_t n_max) {
  if (n_max < 1) throw DomainError("mobius_stream needs n_max >= 1");
  const auto mu = mobius_values(n_max);
  BitString out;
  out.reserve(n_max);
  for (std::size_t n = 1; n <= n_max; ++n)
    if (mu[n] != 0) out.push_back(mu[n] > 0);
  return out;
}

/// The first `count` Möbius bits, sieving as far as needed.
inline BitString mobius_bits(std::size_t count) {
  // Squarefree density is 6/π² ≈ 0.608.
  std::size_t n_max = count * 17 / 10 + 64;
  for (;;) {
    BitString bits = mobius_stream(n_max);
    if (bits.size() >= count) return bits.slice(0, count);
    n_max *= 2;
  }
}

/// Reads a bit file: ASCII '0'/'1' (whitespace ignored) if the file holds only those, otherwise
/// raw bytes unpacked most significant bit first.
inline BitString file_bits(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (data.empty()) throw Error("bit file " + path.string() + " is empty");
  bool ascii = true;
  bool any_bit = false;
  for (char c : data) {
    if (c == '0' || c == '1') {
      any_bit = true;
    } else if (c != '\n' && c != '\r' && c != ' ' && c != '\t') {
      ascii = false;
      break;
    }
  }
  BitString out;
  if (ascii && any_bit) {
    out.reserve(data.size());
    for (char c : data)
      if (c == '0' || c == '1') out.push_back(c == '1');
    return out;
  }
  out.reserve(data.size() * 8);
  for (unsigned char byte : data)
    for (int b = 7; b >= 0; --b) out.push_back((byte >> b) & 1U);
  return out;
}

inline void write_bits_ascii(const std::filesystem::path& path, const BitString& bits) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << bits.to_string();
}

/// Packs bits into bytes, most significant bit first; a partial last byte is zero-padded.
inline void write_bits_binary(const std::filesystem::path& path, const BitString& bits) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  for (std::size_t i = 0; i < bits.size(); i += 8) {
    unsigned char byte = 0;
    for (std::size_t b = 0; b < 8; ++b)
      if (i + b < bits.size() && bits[i + b]) byte |= static_cast<unsigned char>(0x80U >> b);
    out.put(static_cast<char>(byte));
  }
}

/// Cumulative ±1 walk over the bits starting at s0 (default: one more than the number of bits, so
/// the walk stays positive): n bits give n + 1 values, and level-1 symbolization returns the bits.
inline std::vector<std::int64_t> bits_to_walk(const BitString& bits, std::int64_t s0 = 0) {
  if (s0 == 0) s0 = static_cast<std::int64_t>(bits.size()) + 1;
  std::vector<std::int64_t> out;
  out.reserve(bits.size() + 1);
  out.push_back(s0);
  for (std::size_t i = 0; i < bits.size(); ++i) out.push_back(out.back() + (bits[i] ? 1 : -1));
  return out;
}

struct WalkParams {
  std::uint64_t seed = 1;
  std::size_t n = 0;          // number of prices
  double rho = 0.5;           // probability a move repeats the previous move's sign
  std::int64_t tick = 1;
  std::int64_t s0 = 1'000'000;
  double zero_prob = 0.0;     // probability of an unchanged price
};

struct WalkPath {
  std::vector<std::int64_t> prices;
  std::size_t clamped = 0;  // steps that would have reached zero or below
};

/// Price path whose nonzero moves repeat the sign of the previous nonzero move with probability
/// rho and flip otherwise. The first move's sign is a fair coin.
inline WalkPath persistent_walk(const WalkParams& p) {
  if (!(p.rho >= 0.0 && p.rho <= 1.0)) throw DomainError("rho must lie in [0, 1]");
  if (!(p.zero_prob >= 0.0 && p.zero_prob < 1.0)) throw DomainError("zero-move probability must lie in [0, 1)");
  if (p.tick <= 0) throw DomainError("tick must be positive");
  if (p.s0 <= 0) throw DomainError("start price must be positive");
  SplitMix64 g(p.seed);
  WalkPath path;
  path.prices.reserve(p.n);
  if (p.n == 0) return path;
  std::int64_t price = p.s0;
  path.prices.push_back(price);
  int sign = g.uniform() < 0.5 ? 1 : -1;
  bool first = true;
  for (std::size_t i = 1; i < p.n; ++i) {
    if (p.zero_prob > 0.0 && g.uniform() < p.zero_prob) {
      path.prices.push_back(price);
      continue;
    }
    if (!first && g.uniform() >= p.rho) sign = -sign;
    first = false;
    std::int64_t next = price + sign * p.tick;
    if (next <= 0) {
      next = p.tick;
      ++path.clamped;
    }
    price = next;
    path.prices.push_back(price);
  }
  return path;
}

/// Independent ±tick moves, up with probability up_prob (a drifting walk).
inline WalkPath biased_walk(std::uint64_t seed, std::size_t n, double up_prob, std::int64_t tick = 1,
                            std::int64_t s0 = 1'000'000) {
  if (!(up_prob >= 0.0 && up_prob <= 1.0)) throw DomainError("up probability must lie in [0, 1]");
  SplitMix64 g(seed);
  WalkPath path;
  path.prices.reserve(n);
  std::int64_t price = s0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) {
      std::int64_t next = price + (g.uniform() < up_prob ? tick : -tick);
      if (next <= 0) {
        next = tick;
        ++path.clamped;
      }
      price = next;
    }
    path.prices.push_back(price);
  }
  return path;
}

enum class GeneratorKind { DocumentedPrng, Mobius, FileBits, PersistentWalk };

inline std::string to_string(GeneratorKind k) {
  switch (k) {
    case GeneratorKind::DocumentedPrng: return "documented-prng";
    case GeneratorKind::Mobius: return "mobius";
    case GeneratorKind::FileBits: return "file-bits";
    case GeneratorKind::PersistentWalk: return "persistent-walk";
  }
  return "?";
}

inline GeneratorKind parse_generator_kind(const std::string& s) {
  for (auto k : {GeneratorKind::DocumentedPrng, GeneratorKind::Mobius, GeneratorKind::FileBits,
                 GeneratorKind::PersistentWalk})
    if (to_string(k) == s) return k;
  throw Error("unknown generator kind '" + s + "'");
}

struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::DocumentedPrng;
  std::uint64_t seed = 0;
  std::filesystem::path path;  // file-bits only
  WalkParams walk;             // persistent-walk only; n and seed are taken from the request

  std::string name() const {
    switch (kind) {
      case GeneratorKind::FileBits: return "file-bits:" + path.string();
      case GeneratorKind::Mobius: return "mobius";
      default: return to_string(kind) + ":" + std::to_string(seed);
    }
  }
};

/// The first `count` bits of a bit source. Throws if the source has fewer.
inline BitString generator_bits(const GeneratorSpec& g, std::size_t count) {
  switch (g.kind) {
    case GeneratorKind::DocumentedPrng: return prng_bits(g.seed, count);
    case GeneratorKind::Mobius: return mobius_bits(count);
    case GeneratorKind::FileBits: {
      BitString bits = file_bits(g.path);
      if (bits.size() < count)
        throw LengthError("generator " + g.name() + " has " + std::to_string(bits.size()) + " bits, need " +
                          std::to_string(count));
      return bits.slice(0, count);
    }
    case GeneratorKind::PersistentWalk: break;
  }
  throw Error("generator " + g.name() + " is not a bit source");
}

/// Positive values standing in for prices, whose level-1 symbolization has `count` bits
/// (count + 1 values). Bit sources become ±1 walks; the persistent walk is used directly.
inline std::vector<std::int64_t> generator_values(const GeneratorSpec& g, std::size_t count) {
  if (g.kind == GeneratorKind::PersistentWalk) {
    WalkParams p = g.walk;
    p.seed = g.seed;
    p.n = count + 1;
    return persistent_walk(p).prices;
  }
  return bits_to_walk(generator_bits(g, count));
}

}  // namespace tickrand
