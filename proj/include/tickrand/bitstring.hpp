#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tickrand/error.hpp"

namespace tickrand {

/// Append-only packed sequence of bits. Bit i lives in word i / 64 at
/// position i % 64 (least significant first).
class BitString {
 public:
  BitString() = default;

  /// Parses a string of '0' / '1' characters.
  static BitString from_string(std::string_view text) {
    BitString out;
    out.reserve(text.size());
    for (char c : text) {
      if (c == '0' || c == '1') {
        out.push_back(c == '1');
      } else {
        throw DomainError(std::string("invalid bit character '") + c + "'");
      }
    }
    return out;
  }

  static BitString from_bytes(std::span<const std::uint8_t> bits) {
    BitString out;
    out.reserve(bits.size());
    for (auto b : bits) out.push_back(b != 0);
    return out;
  }

  void reserve(std::size_t n) { words_.reserve((n + 63) / 64); }

  void push_back(bool bit) {
    if (size_ % 64 == 0) words_.push_back(0);
    if (bit) words_.back() |= std::uint64_t{1} << (size_ % 64);
    ++size_;
  }

  void append(const BitString& other) {
    reserve(size_ + other.size_);
    if (size_ % 64 == 0) {
      words_.insert(words_.end(), other.words_.begin(), other.words_.end());
      size_ += other.size_;
      return;
    }
    for (std::size_t i = 0; i < other.size_; ++i) push_back(other[i]);
  }

  bool operator[](std::size_t i) const { return (words_[i / 64] >> (i % 64)) & 1U; }

  bool at(std::size_t i) const {
    if (i >= size_) throw std::out_of_range("BitString::at");
    return (*this)[i];
  }

  std::size_t size() const noexcept { return size_; }
  bool empty() const noexcept { return size_ == 0; }

  std::size_t count_ones() const noexcept {
    std::size_t n = 0;
    for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
  }
  std::size_t count_zeros() const noexcept { return size_ - count_ones(); }

  BitString complement() const {
    BitString out = *this;
    for (auto& w : out.words_) w = ~w;
    if (size_ % 64 != 0) out.words_.back() &= (std::uint64_t{1} << (size_ % 64)) - 1;
    return out;
  }

  BitString slice(std::size_t first, std::size_t count) const {
    if (first + count > size_) throw std::out_of_range("BitString::slice");
    BitString out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back((*this)[first + i]);
    return out;
  }

  /// One byte per bit (0 or 1); the representation the test kernels consume.
  std::vector<std::uint8_t> unpack() const {
    std::vector<std::uint8_t> out(size_);
    for (std::size_t i = 0; i < size_; ++i) out[i] = (*this)[i] ? 1 : 0;
    return out;
  }

  std::string to_string() const {
    std::string s(size_, '0');
    for (std::size_t i = 0; i < size_; ++i)
      if ((*this)[i]) s[i] = '1';
    return s;
  }

  friend bool operator==(const BitString& a, const BitString& b) {
    return a.size_ == b.size_ && a.words_ == b.words_;
  }

 private:
  std::vector<std::uint64_t> words_;
  std::size_t size_ = 0;
};

}  // namespace tickrand
