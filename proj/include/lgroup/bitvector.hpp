// SPDX-FileCopyrightText: © 2026 The lgroup Authors
//
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "lgroup/error.hpp"

namespace lgroup {

// Fixed-length bit string; one mask row. Bit 0 is the leftmost character of
// to_string() and the most significant bit of the first hex digit of to_hex().
class BitVector {
 public:
  BitVector() = default;
  explicit BitVector(std::size_t size) : size_(size), words_((size + 63) / 64, 0) {}

  static BitVector ones(std::size_t size) {
    BitVector v(size);
    for (std::size_t i = 0; i < size; ++i) v.set(i);
    return v;
  }

  static BitVector from_string(std::string_view bits) {
    BitVector v(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i) {
      if (bits[i] == '1') v.set(i);
      else if (bits[i] != '0') throw ContractError("BitVector::from_string: expected '0' or '1'");
    }
    return v;
  }

  std::size_t size() const noexcept { return size_; }

  bool test(std::size_t i) const noexcept { return (words_[i >> 6] >> (i & 63)) & 1u; }
  void set(std::size_t i, bool value = true) noexcept {
    const std::uint64_t bit = std::uint64_t{1} << (i & 63);
    if (value) words_[i >> 6] |= bit;
    else words_[i >> 6] &= ~bit;
  }

  std::size_t popcount() const noexcept {
    std::size_t n = 0;
    for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
  }

  // Calls fn(i) for every set bit in ascending order.
  template <typename Fn>
  void for_each_set(Fn&& fn) const {
    for (std::size_t w = 0; w < words_.size(); ++w) {
      std::uint64_t word = words_[w];
      while (word != 0) {
        const int b = std::countr_zero(word);
        fn(w * 64 + static_cast<std::size_t>(b));
        word &= word - 1;
      }
    }
  }

  std::string to_string() const {
    std::string s(size_, '0');
    for (std::size_t i = 0; i < size_; ++i)
      if (test(i)) s[i] = '1';
    return s;
  }

  // Nibble k holds bits 4k..4k+3, bit 4k in the high position; the tail is zero padded.
  std::string to_hex() const {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string s;
    s.reserve((size_ + 3) / 4);
    for (std::size_t base = 0; base < size_; base += 4) {
      unsigned nib = 0;
      for (std::size_t k = 0; k < 4; ++k) {
        nib <<= 1;
        if (base + k < size_ && test(base + k)) nib |= 1u;
      }
      s.push_back(kDigits[nib]);
    }
    return s;
  }

  bool operator==(const BitVector&) const = default;

 private:
  std::size_t size_ = 0;
  std::vector<std::uint64_t> words_;
};

}  // namespace lgroup
