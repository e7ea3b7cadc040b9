#pragma once

// Little-endian scalar encoding and a bounds-checked reader shared by the PEFM and PESV formats.

#include "pefusion/error.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <utility>

namespace pefusion::binary {

inline void put_u16(std::string &out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>(v >> 8));
}

inline void put_u64(std::string &out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
}

inline void put_f32(std::string &out, float f) {
    const auto bits = std::bit_cast<std::uint32_t>(f);
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
    }
}

class Reader {
  public:
    Reader(std::string_view data, std::string source) : data_(data), source_(std::move(source)) {}

    [[nodiscard]] std::size_t remaining() const noexcept { return data_.size() - pos_; }

    std::string_view take(std::size_t n) {
        if (n > remaining()) {
            throw FormatError(FormatError::Kind::truncated, source_ + ": unexpected end of data (needed " +
                                                                std::to_string(n) + " bytes, " +
                                                                std::to_string(remaining()) + " left)");
        }
        const auto out = data_.substr(pos_, n);
        pos_ += n;
        return out;
    }

    std::uint16_t u16() {
        const auto b = take(2);
        return static_cast<std::uint16_t>(static_cast<unsigned char>(b[0]) |
                                          (static_cast<unsigned char>(b[1]) << 8));
    }

    std::uint64_t u64() {
        const auto b = take(8);
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i) {
            v = (v << 8) | static_cast<unsigned char>(b[static_cast<std::size_t>(i)]);
        }
        return v;
    }

    float f32() {
        const auto b = take(4);
        std::uint32_t bits = 0;
        for (int i = 3; i >= 0; --i) {
            bits = (bits << 8) | static_cast<unsigned char>(b[static_cast<std::size_t>(i)]);
        }
        return std::bit_cast<float>(bits);
    }

    void expect_end() const {
        if (remaining() != 0) {
            throw FormatError(FormatError::Kind::trailing_data,
                              source_ + ": " + std::to_string(remaining()) + " unexpected trailing bytes");
        }
    }

    [[nodiscard]] const std::string &source() const noexcept { return source_; }

  private:
    std::string_view data_;
    std::size_t pos_ = 0;
    std::string source_;
};

}  // namespace pefusion::binary
