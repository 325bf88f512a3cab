#pragma once

// Little-endian byte encoding helpers shared by the demo file and the wire protocol.

#include "barm/errors.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace barm {

static_assert(std::endian::native == std::endian::little, "byte helpers assume a little-endian host");

class ByteWriter {
public:
    template <class T>
        requires std::is_arithmetic_v<T>
    void put(T v) {
        const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
        buf_.insert(buf_.end(), p, p + sizeof(T));
    }

    void put_bytes(std::span<const std::uint8_t> bytes) { buf_.insert(buf_.end(), bytes.begin(), bytes.end()); }
    void put_string(std::string_view s) {
        const auto* p = reinterpret_cast<const std::uint8_t*>(s.data());
        buf_.insert(buf_.end(), p, p + s.size());
    }
    void put_floats(std::span<const float> v) {
        const auto* p = reinterpret_cast<const std::uint8_t*>(v.data());
        buf_.insert(buf_.end(), p, p + v.size_bytes());
    }

    const std::vector<std::uint8_t>& bytes() const { return buf_; }
    std::vector<std::uint8_t> take() { return std::move(buf_); }
    std::size_t size() const { return buf_.size(); }
    void clear() { buf_.clear(); }

private:
    std::vector<std::uint8_t> buf_;
};

// Reads from a borrowed buffer; `base_offset` is added to offsets in error messages.
class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> data, std::uint64_t base_offset = 0)
        : data_(data), base_(base_offset) {}

    template <class T>
        requires std::is_arithmetic_v<T>
    T get() {
        require(sizeof(T));
        T v;
        std::memcpy(&v, data_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }

    std::string get_string(std::size_t n) {
        require(n);
        std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
        pos_ += n;
        return s;
    }

    void get_floats(std::span<float> out) {
        require(out.size_bytes());
        std::memcpy(out.data(), data_.data() + pos_, out.size_bytes());
        pos_ += out.size_bytes();
    }

    std::size_t remaining() const { return data_.size() - pos_; }
    std::uint64_t offset() const { return base_ + pos_; }

private:
    void require(std::size_t n) const {
        if (data_.size() - pos_ < n) {
            throw FormatError(offset(), "unexpected end of data");
        }
    }

    std::span<const std::uint8_t> data_;
    std::uint64_t base_;
    std::size_t pos_ = 0;
};

}  // namespace barm
