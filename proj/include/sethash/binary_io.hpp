#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <type_traits>
#include <vector>

#include "sethash/error.hpp"

namespace sethash {

static_assert(std::endian::native == std::endian::little,
              "on-disk formats are little-endian; big-endian hosts need byte swapping");

using Magic = std::array<char, 4>;

/// Sequential little-endian writer over an in-memory buffer.
class BinaryWriter {
public:
    template <class T>
        requires std::is_arithmetic_v<T>
    void put(T v) {
        const auto* p = reinterpret_cast<const char*>(&v);
        buf_.insert(buf_.end(), p, p + sizeof(T));
    }

    void put_magic(const Magic& m) { buf_.insert(buf_.end(), m.begin(), m.end()); }

    void put_string(const std::string& s) {
        put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
        buf_.insert(buf_.end(), s.begin(), s.end());
    }

    template <class T>
    void put_array(const T* data, std::size_t n) {
        const auto* p = reinterpret_cast<const char*>(data);
        buf_.insert(buf_.end(), p, p + n * sizeof(T));
    }

    const std::vector<char>& bytes() const { return buf_; }

    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        require(static_cast<bool>(out), ErrorCode::io_error, "cannot open " + path + " for writing");
        out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
        require(static_cast<bool>(out), ErrorCode::io_error, "write failed: " + path);
    }

private:
    std::vector<char> buf_;
};

class BinaryReader {
public:
    explicit BinaryReader(std::vector<char> bytes, std::string origin = "<memory>")
        : buf_(std::move(bytes)), origin_(std::move(origin)) {}

    static BinaryReader open(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        require(static_cast<bool>(in), ErrorCode::missing_file, "cannot open " + path);
        std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        return BinaryReader(std::move(bytes), path);
    }

    template <class T>
        requires std::is_arithmetic_v<T>
    T get() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, buf_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }

    void expect_magic(const Magic& m, const char* what) {
        need(4);
        require(std::memcmp(buf_.data() + pos_, m.data(), 4) == 0, ErrorCode::format_error,
                origin_ + " is not a " + what + " file");
        pos_ += 4;
    }

    void expect_version(std::uint32_t expected, const char* what) {
        auto v = get<std::uint32_t>();
        require(v == expected, ErrorCode::version_mismatch,
                origin_ + ": " + what + " version " + std::to_string(v) + ", expected " +
                    std::to_string(expected));
    }

    std::string get_string() {
        auto n = get<std::uint32_t>();
        need(n);
        std::string s(buf_.data() + pos_, n);
        pos_ += n;
        return s;
    }

    template <class T>
    void get_array(T* out, std::size_t n) {
        need(n * sizeof(T));
        std::memcpy(out, buf_.data() + pos_, n * sizeof(T));
        pos_ += n * sizeof(T);
    }

    bool at_end() const { return pos_ == buf_.size(); }
    const std::string& origin() const { return origin_; }

private:
    void need(std::size_t n) const {
        require(pos_ + n <= buf_.size(), ErrorCode::format_error, origin_ + ": truncated file");
    }

    std::vector<char> buf_;
    std::size_t pos_ = 0;
    std::string origin_;
};

/// FNV-1a, used for cache keys and content fingerprints.
class Fingerprint {
public:
    void add_bytes(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h_ ^= p[i];
            h_ *= 0x100000001B3ULL;
        }
    }
    template <class T>
        requires std::is_arithmetic_v<T>
    void add(T v) { add_bytes(&v, sizeof(T)); }

    std::uint64_t value() const { return h_; }

private:
    std::uint64_t h_ = 0xCBF29CE484222325ULL;
};

} // namespace sethash
