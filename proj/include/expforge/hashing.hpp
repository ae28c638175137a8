#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace expforge {

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

/// Incremental 64-bit FNV-1a.
class Fnv1a {
public:
    void bytes(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            state_ ^= p[i];
            state_ *= kFnvPrime;
        }
    }
    void str(std::string_view s) {
        bytes(s.data(), s.size());
        // length terminator keeps ("ab","c") distinct from ("a","bc")
        u64(s.size());
    }
    void i64(std::int64_t v) { bytes(&v, sizeof v); }
    void u64(std::uint64_t v) { bytes(&v, sizeof v); }
    void f64(double v) { bytes(&v, sizeof v); }
    std::uint64_t value() const { return state_; }

private:
    std::uint64_t state_ = kFnvOffset;
};

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = kFnvOffset;
    for (unsigned char c : s) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

/// Lower-case, zero-padded 16-digit hex.
std::string to_hex(std::uint64_t v);

} // namespace expforge
