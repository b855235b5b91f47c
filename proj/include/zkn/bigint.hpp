#pragma once

#include <boost/multiprecision/gmp.hpp>

#include <string>
#include <string_view>

#include "zkn/bytes.hpp"
#include "zkn/errors.hpp"
#include "zkn/hex.hpp"

namespace zkn {

using BigInt = boost::multiprecision::mpz_int;

// Canonical integer hex: lowercase, big-endian, no leading zeros, "0" for
// zero. This exact form is what gets hashed and what crosses the wire.
inline std::string bigint_to_hex(const BigInt& v) {
    if (v < 0) throw ParseError("negative integer has no canonical hex form");
    return v.str(0, std::ios_base::hex);  // gmp emits lowercase, no padding
}

inline bool is_canonical_int_hex(std::string_view hex) {
    if (hex.empty()) return false;
    if (hex == "0") return true;
    if (hex[0] == '0') return false;
    for (char c : hex)
        if (hex_nibble(c) < 0) return false;
    return true;
}

inline BigInt bigint_from_hex(std::string_view hex) {
    if (!is_canonical_int_hex(hex))
        throw ParseError("not canonical integer hex: '" + std::string(hex) + "'");
    BigInt v;
    mpz_set_str(v.backend().data(), std::string(hex).c_str(), 16);
    return v;
}

// Minimal big-endian byte encoding (empty for zero).
inline Bytes bigint_to_bytes(const BigInt& v) {
    if (v < 0) throw ParseError("negative integer has no byte encoding");
    if (v == 0) return {};
    std::size_t count = 0;
    Bytes out((mpz_sizeinbase(v.backend().data(), 2) + 7) / 8);
    mpz_export(out.data(), &count, 1, 1, 1, 0, v.backend().data());
    out.resize(count);
    return out;
}

inline BigInt bigint_from_bytes(ByteView bytes) {
    BigInt v;
    if (!bytes.empty())
        mpz_import(v.backend().data(), bytes.size(), 1, 1, 1, 0, bytes.data());
    return v;
}

inline std::size_t bit_length(const BigInt& v) {
    if (v == 0) return 0;
    return mpz_sizeinbase(v.backend().data(), 2);
}

}  // namespace zkn
