#pragma once

#include <boost/multiprecision/miller_rabin.hpp>

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "zkn/bigint.hpp"
#include "zkn/bytes.hpp"
#include "zkn/errors.hpp"
#include "zkn/rng.hpp"
#include "zkn/sha256.hpp"

namespace zkn {

/// Prime-order subgroup of Z*_p: p prime, q prime with q | p-1, and g a
/// generator of the order-q subgroup. All protocol exponentiation happens
/// here. Exponent arithmetic is always modulo q, the generator's order;
/// that is what makes g^a * g^b == g^{(a+b) mod q} hold.
struct GroupParams {
    BigInt p;
    BigInt q;
    BigInt g;
};

/// Exponent in [0, q).
struct Scalar {
    BigInt v;
    bool operator==(const Scalar&) const = default;
};

/// Subgroup member in [1, p).
struct GroupElement {
    BigInt v;
    bool operator==(const GroupElement&) const = default;
};

namespace detail {

// Bridges RandomSource to the URBG shape the Boost primality test wants.
struct RngEngine {
    using result_type = std::uint64_t;
    RandomSource* rng;
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~static_cast<result_type>(0); }
    result_type operator()() {
        std::uint8_t buf[8];
        rng->fill(buf, 8);
        result_type v = 0;
        for (std::uint8_t b : buf) v = (v << 8) | b;
        return v;
    }
};

inline const std::vector<std::uint32_t>& small_primes() {
    static const std::vector<std::uint32_t> primes = [] {
        std::vector<std::uint32_t> out;
        std::vector<bool> sieve(10000, true);
        for (std::uint32_t i = 2; i < sieve.size(); ++i) {
            if (!sieve[i]) continue;
            out.push_back(i);
            for (std::uint32_t j = 2 * i; j < sieve.size(); j += i) sieve[j] = false;
        }
        return out;
    }();
    return primes;
}

}  // namespace detail

inline bool is_probably_prime(const BigInt& n, RandomSource& rng, unsigned rounds = 64) {
    if (n < 2) return false;
    detail::RngEngine engine{&rng};
    return boost::multiprecision::miller_rabin_test(n, rounds, engine);
}

inline void require_usable(const GroupParams& params) {
    if (params.p < 3 || params.q < 1 || params.g < 1)
        throw ParamError("group parameters out of range");
}

inline GroupElement mod_exp(const BigInt& base, const Scalar& exponent,
                            const GroupParams& params) {
    require_usable(params);
    if (exponent.v < 0 || exponent.v >= params.q)
        throw ParamError("exponent outside [0, q)");
    BigInt b = base % params.p;
    if (b < 0) b += params.p;
    if (b == 0) throw ParamError("base reduces to 0 mod p");
    return GroupElement{boost::multiprecision::powm(b, exponent.v, params.p)};
}

inline GroupElement mod_exp(const GroupElement& base, const Scalar& exponent,
                            const GroupParams& params) {
    return mod_exp(base.v, exponent, params);
}

inline GroupElement mul(const GroupElement& a, const GroupElement& b,
                        const GroupParams& params) {
    return GroupElement{(a.v * b.v) % params.p};
}

inline GroupElement inverse(const GroupElement& a, const GroupParams& params) {
    BigInt out;
    if (mpz_invert(out.backend().data(), a.v.backend().data(),
                   params.p.backend().data()) == 0)
        throw ParamError("element not invertible mod p");
    return GroupElement{out};
}

inline bool is_subgroup_member(const BigInt& v, const GroupParams& params) {
    if (v < 1 || v >= params.p) return false;
    return boost::multiprecision::powm(v, params.q, params.p) == 1;
}

inline bool is_subgroup_member(const GroupElement& e, const GroupParams& params) {
    return is_subgroup_member(e.v, params);
}

inline Scalar scalar_add(const Scalar& a, const Scalar& b, const GroupParams& params) {
    return Scalar{(a.v + b.v) % params.q};
}

inline Scalar scalar_sub(const Scalar& a, const Scalar& b, const GroupParams& params) {
    BigInt d = (a.v - b.v) % params.q;
    if (d < 0) d += params.q;
    return Scalar{d};
}

/// Uniform draw from [0, q) by rejection sampling: sample bit_length(q-1)
/// bits and retry until the value lands below q. Consumption of the byte
/// stream is deterministic given the stream, so seeded sources reproduce
/// draws exactly.
inline Scalar random_scalar(const GroupParams& params, RandomSource& rng) {
    if (params.q < 1) throw ParamError("q must be positive");
    if (params.q == 1) return Scalar{0};
    std::size_t bits = bit_length(params.q - 1);
    std::size_t nbytes = (bits + 7) / 8;
    std::uint8_t top_mask =
        static_cast<std::uint8_t>((1u << (bits - 8 * (nbytes - 1))) - 1);
    for (;;) {
        Bytes buf = rng.bytes(nbytes);
        buf[0] &= top_mask;
        BigInt v = bigint_from_bytes(view(buf));
        if (v < params.q) return Scalar{v};
    }
}

/// SHA-256(data) read as a big-endian integer, reduced mod q.
inline Scalar hash_to_scalar(ByteView data, const GroupParams& params) {
    if (params.q < 1) throw ParamError("q must be positive");
    Digest d = sha256(data);
    BigInt v = bigint_from_bytes(ByteView(d.data(), d.size()));
    return Scalar{v % params.q};
}

struct ParamsReport {
    bool ok = true;
    std::string violation;  // first violated invariant, empty when ok
    explicit operator bool() const { return ok; }
};

/// Full structural validation: p prime, q prime, q | p-1, g in range and
/// not the identity, g^q == 1. Primality is probabilistic (64 rounds).
/// The report names the first invariant that fails.
inline ParamsReport validate_params(const GroupParams& params,
                                    RandomSource* witness_rng = nullptr) {
    std::optional<SystemRandomSource> own;
    if (!witness_rng) witness_rng = &own.emplace();

    if (params.p < 3 || !is_probably_prime(params.p, *witness_rng))
        return {false, "p is not prime"};
    if (!is_probably_prime(params.q, *witness_rng))
        return {false, "q is not prime"};
    if ((params.p - 1) % params.q != 0)
        return {false, "q does not divide p-1"};
    if (params.g == 1)
        return {false, "g is the identity"};
    if (params.g < 2 || params.g > params.p - 1)
        return {false, "g outside [2, p-1]"};
    if (boost::multiprecision::powm(params.g, params.q, params.p) != 1)
        return {false, "g^q != 1 mod p"};
    return {};
}

/// Stable identifier for a parameter set, derived from the values alone so
/// the same group gets the same id no matter where it was loaded from.
inline std::string params_id(const GroupParams& params) {
    Bytes pb = bigint_to_bytes(params.p);
    Bytes qb = bigint_to_bytes(params.q);
    Bytes gb = bigint_to_bytes(params.g);
    Bytes enc = length_prefixed({view(pb), view(qb), view(gb)});
    return "pg-" + sha256_hex(view(enc)).substr(0, 16);
}

/// p=23, q=11, g=2. Small enough to enumerate exhaustively; used by the
/// test profile and anywhere seeded reproducibility matters.
inline GroupParams toy_group() {
    return GroupParams{BigInt(23), BigInt(11), BigInt(2)};
}

/// The 2048-bit MODP group of RFC 3526: a safe prime with q = (p-1)/2 and
/// g = 2, which is a quadratic residue mod p (p = 7 mod 8) and therefore
/// generates the order-q subgroup.
inline GroupParams modp2048_group() {
    static const char* kP =
        "ffffffffffffffffc90fdaa22168c234c4c6628b80dc1cd129024e088a67cc74"
        "020bbea63b139b22514a08798e3404ddef9519b3cd3a431b302b0a6df25f1437"
        "4fe1356d6d51c245e485b576625e7ec6f44c42e9a637ed6b0bff5cb6f406b7ed"
        "ee386bfb5a899fa5ae9f24117c4b1fe649286651ece45b3dc2007cb8a163bf05"
        "98da48361c55d39a69163fa8fd24cf5f83655d23dca3ad961c62f356208552bb"
        "9ed529077096966d670c354e4abc9804f1746c08ca18217c32905e462e36ce3b"
        "e39e772c180e86039b2783a2ec07a28fb5c55df06f4c52c9de2bcbf695581718"
        "3995497cea956ae515d2261898fa051015728e5a8aacaa68ffffffffffffffff";
    BigInt p = bigint_from_hex(kP);
    return GroupParams{p, (p - 1) / 2, BigInt(2)};
}

/// Fresh safe-prime group: q prime, p = 2q+1 prime, g = h^2 for random h.
/// Cost grows steeply with size; intended for custom deployments and
/// tests, not for the default profile (which ships the vetted group
/// above).
inline GroupParams generate_group(unsigned bits, RandomSource& rng) {
    if (bits < 16) throw ParamError("group size below 16 bits");
    const auto& primes = detail::small_primes();
    for (;;) {
        std::size_t nbytes = (bits - 1 + 7) / 8;
        Bytes buf = rng.bytes(nbytes);
        BigInt q = bigint_from_bytes(view(buf));
        // force exact bit length and oddness
        q |= BigInt(1) << (bits - 2);
        q &= (BigInt(1) << (bits - 1)) - 1;
        q |= 1;
        BigInt p = 2 * q + 1;
        bool sieved_out = false;
        for (std::uint32_t sp : primes) {
            if (q > sp && q % sp == 0) { sieved_out = true; break; }
            if (p > sp && p % sp == 0) { sieved_out = true; break; }
        }
        if (sieved_out) continue;
        if (!is_probably_prime(q, rng, 32)) continue;
        if (!is_probably_prime(p, rng, 32)) continue;
        for (;;) {
            BigInt h = random_scalar(GroupParams{p, p - 2, BigInt(2)}, rng).v;
            if (h < 2) continue;
            BigInt g = boost::multiprecision::powm(h, BigInt(2), p);
            if (g == 1) continue;
            return GroupParams{p, q, g};
        }
    }
}

// ---- parameter files: flat "key = hex" text ----

inline std::string format_params_file(const GroupParams& params) {
    std::ostringstream out;
    out << "# zknotary group parameters (" << params_id(params) << ")\n";
    out << "p = " << bigint_to_hex(params.p) << "\n";
    out << "q = " << bigint_to_hex(params.q) << "\n";
    out << "g = " << bigint_to_hex(params.g) << "\n";
    return out.str();
}

inline GroupParams parse_params_file(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    std::optional<BigInt> p, q, g;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("parameter line without '=': " + line);
        auto trim = [](std::string s) {
            auto b = s.find_first_not_of(" \t");
            auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        std::optional<BigInt>* slot = nullptr;
        if (key == "p") slot = &p;
        else if (key == "q") slot = &q;
        else if (key == "g") slot = &g;
        else throw ParseError("unknown parameter key: " + key);
        if (slot->has_value()) throw ParseError("duplicate parameter key: " + key);
        *slot = bigint_from_hex(value);
    }
    if (!p || !q || !g) throw ParseError("parameter file must define p, q and g");
    return GroupParams{*p, *q, *g};
}

inline void save_params(const GroupParams& params, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << format_params_file(params);
    if (!out) throw IoError("write failed: " + path);
}

inline GroupParams load_params(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_params_file(buf.str());
}

}  // namespace zkn
