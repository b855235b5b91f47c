#pragma once

#include <algorithm>
#include <cstdio>
#include <cstring>

#include "zkn/bytes.hpp"
#include "zkn/errors.hpp"
#include "zkn/sha256.hpp"

namespace zkn {

class RandomSource {
public:
    virtual ~RandomSource() = default;
    virtual void fill(std::uint8_t* out, std::size_t n) = 0;

    Bytes bytes(std::size_t n) {
        Bytes b(n);
        fill(b.data(), n);
        return b;
    }
};

// Operating-system entropy, used for every production draw.
class SystemRandomSource final : public RandomSource {
public:
    SystemRandomSource() : file_(std::fopen("/dev/urandom", "rb")) {
        if (!file_) throw EntropyError("cannot open /dev/urandom");
    }
    ~SystemRandomSource() override {
        if (file_) std::fclose(file_);
    }
    SystemRandomSource(const SystemRandomSource&) = delete;
    SystemRandomSource& operator=(const SystemRandomSource&) = delete;

    void fill(std::uint8_t* out, std::size_t n) override {
        if (n == 0) return;
        if (std::fread(out, 1, n, file_) != n)
            throw EntropyError("short read from /dev/urandom");
    }

private:
    std::FILE* file_;
};

// Deterministic byte stream: SHA-256 in counter mode over a seed.
// Test profile only; identical seeds give identical streams on every
// platform, which is what makes seeded runs byte-reproducible.
class Drbg final : public RandomSource {
public:
    explicit Drbg(ByteView seed) : key_(sha256(seed)) {}
    explicit Drbg(std::uint64_t seed) : key_(seed_digest(seed)) {}

    void fill(std::uint8_t* out, std::size_t n) override {
        while (n > 0) {
            if (block_used_ == 32) next_block();
            std::size_t take = std::min<std::size_t>(n, 32 - block_used_);
            std::memcpy(out, block_.data() + block_used_, take);
            block_used_ += take;
            out += take;
            n -= take;
        }
    }

private:
    static Digest seed_digest(std::uint64_t seed) {
        Bytes b;
        append_u64_be(b, seed);
        return sha256(view(b));
    }

    void next_block() {
        Bytes input(key_.begin(), key_.end());
        append_u64_be(input, counter_++);
        block_ = sha256(view(input));
        block_used_ = 0;
    }

    Digest key_;
    Digest block_{};
    std::size_t block_used_ = 32;
    std::uint64_t counter_ = 0;
};

inline int random_bit(RandomSource& rng) {
    std::uint8_t b = 0;
    rng.fill(&b, 1);
    return b & 1;
}

}  // namespace zkn
