#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace endow {

/// Philox4x32-10 counter-based generator.
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;

    explicit Philox4x32(std::uint64_t seed)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

    Counter operator()(const Counter& ctr) const {
        std::uint32_t c0 = ctr[0], c1 = ctr[1], c2 = ctr[2], c3 = ctr[3];
        std::uint32_t k0 = key_[0], k1 = key_[1];
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * c0;
            const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * c2;
            c0 = static_cast<std::uint32_t>(p1 >> 32) ^ c1 ^ k0;
            c2 = static_cast<std::uint32_t>(p0 >> 32) ^ c3 ^ k1;
            c1 = static_cast<std::uint32_t>(p1);
            c3 = static_cast<std::uint32_t>(p0);
            k0 += 0x9E3779B9u;
            k1 += 0xBB67AE85u;
        }
        return {c0, c1, c2, c3};
    }

private:
    std::array<std::uint32_t, 2> key_;
};

/// Uniform random bit generator over consecutive Philox blocks, advancing the
/// last counter word. Callers leave room in that word for the blocks consumed.
class PhiloxStream {
public:
    using result_type = std::uint32_t;

    PhiloxStream(const Philox4x32& gen, const Philox4x32::Counter& ctr) : gen_(gen), ctr_(ctr) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return 0xFFFFFFFFu; }

    result_type operator()() {
        if (pos_ == 4) {
            buf_ = gen_(ctr_);
            ++ctr_[3];
            pos_ = 0;
        }
        return buf_[pos_++];
    }

private:
    const Philox4x32& gen_;
    Philox4x32::Counter ctr_;
    Philox4x32::Counter buf_{};
    int pos_ = 4;
};

/// Uniform in (0, 1) from one Philox block.
inline double philox_uniform(const Philox4x32& gen, const Philox4x32::Counter& ctr) {
    const auto r = gen(ctr);
    const std::uint64_t a = (std::uint64_t{r[0]} << 32) | r[1];
    return (static_cast<double>(a >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace endow
