#include "ggame/numerics.hpp"


namespace ggame {

TimeGrid::TimeGrid(double horizon, std::size_t n_steps)
    : horizon_(horizon), n_steps_(n_steps), dt_(0.0) {
    if (!(horizon > 0.0) || !std::isfinite(horizon))
        throw DomainError("time grid horizon must be positive and finite");
    if (n_steps < 1) throw DomainError("time grid needs at least one step");
    dt_ = horizon / static_cast<double>(n_steps);
}

double midpoint_quadrature_2d(const std::function<double(double, double)>& f, std::size_t m) {
    if (m == 0) throw DomainError("quadrature needs at least one point per axis");
    const double h = 1.0 / static_cast<double>(m);
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double x = (static_cast<double>(i) + 0.5) * h;
        double row = 0.0;
        for (std::size_t j = 0; j < m; ++j) row += f(x, (static_cast<double>(j) + 0.5) * h);
        total += row;
    }
    return total * h * h;
}

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(product >> 32);
    lo = static_cast<std::uint32_t>(product);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kPhiloxW0;
            key[1] += kPhiloxW1;
        }
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
        mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

std::uint64_t RngStream::next_u64() {
    if (pos_ == 2) {
        const std::array<std::uint32_t, 4> ctr{
            static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
            static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
        const std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(seed_),
                                               static_cast<std::uint32_t>(seed_ >> 32)};
        const auto out = philox4x32(ctr, key);
        ++counter_;
        buffer_[0] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
        buffer_[1] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
        pos_ = 0;
    }
    return buffer_[pos_++];
}

double RngStream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::exponential(double rate) {
    if (!(rate > 0.0)) throw DomainError("exponential rate must be positive");
    return -std::log(uniform_open_left()) / rate;
}

std::uint64_t RngStream::below(std::uint64_t n) {
    if (n == 0) throw DomainError("below(0) is empty");
    // Lemire's nearly-divisionless rejection
    const std::uint64_t threshold = (~n + 1) % n;
    while (true) {
        const unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
        if (static_cast<std::uint64_t>(m) >= threshold) return static_cast<std::uint64_t>(m >> 64);
    }
}

}  // namespace ggame
