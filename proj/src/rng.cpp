#include "qmon/rng.hpp"

#include <cmath>
#include <numbers>

namespace qmon {

namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

double to_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t x = (static_cast<std::uint64_t>(hi) << 32) | lo;
    return static_cast<double>(x >> 11) * 0x1.0p-53;
}

}  // namespace

PhiloxCounter philox4x32_10(PhiloxCounter c, PhiloxKey k) {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kM0, c[0], hi0, lo0);
        mulhilo(kM1, c[2], hi1, lo1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
        k[0] += kW0;
        k[1] += kW1;
    }
    return c;
}

TrajectoryStream::TrajectoryStream(std::uint64_t master_seed, std::uint64_t trajectory) : trajectory_(trajectory) {
    const std::uint64_t k = splitmix64(splitmix64(master_seed) ^ trajectory);
    key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
}

PhiloxCounter TrajectoryStream::block(std::uint64_t step, std::uint32_t lane) const {
    return philox4x32_10({lane, static_cast<std::uint32_t>(trajectory_), static_cast<std::uint32_t>(step),
                          static_cast<std::uint32_t>(step >> 32)},
                         key_);
}

std::array<double, 2> TrajectoryStream::uniforms(std::uint64_t step, std::uint32_t lane) const {
    const PhiloxCounter b = block(step, lane);
    return {to_unit(b[0], b[1]), to_unit(b[2], b[3])};
}

std::array<double, 2> TrajectoryStream::normals(std::uint64_t step, std::uint32_t lane) const {
    const auto u = uniforms(step, lane);
    const double rad = std::sqrt(-2.0 * std::log(1.0 - u[0]));
    const double ang = 2.0 * std::numbers::pi * u[1];
    return {rad * std::cos(ang), rad * std::sin(ang)};
}

}  // namespace qmon
