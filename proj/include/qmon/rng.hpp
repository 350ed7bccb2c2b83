#pragma once

#include <array>
#include <cstdint>

namespace qmon {

// Counter-based generator (Philox4x32-10). Every trajectory owns a stream keyed by
// (master seed, trajectory index); a draw is addressed by (step, lane), so streams
// are seekable and results do not depend on which thread runs which trajectory.

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key);

class TrajectoryStream {
public:
    TrajectoryStream(std::uint64_t master_seed, std::uint64_t trajectory);

    /// Four raw words for (step, lane).
    PhiloxCounter block(std::uint64_t step, std::uint32_t lane = 0) const;
    /// Two independent uniforms in [0, 1).
    std::array<double, 2> uniforms(std::uint64_t step, std::uint32_t lane = 0) const;
    /// Two independent standard normals (Box-Muller on the same block).
    std::array<double, 2> normals(std::uint64_t step, std::uint32_t lane = 0) const;

    std::uint64_t trajectory() const { return trajectory_; }

private:
    PhiloxKey key_;
    std::uint64_t trajectory_;
};

}  // namespace qmon
