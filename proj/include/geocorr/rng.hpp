#pragma once

#include <cstdint>
#include <random>

namespace geocorr {

/// Independent random substream. The same (seed, stream_id) always replays the same draws,
/// so parallel estimators bind one stream to each work chunk.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id);

    double normal() { return normal_(engine_); }
    /// Uniform on [0, 1).
    double uniform() { return uniform_(engine_); }

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_id_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace geocorr
