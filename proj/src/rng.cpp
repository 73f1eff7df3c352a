#include <geocorr/rng.hpp>

namespace geocorr {

namespace {

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream_id) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream_id),
                      static_cast<std::uint32_t>(stream_id >> 32), 0x9e3779b9u};
    return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), engine_(make_engine(seed, stream_id)) {}

}  // namespace geocorr
