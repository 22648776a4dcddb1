#pragma once

#include <cstddef>
#include <vector>

#include "tfr/errors.hpp"
#include "tfr/matrix.hpp"
#include "tfr/signal.hpp"

namespace tfr {

struct TakensParams {
    std::size_t dim = 1;     // delayed copies per channel
    std::size_t tau = 1;     // delay in samples
    std::size_t stride = 10; // sample step between consecutive points
};

// Number of embedded points for a window of `len` samples:
// floor((len - 1 - (dim - 1) * tau) / stride) + 1.
inline std::size_t takens_point_count(std::size_t len, const TakensParams& p) {
    std::size_t span = (p.dim - 1) * p.tau;
    if (span >= len) throw WindowTooShort("window shorter than the embedding span");
    return (len - 1 - span) / p.stride + 1;
}

// Delay embedding of a multichannel epoch over its full window (padding
// included, so the point count depends only on the window length). Point
// coordinates are channel-major: all delays of channel 0, then channel 1, ...
// Delay d looks back d*tau samples from the anchor.
inline Matrix takens_embedding(const Epoch& epoch, const TakensParams& p = {}) {
    if (p.dim == 0 || p.tau == 0 || p.stride == 0)
        throw SpecInvalid("embedding parameters must be positive");
    std::size_t len = epoch.data.rows();
    std::size_t n_ch = epoch.data.cols();
    std::size_t span = (p.dim - 1) * p.tau;
    std::size_t n_points = takens_point_count(len, p);
    Matrix cloud(n_points, n_ch * p.dim);
    for (std::size_t j = 0; j < n_points; ++j) {
        std::size_t anchor = span + j * p.stride;
        for (std::size_t c = 0; c < n_ch; ++c)
            for (std::size_t d = 0; d < p.dim; ++d)
                cloud(j, c * p.dim + d) = epoch.data(anchor - d * p.tau, c);
    }
    return cloud;
}

}  // namespace tfr
