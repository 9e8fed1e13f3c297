#pragma once

#include <cstdint>
#include <utility>

#include "slslr/types.hpp"

namespace slslr {

/// Synthetic sequences with a planted informative window. Frames inside
/// [ceil(N*signal_start_fraction), N - ceil(N*signal_end_fraction)) follow a
/// smooth class-specific trajectory; everything outside is i.i.d. Gaussian
/// noise with identical distribution for every class. Classes come in pairs
/// that traverse the same trajectory in opposite temporal directions, so
/// class identity is unrecoverable once the signal frames are shuffled.
struct SyntheticConfig {
    int class_count = 10;
    int samples_per_class = 20;
    int n = 64; // frames per sequence
    int l = 75; // landmarks
    int d = 2;  // coordinates per landmark
    double signal_start_fraction = 1.0 / 3.0;
    double signal_end_fraction = 1.0 / 4.0;
    double noise_scale = 1.0;
    std::uint64_t seed = 0;
};

/// First (inclusive) and one-past-last signal frame index.
std::pair<int, int> signal_window(int n, double start_fraction, double end_fraction);

Dataset generate_synthetic(const SyntheticConfig& cfg);

} // namespace slslr
