#include "slslr/synthetic.hpp"

#include <cmath>
#include <numbers>

#include "slslr/errors.hpp"
#include "slslr/rng.hpp"

namespace slslr {

namespace {

constexpr double kSignalAmplitude = 0.6;
constexpr double kObservationNoise = 0.03;
constexpr double kTimeJitter = 0.05;

struct CoordinatePattern {
    double base;      // resting offset, shared by the class pair
    double amplitude; // per-coordinate motion amplitude
    double frequency; // cycles over the signal window
    double phase;
};

void check(const SyntheticConfig& cfg) {
    if (cfg.class_count < 1 || cfg.samples_per_class < 1)
        throw ArgumentError("generate_synthetic: class_count and samples_per_class must be >= 1");
    if (cfg.n < 1 || cfg.l < 1 || (cfg.d != 2 && cfg.d != 3))
        throw ArgumentError("generate_synthetic: invalid sequence shape");
    if (!(cfg.signal_start_fraction > 0.0 && cfg.signal_start_fraction < 1.0) ||
        !(cfg.signal_end_fraction > 0.0 && cfg.signal_end_fraction < 1.0) ||
        !(cfg.signal_start_fraction < 1.0 - cfg.signal_end_fraction))
        throw ArgumentError("generate_synthetic: signal fractions must lie in (0,1) with "
                            "signal_start_fraction < 1 - signal_end_fraction");
    if (cfg.noise_scale < 0.0)
        throw ArgumentError("generate_synthetic: noise_scale must be nonnegative");
}

} // namespace

std::pair<int, int> signal_window(int n, double start_fraction, double end_fraction) {
    const int start = static_cast<int>(std::ceil(n * start_fraction));
    const int end = n - static_cast<int>(std::ceil(n * end_fraction));
    return {start, end};
}

Dataset generate_synthetic(const SyntheticConfig& cfg) {
    check(cfg);

    const auto [sig_begin, sig_end] = signal_window(cfg.n, cfg.signal_start_fraction,
                                                    cfg.signal_end_fraction);
    if (sig_end - sig_begin < 2)
        throw ArgumentError("generate_synthetic: signal window shorter than 2 frames");

    // Class 2b and 2b+1 share pattern b; the odd one plays it backwards.
    const int pattern_count = (cfg.class_count + 1) / 2;
    const int fs = cfg.l * cfg.d;
    std::vector<std::vector<CoordinatePattern>> patterns(pattern_count);
    {
        Rng rng(derive_seed(cfg.seed, 0x9a77e12fULL));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::uniform_real_distribution<double> base(-0.4, 0.4);
        std::uniform_int_distribution<int> freq(1, 2);
        for (auto& pattern : patterns) {
            pattern.resize(fs);
            for (auto& coord : pattern) {
                coord.base = base(rng);
                coord.amplitude = kSignalAmplitude * (0.7 + 0.6 * unit(rng));
                coord.frequency = freq(rng);
                coord.phase = unit(rng);
            }
        }
    }

    Dataset dataset;
    dataset.class_count = cfg.class_count;
    dataset.split_tag = SplitTag::Train;
    dataset.landmark_count = cfg.l;
    dataset.coord_dim = cfg.d;
    dataset.max_len = cfg.n;

    const int window = sig_end - sig_begin;
    for (int cls = 0; cls < cfg.class_count; ++cls) {
        const auto& pattern = patterns[cls / 2];
        const bool reversed = (cls % 2) == 1;
        for (int i = 0; i < cfg.samples_per_class; ++i) {
            Rng rng(derive_seed(cfg.seed, 0x3c6ef372ULL, static_cast<std::uint64_t>(cls),
                                static_cast<std::uint64_t>(i)));
            std::normal_distribution<double> gauss(0.0, 1.0);
            std::uniform_real_distribution<double> jitter(-kTimeJitter, kTimeJitter);

            const double dt = jitter(rng);
            const double gain = 1.0 + 0.1 * jitter(rng) / kTimeJitter;

            Sample s;
            s.sample_id = "c" + std::to_string(cls) + "_s" + std::to_string(i);
            s.label = cls;
            s.sequence = SkeletonSequence(cfg.n, cfg.l, cfg.d);

            for (int t = 0; t < cfg.n; ++t) {
                auto frame = s.sequence.frame(t);
                if (t >= sig_begin && t < sig_end) {
                    double u = static_cast<double>(t - sig_begin) / (window - 1);
                    if (reversed) u = 1.0 - u;
                    u += dt;
                    // Monotone amplitude ramp over the window. Reversing the
                    // traversal direction reverses the ramp, so temporal
                    // order carries class evidence that a frame shuffle
                    // destroys while the frame multiset survives.
                    const double ramp = 0.25 + 0.75 * std::clamp(u, 0.0, 1.0);
                    for (int j = 0; j < fs; ++j) {
                        const auto& c = pattern[j];
                        const double v =
                            c.base +
                            gain * ramp * c.amplitude *
                                std::sin(2.0 * std::numbers::pi * (c.frequency * u + c.phase)) +
                            kObservationNoise * gauss(rng);
                        frame[j] = static_cast<float>(v);
                    }
                } else {
                    for (int j = 0; j < fs; ++j)
                        frame[j] = static_cast<float>(cfg.noise_scale * gauss(rng));
                }
            }
            dataset.samples.push_back(std::move(s));
        }
    }
    return dataset;
}

} // namespace slslr
