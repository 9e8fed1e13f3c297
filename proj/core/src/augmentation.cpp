#include "slslr/augmentation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "slslr/errors.hpp"

namespace slslr {

int PartPermutationConfig::resolve_ks(int n) const {
    if (ks) return *ks;
    return static_cast<int>(std::ceil(n * ks_fraction));
}

int PartPermutationConfig::resolve_ke(int n) const {
    if (ke) return *ke;
    return static_cast<int>(std::ceil(n * ke_fraction));
}

std::string to_string(AugmentationMode mode) {
    switch (mode) {
        case AugmentationMode::PartPermutation: return "part_permutation";
        case AugmentationMode::Classical: return "classical";
        case AugmentationMode::Combined: return "combined";
        case AugmentationMode::SegmentPermutation: return "segment_permutation";
    }
    return "part_permutation";
}

AugmentationMode augmentation_mode_from_string(const std::string& s) {
    if (s == "part_permutation") return AugmentationMode::PartPermutation;
    if (s == "classical") return AugmentationMode::Classical;
    if (s == "combined") return AugmentationMode::Combined;
    if (s == "segment_permutation") return AugmentationMode::SegmentPermutation;
    throw ArgumentError("unknown augmentation mode '" + s + "'");
}

SkeletonSequence temporal_permutation(const SkeletonSequence& seq, int first, int last, Rng& rng) {
    const int n = seq.frame_count();
    if (first < 0 || last < first || last >= n)
        throw ArgumentError("temporal_permutation: range [" + std::to_string(first) + ", " +
                            std::to_string(last) + "] out of bounds for " + std::to_string(n) +
                            " frames");

    std::vector<int> order(static_cast<std::size_t>(last - first + 1));
    std::iota(order.begin(), order.end(), first);
    std::shuffle(order.begin(), order.end(), rng);

    SkeletonSequence out = seq;
    const int fs = seq.frame_size();
    for (int i = first; i <= last; ++i) {
        const auto src = seq.frame(order[static_cast<std::size_t>(i - first)]);
        std::copy(src.begin(), src.end(), out.values.begin() + static_cast<std::size_t>(i) * fs);
    }
    return out;
}

std::pair<SkeletonSequence, SkeletonSequence>
part_permutation_pair(const SkeletonSequence& seq, const PartPermutationConfig& cfg, Rng& rng) {
    const int n = seq.frame_count();
    const int ks = cfg.resolve_ks(n);
    const int ke = cfg.resolve_ke(n);
    if (ks < 0 || ke < 0 || ks + ke >= n)
        throw ArgumentError("part_permutation_pair: ks=" + std::to_string(ks) +
                            " + ke=" + std::to_string(ke) + " leaves no central region for n=" +
                            std::to_string(n));

    auto make_view = [&]() {
        SkeletonSequence view = seq;
        if (ks >= 2) view = temporal_permutation(view, 0, ks - 1, rng);
        if (ke >= 2) view = temporal_permutation(view, n - ke, n - 1, rng);
        return view;
    };
    SkeletonSequence v1 = make_view();
    SkeletonSequence v2 = make_view();
    return {std::move(v1), std::move(v2)};
}

SkeletonSequence classical_augment(const SkeletonSequence& seq, const ClassicalAugmentSpec& spec,
                                   Rng& rng) {
    if (spec.rotation_max_deg < 0 || spec.noise_sigma < 0 || spec.translation_max < 0 ||
        spec.flip_prob < 0 || spec.flip_prob > 1 ||
        !(std::isfinite(spec.rotation_max_deg) && std::isfinite(spec.noise_sigma) &&
          std::isfinite(spec.flip_prob) && std::isfinite(spec.translation_max)))
        throw ArgumentError("classical_augment: invalid spec");

    const int n = seq.frame_count();
    const int L = seq.landmark_count;
    const int D = seq.coord_dim;

    // Rigid parameters are drawn once per sequence. Draws are skipped for
    // zero magnitudes so that an all-zero spec is the bit-exact identity.
    double angle = 0.0;
    bool flip = false;
    std::vector<double> shift(static_cast<std::size_t>(D), 0.0);
    const bool rotate = spec.rotation_max_deg > 0.0;
    if (rotate) {
        std::uniform_real_distribution<double> dist(-spec.rotation_max_deg, spec.rotation_max_deg);
        angle = dist(rng) * std::numbers::pi / 180.0;
    }
    const bool add_noise = spec.noise_sigma > 0.0;
    if (spec.flip_prob > 0.0) {
        std::bernoulli_distribution dist(spec.flip_prob);
        flip = dist(rng);
    }
    const bool translate = spec.translation_max > 0.0;
    if (translate) {
        std::uniform_real_distribution<double> dist(-spec.translation_max, spec.translation_max);
        for (auto& s : shift) s = dist(rng);
    }

    std::normal_distribution<double> gauss(0.0, add_noise ? spec.noise_sigma : 1.0);
    const double c = std::cos(angle);
    const double s = std::sin(angle);

    SkeletonSequence out = seq;
    for (int t = 0; t < n; ++t) {
        auto frame = out.frame(t);
        if (rotate) {
            // Planar rotation about the frame's landmark centroid.
            double cx = 0.0, cy = 0.0;
            for (int l = 0; l < L; ++l) {
                cx += frame[static_cast<std::size_t>(l) * D + 0];
                cy += frame[static_cast<std::size_t>(l) * D + 1];
            }
            cx /= L;
            cy /= L;
            for (int l = 0; l < L; ++l) {
                const double x = frame[static_cast<std::size_t>(l) * D + 0] - cx;
                const double y = frame[static_cast<std::size_t>(l) * D + 1] - cy;
                frame[static_cast<std::size_t>(l) * D + 0] = static_cast<float>(cx + c * x - s * y);
                frame[static_cast<std::size_t>(l) * D + 1] = static_cast<float>(cy + s * x + c * y);
            }
        }
        if (add_noise)
            for (auto& v : frame) v = static_cast<float>(v + gauss(rng));
        if (flip)
            for (int l = 0; l < L; ++l)
                frame[static_cast<std::size_t>(l) * D] = -frame[static_cast<std::size_t>(l) * D];
        if (translate)
            for (int l = 0; l < L; ++l)
                for (int d = 0; d < D; ++d)
                    frame[static_cast<std::size_t>(l) * D + d] =
                        static_cast<float>(frame[static_cast<std::size_t>(l) * D + d] + shift[d]);
    }
    return out;
}

std::pair<SkeletonSequence, SkeletonSequence>
segment_permutation_pair(const SkeletonSequence& seq, SegmentPosition position, int k, Rng& rng) {
    const int n = seq.frame_count();
    if (k < 1 || k > n)
        throw ArgumentError("segment_permutation_pair: k=" + std::to_string(k) +
                            " out of range for " + std::to_string(n) + " frames");
    const int first = position == SegmentPosition::First ? 0 : n - k;
    const int last = position == SegmentPosition::First ? k - 1 : n - 1;
    SkeletonSequence v1 = temporal_permutation(seq, first, last, rng);
    SkeletonSequence v2 = temporal_permutation(seq, first, last, rng);
    return {std::move(v1), std::move(v2)};
}

std::pair<SkeletonSequence, SkeletonSequence>
make_positive_pair(const SkeletonSequence& seq, const AugmentationConfig& cfg, Rng& rng) {
    switch (cfg.mode) {
        case AugmentationMode::PartPermutation:
            return part_permutation_pair(seq, cfg.part, rng);
        case AugmentationMode::Classical: {
            SkeletonSequence v1 = classical_augment(seq, cfg.classical, rng);
            SkeletonSequence v2 = classical_augment(seq, cfg.classical, rng);
            return {std::move(v1), std::move(v2)};
        }
        case AugmentationMode::Combined: {
            auto [v1, v2] = part_permutation_pair(seq, cfg.part, rng);
            v1 = classical_augment(v1, cfg.classical, rng);
            v2 = classical_augment(v2, cfg.classical, rng);
            return {std::move(v1), std::move(v2)};
        }
        case AugmentationMode::SegmentPermutation:
            return segment_permutation_pair(seq, cfg.segment_position, cfg.segment_k, rng);
    }
    throw ArgumentError("make_positive_pair: unknown augmentation mode");
}

} // namespace slslr
