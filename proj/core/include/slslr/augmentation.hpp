#pragma once

#include <optional>
#include <utility>

#include "slslr/rng.hpp"
#include "slslr/types.hpp"

namespace slslr {

/// Prefix/suffix lengths for the part permutation. Fractions resolve as
/// ceil(N * fraction); explicit frame counts override the fractions.
struct PartPermutationConfig {
    double ks_fraction = 1.0 / 3.0;
    double ke_fraction = 1.0 / 4.0;
    std::optional<int> ks;
    std::optional<int> ke;

    int resolve_ks(int n) const;
    int resolve_ke(int n) const;
};

/// Frame-level rigid transforms plus coordinate noise. Rotation angle, flip
/// decision and translation are drawn once per sequence; noise is i.i.d. per
/// coordinate. Zero magnitudes leave the sequence bit-identical.
struct ClassicalAugmentSpec {
    double rotation_max_deg = 15.0;
    double noise_sigma = 0.05;
    double flip_prob = 0.5;
    double translation_max = 0.1;
};

enum class SegmentPosition { First, Last };

enum class AugmentationMode { PartPermutation, Classical, Combined, SegmentPermutation };

std::string to_string(AugmentationMode mode);
AugmentationMode augmentation_mode_from_string(const std::string& s);

struct AugmentationConfig {
    AugmentationMode mode = AugmentationMode::PartPermutation;
    PartPermutationConfig part;
    ClassicalAugmentSpec classical;
    // SegmentPermutation mode only:
    SegmentPosition segment_position = SegmentPosition::First;
    int segment_k = 1;
};

/// Uniformly permutes frames in the inclusive range [first, last]; frames
/// outside are bit-identical to the input.
SkeletonSequence temporal_permutation(const SkeletonSequence& seq, int first, int last, Rng& rng);

/// Two views with independently permuted prefix [0, ks) and suffix
/// [N-ke, N); the central region is bit-identical across the original and
/// both views.
std::pair<SkeletonSequence, SkeletonSequence>
part_permutation_pair(const SkeletonSequence& seq, const PartPermutationConfig& cfg, Rng& rng);

SkeletonSequence classical_augment(const SkeletonSequence& seq, const ClassicalAugmentSpec& spec,
                                   Rng& rng);

/// Views for the boundary search: the first (or last) k frames permuted by
/// two independent draws.
std::pair<SkeletonSequence, SkeletonSequence>
segment_permutation_pair(const SkeletonSequence& seq, SegmentPosition position, int k, Rng& rng);

std::pair<SkeletonSequence, SkeletonSequence>
make_positive_pair(const SkeletonSequence& seq, const AugmentationConfig& cfg, Rng& rng);

} // namespace slslr
