#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace slslr {

/// An ordered list of frames; each frame is landmark_count x coord_dim
/// float32 coordinates stored row-major in one contiguous buffer. This is
/// the unit every augmentation and the model consume.
struct SkeletonSequence {
    int landmark_count = 0; // L
    int coord_dim = 0;      // D, 2 or 3
    std::vector<float> values; // frame_count x L x D

    SkeletonSequence() = default;
    SkeletonSequence(int n_frames, int landmarks, int dims)
        : landmark_count(landmarks),
          coord_dim(dims),
          values(static_cast<std::size_t>(n_frames) * landmarks * dims, 0.0f) {}

    int frame_size() const { return landmark_count * coord_dim; }
    int frame_count() const {
        const int fs = frame_size();
        return fs > 0 ? static_cast<int>(values.size()) / fs : 0;
    }

    std::span<float> frame(int i) {
        return {values.data() + static_cast<std::size_t>(i) * frame_size(),
                static_cast<std::size_t>(frame_size())};
    }
    std::span<const float> frame(int i) const {
        return {values.data() + static_cast<std::size_t>(i) * frame_size(),
                static_cast<std::size_t>(frame_size())};
    }

    float& at(int frame_idx, int landmark, int dim) {
        return values[(static_cast<std::size_t>(frame_idx) * landmark_count + landmark) * coord_dim + dim];
    }
    float at(int frame_idx, int landmark, int dim) const {
        return values[(static_cast<std::size_t>(frame_idx) * landmark_count + landmark) * coord_dim + dim];
    }

    bool operator==(const SkeletonSequence&) const = default;
};

struct Sample {
    SkeletonSequence sequence;
    std::optional<int> label; // class id, >= 0 when present
    std::string sample_id;

    bool operator==(const Sample&) const = default;
};

enum class SplitTag { Train, Test, Unlabeled };

std::string to_string(SplitTag tag);
SplitTag split_tag_from_string(const std::string& s);

struct Dataset {
    std::vector<Sample> samples;
    int class_count = 0;
    SplitTag split_tag = SplitTag::Train;
    int landmark_count = 0;
    int coord_dim = 0;
    int max_len = 0; // declared sequence-length cap; >= longest sample

    bool operator==(const Dataset&) const = default;
};

/// Throws ValidationError with an enumerated report if any invariant fails:
/// at least one frame, positive L, D in {2,3}, buffer size consistent,
/// every value finite.
void validate(const SkeletonSequence& seq);

/// Dataset-level checks: homogeneous (L, D), labels within [0, class_count),
/// unique sample ids, each sequence valid.
void validate(const Dataset& dataset);

/// Length normalization: keep the first target_n frames when too long,
/// append all-zero frames when too short. Input is left untouched.
SkeletonSequence pad_or_truncate(const SkeletonSequence& seq, int target_n);

/// Frames as rows of an N x (L*D) double matrix, the model's input layout.
Eigen::MatrixXd to_matrix(const SkeletonSequence& seq);

/// Deterministic stratified split; every class contributes
/// round(test_fraction * class size) samples (at least 1 when the class has
/// 2+ members) to the test side.
std::pair<Dataset, Dataset> stratified_split(const Dataset& dataset, double test_fraction,
                                             std::uint64_t seed);

/// Stratified subsample keeping a label fraction of each class.
/// Throws ArgumentError naming the class if some class would end up empty.
Dataset stratified_subsample(const Dataset& dataset, double label_fraction, std::uint64_t seed);

} // namespace slslr
