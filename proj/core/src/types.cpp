#include "slslr/types.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "slslr/errors.hpp"
#include "slslr/rng.hpp"

namespace slslr {

std::string to_string(SplitTag tag) {
    switch (tag) {
        case SplitTag::Train: return "train";
        case SplitTag::Test: return "test";
        case SplitTag::Unlabeled: return "unlabeled";
    }
    return "train";
}

SplitTag split_tag_from_string(const std::string& s) {
    if (s == "train") return SplitTag::Train;
    if (s == "test") return SplitTag::Test;
    if (s == "unlabeled") return SplitTag::Unlabeled;
    throw ArgumentError("unknown split tag '" + s + "'");
}

void validate(const SkeletonSequence& seq) {
    std::vector<std::string> problems;
    if (seq.landmark_count < 1)
        problems.push_back("landmark_count must be positive, got " + std::to_string(seq.landmark_count));
    if (seq.coord_dim != 2 && seq.coord_dim != 3)
        problems.push_back("coord_dim must be 2 or 3, got " + std::to_string(seq.coord_dim));
    const int fs = seq.frame_size();
    if (fs > 0 && seq.values.size() % static_cast<std::size_t>(fs) != 0)
        problems.push_back("value buffer size " + std::to_string(seq.values.size()) +
                           " is not a multiple of frame size " + std::to_string(fs));
    if (seq.frame_count() < 1) problems.push_back("sequence has zero frames");

    if (fs > 0) {
        const int n = seq.frame_count();
        for (int f = 0; f < n; ++f) {
            for (int j = 0; j < fs && j < static_cast<int>(seq.values.size()); ++j) {
                const float v = seq.values[static_cast<std::size_t>(f) * fs + j];
                if (!std::isfinite(v)) {
                    problems.push_back("non-finite value in frame " + std::to_string(f) +
                                       " (landmark " + std::to_string(j / seq.coord_dim) +
                                       ", dim " + std::to_string(j % seq.coord_dim) + ")");
                }
            }
        }
    }

    if (!problems.empty()) {
        std::ostringstream msg;
        msg << "invalid skeleton sequence (" << problems.size() << " problem(s)):";
        for (const auto& p : problems) msg << "\n  - " << p;
        throw ValidationError(msg.str());
    }
}

void validate(const Dataset& dataset) {
    std::set<std::string> ids;
    for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
        const Sample& s = dataset.samples[i];
        if (s.sequence.landmark_count != dataset.landmark_count ||
            s.sequence.coord_dim != dataset.coord_dim) {
            throw ValidationError("sample '" + s.sample_id + "' has shape (" +
                                  std::to_string(s.sequence.landmark_count) + "," +
                                  std::to_string(s.sequence.coord_dim) +
                                  ") but dataset declares (" + std::to_string(dataset.landmark_count) +
                                  "," + std::to_string(dataset.coord_dim) + ")");
        }
        if (s.label) {
            if (*s.label < 0 || *s.label >= dataset.class_count)
                throw ValidationError("sample '" + s.sample_id + "' label " +
                                      std::to_string(*s.label) + " outside [0, " +
                                      std::to_string(dataset.class_count) + ")");
        } else if (dataset.split_tag != SplitTag::Unlabeled) {
            throw ValidationError("sample '" + s.sample_id + "' is unlabeled in a labeled split");
        }
        if (!ids.insert(s.sample_id).second)
            throw ValidationError("duplicate sample id '" + s.sample_id + "'");
        validate(s.sequence);
    }
}

SkeletonSequence pad_or_truncate(const SkeletonSequence& seq, int target_n) {
    if (target_n < 1) throw ArgumentError("pad_or_truncate: target_n must be >= 1");
    const int n = seq.frame_count();
    SkeletonSequence out(target_n, seq.landmark_count, seq.coord_dim);
    const int keep = std::min(n, target_n);
    std::copy_n(seq.values.begin(), static_cast<std::size_t>(keep) * seq.frame_size(),
                out.values.begin());
    return out;
}

Eigen::MatrixXd to_matrix(const SkeletonSequence& seq) {
    const int n = seq.frame_count();
    const int fs = seq.frame_size();
    Eigen::MatrixXd m(n, fs);
    for (int f = 0; f < n; ++f)
        for (int j = 0; j < fs; ++j)
            m(f, j) = static_cast<double>(seq.values[static_cast<std::size_t>(f) * fs + j]);
    return m;
}

namespace {

std::map<int, std::vector<std::size_t>> indices_by_class(const Dataset& dataset) {
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
        if (!dataset.samples[i].label)
            throw ArgumentError("stratified operation requires a fully labeled dataset");
        by_class[*dataset.samples[i].label].push_back(i);
    }
    return by_class;
}

Dataset subset(const Dataset& dataset, const std::vector<std::size_t>& idx, SplitTag tag) {
    Dataset out;
    out.class_count = dataset.class_count;
    out.split_tag = tag;
    out.landmark_count = dataset.landmark_count;
    out.coord_dim = dataset.coord_dim;
    out.max_len = dataset.max_len;
    out.samples.reserve(idx.size());
    for (std::size_t i : idx) out.samples.push_back(dataset.samples[i]);
    return out;
}

} // namespace

std::pair<Dataset, Dataset> stratified_split(const Dataset& dataset, double test_fraction,
                                             std::uint64_t seed) {
    if (test_fraction <= 0.0 || test_fraction >= 1.0)
        throw ArgumentError("stratified_split: test_fraction must be in (0,1)");
    auto by_class = indices_by_class(dataset);
    std::vector<std::size_t> train_idx, test_idx;
    for (auto& [cls, idx] : by_class) {
        Rng rng(derive_seed(seed, 0x5713ULL, static_cast<std::uint64_t>(cls)));
        std::shuffle(idx.begin(), idx.end(), rng);
        std::size_t n_test = static_cast<std::size_t>(std::llround(test_fraction * idx.size()));
        if (idx.size() >= 2) n_test = std::clamp<std::size_t>(n_test, 1, idx.size() - 1);
        for (std::size_t i = 0; i < idx.size(); ++i)
            (i < n_test ? test_idx : train_idx).push_back(idx[i]);
    }
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(test_idx.begin(), test_idx.end());
    return {subset(dataset, train_idx, SplitTag::Train), subset(dataset, test_idx, SplitTag::Test)};
}

Dataset stratified_subsample(const Dataset& dataset, double label_fraction, std::uint64_t seed) {
    if (label_fraction <= 0.0 || label_fraction > 1.0)
        throw ArgumentError("stratified_subsample: label_fraction must be in (0,1]");
    auto by_class = indices_by_class(dataset);
    std::vector<std::size_t> keep;
    for (auto& [cls, idx] : by_class) {
        Rng rng(derive_seed(seed, 0xf8ac7ULL, static_cast<std::uint64_t>(cls)));
        std::shuffle(idx.begin(), idx.end(), rng);
        const std::size_t n_keep =
            static_cast<std::size_t>(std::llround(label_fraction * idx.size()));
        if (n_keep == 0)
            throw ArgumentError("stratified_subsample: class " + std::to_string(cls) +
                                " has zero sampled examples at fraction " +
                                std::to_string(label_fraction));
        keep.insert(keep.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_keep));
    }
    std::sort(keep.begin(), keep.end());
    return subset(dataset, keep, dataset.split_tag);
}

} // namespace slslr
