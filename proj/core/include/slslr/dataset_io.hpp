#pragma once

#include <filesystem>

#include "slslr/types.hpp"

namespace slslr {

/// On-disk dataset layout:
///   <dir>/manifest.json   {version:1, landmark_count, coord_dim, max_len,
///                          class_count, split_tag,
///                          samples:[{id, label|null, file, n_frames}]}
///   <dir>/<file>          raw little-endian float32, n_frames x L x D,
///                         row-major, no header.
/// Saving is deterministic: two saves of the same dataset are byte-identical.
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);

Dataset load_dataset(const std::filesystem::path& dir);

} // namespace slslr
