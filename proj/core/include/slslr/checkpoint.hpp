#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "slslr/model.hpp"

namespace slslr {

/// The contract between pretraining and every evaluation: encoder/head
/// parameters plus the config and RNG state that produced them.
///
/// On disk: <dir>/checkpoint.json (config, step count, rng state, parameter
/// index) and one raw little-endian float32 file per named parameter,
/// row-major. save(load(dir)) reproduces the directory byte-for-byte.
struct Checkpoint {
    EncoderConfig encoder;
    HeadConfig head;
    ModelParams params;
    long step = 0;
    std::uint64_t seed = 0;
    std::string rng_state;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& dir);

Checkpoint load_checkpoint(const std::filesystem::path& dir);

} // namespace slslr
