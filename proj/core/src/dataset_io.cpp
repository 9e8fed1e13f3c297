#include "slslr/dataset_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "slslr/errors.hpp"

namespace slslr {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

static_assert(std::endian::native == std::endian::little,
              "dataset payloads are little-endian float32; big-endian hosts need a byte swap");

namespace {

void write_file(const fs::path& path, const void* data, std::size_t bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
    if (!out) throw IoError("short write to '" + path.string() + "'");
}

std::vector<float> read_floats(const fs::path& path, std::size_t expected_count) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    const auto bytes = static_cast<std::size_t>(in.tellg());
    if (bytes != expected_count * sizeof(float))
        throw IntegrityError("payload '" + path.string() + "' holds " +
                             std::to_string(bytes / sizeof(float)) + " floats, manifest declares " +
                             std::to_string(expected_count));
    std::vector<float> values(expected_count);
    in.seekg(0);
    in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(bytes));
    if (!in) throw IoError("short read from '" + path.string() + "'");
    return values;
}

} // namespace

void save_dataset(const Dataset& dataset, const fs::path& dir) {
    validate(dataset);

    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create dataset directory '" + dir.string() + "': " + ec.message());

    json manifest;
    manifest["version"] = 1;
    manifest["landmark_count"] = dataset.landmark_count;
    manifest["coord_dim"] = dataset.coord_dim;
    manifest["max_len"] = dataset.max_len;
    manifest["class_count"] = dataset.class_count;
    manifest["split_tag"] = to_string(dataset.split_tag);
    manifest["samples"] = json::array();

    for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
        const Sample& s = dataset.samples[i];
        const std::string file = "sample_" + std::to_string(i) + ".bin";
        write_file(dir / file, s.sequence.values.data(), s.sequence.values.size() * sizeof(float));
        json entry;
        entry["id"] = s.sample_id;
        entry["label"] = s.label ? json(*s.label) : json(nullptr);
        entry["file"] = file;
        entry["n_frames"] = s.sequence.frame_count();
        manifest["samples"].push_back(std::move(entry));
    }

    const std::string text = manifest.dump(2) + "\n";
    write_file(dir / "manifest.json", text.data(), text.size());
}

Dataset load_dataset(const fs::path& dir) {
    const fs::path manifest_path = dir / "manifest.json";
    std::ifstream in(manifest_path);
    if (!in) throw FormatError("missing manifest '" + manifest_path.string() + "'");

    json manifest;
    try {
        in >> manifest;
    } catch (const json::exception& e) {
        throw FormatError("corrupt manifest '" + manifest_path.string() + "': " + e.what());
    }

    Dataset dataset;
    try {
        if (manifest.at("version").get<int>() != 1)
            throw FormatError("unsupported manifest version in '" + manifest_path.string() + "'");
        dataset.landmark_count = manifest.at("landmark_count").get<int>();
        dataset.coord_dim = manifest.at("coord_dim").get<int>();
        dataset.max_len = manifest.at("max_len").get<int>();
        dataset.class_count = manifest.at("class_count").get<int>();
        dataset.split_tag = split_tag_from_string(manifest.value("split_tag", "train"));

        for (const auto& entry : manifest.at("samples")) {
            Sample s;
            s.sample_id = entry.at("id").get<std::string>();
            if (!entry.at("label").is_null()) s.label = entry.at("label").get<int>();
            const int n_frames = entry.at("n_frames").get<int>();
            const auto count = static_cast<std::size_t>(n_frames) * dataset.landmark_count *
                               dataset.coord_dim;
            s.sequence.landmark_count = dataset.landmark_count;
            s.sequence.coord_dim = dataset.coord_dim;
            s.sequence.values = read_floats(dir / entry.at("file").get<std::string>(), count);
            dataset.samples.push_back(std::move(s));
        }
    } catch (const json::exception& e) {
        throw FormatError("corrupt manifest '" + manifest_path.string() + "': " + e.what());
    }

    validate(dataset);
    return dataset;
}

} // namespace slslr
