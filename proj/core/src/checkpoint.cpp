#include "slslr/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <map>

#include "json_util.hpp"

namespace slslr {

namespace fs = std::filesystem;
using detail::json;

static_assert(std::endian::native == std::endian::little,
              "checkpoint tensors are little-endian float32");

namespace {

std::string tensor_file_name(const std::string& param_name) {
    std::string file = param_name;
    for (char& c : file)
        if (c == '.') c = '_';
    return file + ".bin";
}

void write_tensor(const fs::path& path, const Mat& m) {
    std::vector<float> buf(static_cast<std::size_t>(m.size()));
    std::size_t i = 0;
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) buf[i++] = static_cast<float>(m(r, c));
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!out) throw IoError("short write to '" + path.string() + "'");
}

void read_tensor(const fs::path& path, Mat& m) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    const auto bytes = static_cast<std::size_t>(in.tellg());
    if (bytes != static_cast<std::size_t>(m.size()) * sizeof(float))
        throw IntegrityError("tensor '" + path.string() + "' holds " +
                             std::to_string(bytes / sizeof(float)) + " floats, expected " +
                             std::to_string(m.size()));
    std::vector<float> buf(static_cast<std::size_t>(m.size()));
    in.seekg(0);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(bytes));
    if (!in) throw IoError("short read from '" + path.string() + "'");
    std::size_t i = 0;
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = static_cast<double>(buf[i++]);
}

} // namespace

void save_checkpoint(const Checkpoint& ckpt, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create checkpoint directory '" + dir.string() + "'");

    json meta;
    meta["version"] = 1;
    meta["encoder"] = detail::encoder_to_json(ckpt.encoder);
    meta["head"] = detail::head_to_json(ckpt.head);
    meta["step"] = ckpt.step;
    meta["seed"] = ckpt.seed;
    meta["rng_state"] = ckpt.rng_state;
    meta["params"] = json::array();

    visit_params(ckpt.params, [&](const std::string& name, const Mat& m) {
        json entry;
        entry["name"] = name;
        entry["rows"] = m.rows();
        entry["cols"] = m.cols();
        entry["file"] = tensor_file_name(name);
        meta["params"].push_back(std::move(entry));
        write_tensor(dir / tensor_file_name(name), m);
    });

    std::ofstream out(dir / "checkpoint.json", std::ios::trunc);
    if (!out) throw IoError("cannot write '" + (dir / "checkpoint.json").string() + "'");
    out << meta.dump(2) << '\n';
}

Checkpoint load_checkpoint(const fs::path& dir) {
    std::ifstream in(dir / "checkpoint.json");
    if (!in) throw FormatError("missing '" + (dir / "checkpoint.json").string() + "'");
    json meta;
    try {
        in >> meta;
    } catch (const json::exception& e) {
        throw FormatError("corrupt checkpoint metadata: " + std::string(e.what()));
    }

    Checkpoint ckpt;
    try {
        if (meta.at("version").get<int>() != 1)
            throw FormatError("unsupported checkpoint version");
        ckpt.encoder = detail::encoder_from_json(meta.at("encoder"), EncoderConfig{}, "encoder");
        ckpt.head = detail::head_from_json(meta.at("head"), HeadConfig{}, "head");
        ckpt.step = meta.at("step").get<long>();
        ckpt.seed = meta.at("seed").get<std::uint64_t>();
        ckpt.rng_state = meta.at("rng_state").get<std::string>();

        std::map<std::string, json> index;
        for (const auto& entry : meta.at("params"))
            index[entry.at("name").get<std::string>()] = entry;

        ckpt.params = allocate_params(ckpt.encoder, ckpt.head);
        std::size_t used = 0;
        visit_params(ckpt.params, [&](const std::string& name, Mat& m) {
            auto it = index.find(name);
            if (it == index.end())
                throw IntegrityError("checkpoint is missing parameter '" + name + "'");
            const json& entry = it->second;
            if (entry.at("rows").get<Eigen::Index>() != m.rows() ||
                entry.at("cols").get<Eigen::Index>() != m.cols())
                throw IntegrityError("checkpoint parameter '" + name +
                                     "' shape does not match its config");
            read_tensor(dir / entry.at("file").get<std::string>(), m);
            ++used;
        });
        if (used != index.size())
            throw IntegrityError("checkpoint lists " + std::to_string(index.size()) +
                                 " parameters, config implies " + std::to_string(used));
    } catch (const json::exception& e) {
        throw FormatError("corrupt checkpoint metadata: " + std::string(e.what()));
    }
    return ckpt;
}

} // namespace slslr
