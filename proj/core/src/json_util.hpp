#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "slslr/errors.hpp"
#include "slslr/model.hpp"

namespace slslr::detail {

using json = nlohmann::ordered_json;

/// Rejects keys outside `allowed`, reporting them as "<context>.<key>".
inline void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                       const std::string& context) {
    for (const auto& [key, value] : obj.items()) {
        bool known = false;
        for (const char* a : allowed)
            if (key == a) {
                known = true;
                break;
            }
        if (!known)
            throw ArgumentError("unknown config key '" +
                                (context.empty() ? key : context + "." + key) + "'");
    }
}

template <typename T>
void read_field(const json& obj, const char* key, T& value) {
    if (!obj.contains(key) || obj.at(key).is_null()) return;
    try {
        value = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ArgumentError(std::string("config key '") + key + "' has the wrong type");
    }
}

inline json encoder_to_json(const EncoderConfig& c) {
    json j;
    j["blocks"] = c.blocks;
    j["heads"] = c.heads;
    j["embed_dim"] = c.embed_dim;
    j["dropout"] = c.dropout;
    j["input_layernorm_count"] = c.input_layernorm_count;
    j["max_len"] = c.max_len;
    j["positional_encoding"] = to_string(c.positional_encoding);
    j["input_dim"] = c.input_dim;
    j["use_padding_mask"] = c.use_padding_mask;
    return j;
}

inline EncoderConfig encoder_from_json(const json& j, EncoderConfig c, const std::string& context) {
    check_keys(j,
               {"blocks", "heads", "embed_dim", "dropout", "input_layernorm_count", "max_len",
                "positional_encoding", "input_dim", "use_padding_mask"},
               context);
    read_field(j, "blocks", c.blocks);
    read_field(j, "heads", c.heads);
    read_field(j, "embed_dim", c.embed_dim);
    read_field(j, "dropout", c.dropout);
    read_field(j, "input_layernorm_count", c.input_layernorm_count);
    read_field(j, "max_len", c.max_len);
    if (j.contains("positional_encoding"))
        c.positional_encoding =
            positional_encoding_from_string(j.at("positional_encoding").get<std::string>());
    read_field(j, "input_dim", c.input_dim);
    read_field(j, "use_padding_mask", c.use_padding_mask);
    return c;
}

inline json head_to_json(const HeadConfig& c) {
    json j;
    j["projection_hidden"] = c.projection_hidden;
    j["projection_out"] = c.projection_out;
    j["predictor_hidden"] = c.predictor_hidden;
    return j;
}

inline HeadConfig head_from_json(const json& j, HeadConfig c, const std::string& context) {
    check_keys(j, {"projection_hidden", "projection_out", "predictor_hidden"}, context);
    read_field(j, "projection_hidden", c.projection_hidden);
    read_field(j, "projection_out", c.projection_out);
    read_field(j, "predictor_hidden", c.predictor_hidden);
    return c;
}

} // namespace slslr::detail
