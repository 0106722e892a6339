#pragma once

// Checkpoint file format:
//   bytes 0..3   magic "SPC1"
//   bytes 4..7   header length (little-endian uint32)
//   header       UTF-8 JSON: {"config": {...}, "tensors": [{name, shape, offset}]}
//   data         raw little-endian float32, tensors in manifest order
// Offsets are byte offsets into the data section. Values are doubles in
// memory and are narrowed to float32 on disk.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "space/model.hpp"

namespace space {

inline constexpr char kCheckpointMagic[4] = {'S', 'P', 'C', '1'};

namespace detail {

inline void put_u32_le(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 24) & 0xff));
}

inline void put_f32_le(std::string& out, float f) {
    put_u32_le(out, std::bit_cast<std::uint32_t>(f));
}

inline std::uint32_t get_u32_le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline nlohmann::json config_json(const ModelConfig& c) {
    return {
        {"vocab_size", c.vocab_size},   {"d_model", c.d_model},
        {"n_layers", c.n_layers},       {"n_heads", c.n_heads},
        {"d_ff", c.d_ff},               {"max_position", c.max_position},
        {"mask_token_id", c.mask_token_id}, {"eos_token_id", c.eos_token_id},
        {"init_std", c.init_std},       {"seed", c.seed},
    };
}

inline ModelConfig config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.vocab_size = j.at("vocab_size").get<std::size_t>();
    c.d_model = j.at("d_model").get<std::size_t>();
    c.n_layers = j.at("n_layers").get<std::size_t>();
    c.n_heads = j.at("n_heads").get<std::size_t>();
    c.d_ff = j.at("d_ff").get<std::size_t>();
    c.max_position = j.at("max_position").get<std::size_t>();
    c.mask_token_id = j.at("mask_token_id").get<int>();
    c.eos_token_id = j.at("eos_token_id").get<int>();
    c.init_std = j.at("init_std").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.validate();
    return c;
}

}  // namespace detail

inline void save_checkpoint(ModelParams& params, const std::string& path) {
    nlohmann::json header;
    header["config"] = detail::config_json(params.config);

    std::string data;
    nlohmann::json tensors = nlohmann::json::array();
    params.for_each_param([&](ParamTensor& p) {
        tensors.push_back({{"name", p.name},
                           {"shape", {p.value.rows, p.value.cols}},
                           {"offset", data.size()}});
        for (double v : p.value.data) {
            detail::put_f32_le(data, static_cast<float>(v));
        }
    });
    header["tensors"] = std::move(tensors);

    const std::string header_str = header.dump();
    std::string blob;
    blob.reserve(8 + header_str.size() + data.size());
    blob.append(kCheckpointMagic, 4);
    detail::put_u32_le(blob, static_cast<std::uint32_t>(header_str.size()));
    blob += header_str;
    blob += data;

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot open checkpoint for writing: " + path);
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    if (!out) throw ConfigError("short write to checkpoint: " + path);
}

inline ModelParams load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open checkpoint: " + path);
    std::vector<unsigned char> blob((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (blob.size() < 8 || std::memcmp(blob.data(), kCheckpointMagic, 4) != 0) {
        throw ConfigError("bad checkpoint magic: " + path);
    }
    const std::uint32_t header_len = detail::get_u32_le(blob.data() + 4);
    if (blob.size() < 8 + static_cast<std::size_t>(header_len)) {
        throw ConfigError("truncated checkpoint header: " + path);
    }
    const nlohmann::json header = nlohmann::json::parse(
        blob.begin() + 8, blob.begin() + 8 + header_len);

    ModelParams params = init_model(detail::config_from_json(header.at("config")));
    const unsigned char* data = blob.data() + 8 + header_len;
    const std::size_t data_len = blob.size() - 8 - header_len;

    const auto& tensors = header.at("tensors");
    std::size_t idx = 0;
    params.for_each_param([&](ParamTensor& p) {
        if (idx >= tensors.size()) throw ConfigError("checkpoint manifest too short: " + path);
        const auto& t = tensors[idx++];
        if (t.at("name").get<std::string>() != p.name) {
            throw ConfigError("checkpoint tensor order mismatch at " + p.name);
        }
        const auto shape = t.at("shape");
        if (shape.at(0).get<std::size_t>() != p.value.rows ||
            shape.at(1).get<std::size_t>() != p.value.cols) {
            throw ConfigError("checkpoint shape mismatch at " + p.name);
        }
        const std::size_t offset = t.at("offset").get<std::size_t>();
        const std::size_t bytes = p.value.size() * 4;
        if (offset + bytes > data_len) throw ConfigError("checkpoint data out of range at " + p.name);
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const std::uint32_t u = detail::get_u32_le(data + offset + i * 4);
            p.value.data[i] = static_cast<double>(std::bit_cast<float>(u));
        }
    });
    if (idx != tensors.size()) throw ConfigError("checkpoint manifest too long: " + path);
    return params;
}

}  // namespace space
