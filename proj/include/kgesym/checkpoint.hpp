#ifndef KGESYM_CHECKPOINT_HPP
#define KGESYM_CHECKPOINT_HPP

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "kgesym/common.hpp"
#include "kgesym/model.hpp"

namespace kgesym {

// Checkpoint file layout:
//   bytes 0..6   magic "KGESYM\x01"
//   bytes 7..14  u64 little-endian manifest length
//   manifest     JSON (model kind, dim, vocab sizes, paired relation ids,
//                norm, seed, epoch, declared array list)
//   arrays       raw little-endian float32, in manifest order
// Round-tripping a file reproduces it byte for byte.
inline constexpr char kCheckpointMagic[7] = {'K', 'G', 'E', 'S', 'Y', 'M', '\x01'};

struct CheckpointInfo {
    Norm norm = Norm::l1;
    std::uint64_t seed = 0;
    long epoch = 0;
};

namespace detail {

using ordered_json = nlohmann::ordered_json;

inline void write_u64_le(std::ostream& out, std::uint64_t v) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(buf, 8);
}

inline std::uint64_t read_u64_le(std::istream& in) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    if (!in) fail("checkpoint truncated while reading length field");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

inline void write_f32_array(std::ostream& out, std::span<const double> values) {
    std::vector<char> buf(values.size() * 4);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(values[i]));
        buf[4 * i + 0] = static_cast<char>(bits & 0xff);
        buf[4 * i + 1] = static_cast<char>((bits >> 8) & 0xff);
        buf[4 * i + 2] = static_cast<char>((bits >> 16) & 0xff);
        buf[4 * i + 3] = static_cast<char>((bits >> 24) & 0xff);
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

inline void read_f32_array(std::istream& in, std::span<double> values, const std::string& name) {
    std::vector<unsigned char> buf(values.size() * 4);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!in) fail("checkpoint truncated while reading array ", name);
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::uint32_t bits = static_cast<std::uint32_t>(buf[4 * i + 0]) |
                             (static_cast<std::uint32_t>(buf[4 * i + 1]) << 8) |
                             (static_cast<std::uint32_t>(buf[4 * i + 2]) << 16) |
                             (static_cast<std::uint32_t>(buf[4 * i + 3]) << 24);
        values[i] = static_cast<double>(std::bit_cast<float>(bits));
    }
}

struct ArrayRef {
    std::string name;
    std::size_t rows;
    std::size_t cols;
    std::span<double> data;   // non-owning view into ModelParams
};

// Declared array order: entity tables first, then relation slots by id, slot
// fields in translation/normal/proj order, plus before minus.
inline std::vector<ArrayRef> checkpoint_arrays(ModelParams& params) {
    std::vector<ArrayRef> arrays;
    const auto dim = static_cast<std::size_t>(params.dim());
    arrays.push_back({"entity_emb", params.entity_count(), dim, params.entity_table()});
    if (params.kind() == ModelKind::transd)
        arrays.push_back({"entity_proj", params.entity_count(), dim, params.entity_proj_table()});
    for (std::size_t r = 0; r < params.relation_count(); ++r) {
        RelationParams& rel = params.relation(static_cast<RelationId>(r));
        auto add_slot = [&](RelationSlot& slot, Branch b) {
            const std::string prefix = concat("rel/", r, "/", branch_name(b), "/");
            arrays.push_back({prefix + "translation", 1, dim, slot.translation});
            if (params.kind() == ModelKind::transh)
                arrays.push_back({prefix + "normal", 1, dim, slot.normal});
            if (params.kind() == ModelKind::transd)
                arrays.push_back({prefix + "proj", 1, dim, slot.proj});
        };
        if (rel.is_pair()) {
            add_slot(rel.plus, Branch::plus);
            add_slot(*rel.minus, Branch::minus);
        } else {
            add_slot(rel.plus, Branch::single);
        }
    }
    return arrays;
}

inline ModelKind parse_model_kind(const std::string& s) {
    if (s == "transe") return ModelKind::transe;
    if (s == "transh") return ModelKind::transh;
    if (s == "transd") return ModelKind::transd;
    fail("unknown model kind \"", s, "\"");
}

inline Norm parse_norm(const std::string& s) {
    if (s == "l1" || s == "L1") return Norm::l1;
    if (s == "l2" || s == "L2") return Norm::l2;
    fail("unknown norm \"", s, "\"");
}

}  // namespace detail

inline void save_checkpoint(const ModelParams& params, const CheckpointInfo& info,
                            const std::filesystem::path& path) {
    auto& mutable_params = const_cast<ModelParams&>(params);   // views only, nothing is modified
    const auto arrays = detail::checkpoint_arrays(mutable_params);

    detail::ordered_json manifest;
    manifest["format_version"] = 1;
    manifest["model"] = model_name(params.kind());
    manifest["dim"] = params.dim();
    manifest["entity_count"] = params.entity_count();
    manifest["relation_count"] = params.relation_count();
    manifest["paired_relations"] = params.paired_relations();
    manifest["norm"] = norm_name(info.norm);
    manifest["seed"] = info.seed;
    manifest["epoch"] = info.epoch;
    detail::ordered_json list = detail::ordered_json::array();
    for (const auto& a : arrays)
        list.push_back({{"name", a.name}, {"rows", a.rows}, {"cols", a.cols}});
    manifest["arrays"] = std::move(list);

    std::ofstream out(path, std::ios::binary);
    if (!out) fail("cannot write checkpoint ", path.string());
    out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    const std::string text = manifest.dump();
    detail::write_u64_le(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& a : arrays) detail::write_f32_array(out, a.data);
    if (!out) fail("write failure on checkpoint ", path.string());
}

inline std::pair<ModelParams, CheckpointInfo> load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open checkpoint ", path.string());

    char magic[sizeof(kCheckpointMagic)];
    in.read(magic, sizeof(magic));
    if (!in || !std::equal(magic, magic + sizeof(magic), kCheckpointMagic))
        fail(path.string(), " is not a checkpoint file (bad magic)");

    const std::uint64_t len = detail::read_u64_le(in);
    if (len > (1ull << 30)) fail(path.string(), ": implausible manifest length ", len);
    std::string text(len, '\0');
    in.read(text.data(), static_cast<std::streamsize>(len));
    if (!in) fail("checkpoint truncated while reading manifest");

    detail::ordered_json manifest;
    try {
        manifest = detail::ordered_json::parse(text);
    } catch (const std::exception& e) {
        fail(path.string(), ": manifest parse error: ", e.what());
    }
    if (manifest.value("format_version", 0) != 1)
        fail(path.string(), ": unsupported checkpoint format version");

    const ModelKind kind = detail::parse_model_kind(manifest.at("model").get<std::string>());
    const int dim = manifest.at("dim").get<int>();
    const auto entity_count = manifest.at("entity_count").get<std::size_t>();
    const auto relation_count = manifest.at("relation_count").get<std::size_t>();
    const auto paired = manifest.at("paired_relations").get<std::vector<RelationId>>();

    CheckpointInfo info;
    info.norm = detail::parse_norm(manifest.at("norm").get<std::string>());
    info.seed = manifest.at("seed").get<std::uint64_t>();
    info.epoch = manifest.at("epoch").get<long>();

    ModelParams params(kind, dim, entity_count, relation_count);
    for (RelationId r : paired) {
        if (r < 0 || static_cast<std::size_t>(r) >= relation_count)
            fail(path.string(), ": paired relation id ", r, " out of range");
        RelationParams& rel = params.relation(r);
        rel.minus.emplace();
    }
    // Slot field vectors must exist before the array walk wires views to them.
    for (std::size_t r = 0; r < relation_count; ++r) {
        RelationParams& rel = params.relation(static_cast<RelationId>(r));
        auto size_slot = [&](RelationSlot& slot) {
            slot.translation.resize(static_cast<std::size_t>(dim));
            if (kind == ModelKind::transh) slot.normal.resize(static_cast<std::size_t>(dim));
            if (kind == ModelKind::transd) slot.proj.resize(static_cast<std::size_t>(dim));
        };
        size_slot(rel.plus);
        if (rel.is_pair()) size_slot(*rel.minus);
    }

    const auto arrays = detail::checkpoint_arrays(params);
    const auto& declared = manifest.at("arrays");
    if (declared.size() != arrays.size())
        fail(path.string(), ": manifest declares ", declared.size(), " arrays, model needs ",
             arrays.size());
    for (std::size_t i = 0; i < arrays.size(); ++i) {
        const auto& d = declared[i];
        if (d.at("name").get<std::string>() != arrays[i].name ||
            d.at("rows").get<std::size_t>() != arrays[i].rows ||
            d.at("cols").get<std::size_t>() != arrays[i].cols)
            fail(path.string(), ": array ", i, " mismatch: expected ", arrays[i].name, " ",
                 arrays[i].rows, "x", arrays[i].cols);
        detail::read_f32_array(in, arrays[i].data, arrays[i].name);
    }
    in.peek();
    if (!in.eof()) fail(path.string(), ": trailing bytes after declared arrays");
    return {std::move(params), info};
}

}  // namespace kgesym

#endif
