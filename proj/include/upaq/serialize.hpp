//
// Copyright 2026 The upaq Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

// Container layout shared by both formats:
//
//   magic (5 bytes) | header length (u32 LE) | JSON header | payload blob
//
// Dense models use magic "UPAQ1" and store every weight and bias as f32 LE.
// Compressed models use "UPQC1"; their blob holds d*d byte masks per group,
// then per layer either f32 scales + bit-packed levels or dense f32 weights,
// then the f32 bias. Header offsets are byte offsets into the blob. JSON keys
// are emitted sorted, so equal models serialize to equal bytes.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "upaq/bitpack.hpp"
#include "upaq/compressed.hpp"
#include "upaq/error.hpp"
#include "upaq/model.hpp"
#include "upaq/rng.hpp"

namespace upaq {

inline constexpr std::string_view kDenseMagic = "UPAQ1";
inline constexpr std::string_view kCompressedMagic = "UPQC1";
inline constexpr int kFormatVersion = 1;

namespace detail {

using json = nlohmann::json;

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<char>((v >> (8 * k)) & 0xffu));
}

inline std::uint32_t get_u32(std::string_view in, std::size_t at) {
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + k])) << (8 * k);
  }
  return v;
}

class BlobWriter {
 public:
  std::size_t offset() const { return bytes_.size(); }

  void floats(std::span<const float> values, const std::string& what) {
    for (float f : values) {
      if (!std::isfinite(f)) throw ValidationError(what + ": unserializable non-finite value");
      const auto u = std::bit_cast<std::uint32_t>(f);
      for (int k = 0; k < 4; ++k) bytes_.push_back(static_cast<char>((u >> (8 * k)) & 0xffu));
    }
  }
  void raw(std::span<const std::uint8_t> data) {
    bytes_.append(reinterpret_cast<const char*>(data.data()), data.size());
  }
  std::string& bytes() { return bytes_; }

 private:
  std::string bytes_;
};

class BlobReader {
 public:
  explicit BlobReader(std::string_view blob) : blob_(blob) {}

  std::string_view range(std::size_t offset, std::size_t size, const std::string& what) const {
    if (offset > blob_.size() || size > blob_.size() - offset) {
      throw FormatError(what + ": section runs past the end of the blob");
    }
    return blob_.substr(offset, size);
  }

  std::vector<float> floats(std::size_t offset, std::size_t count, const std::string& what) const {
    const std::string_view raw = range(offset, count * 4, what);
    std::vector<float> out(count);
    for (std::size_t j = 0; j < count; ++j) out[j] = std::bit_cast<float>(get_u32(raw, 4 * j));
    return out;
  }

 private:
  std::string_view blob_;
};

inline std::string wrap_container(std::string_view magic, const json& header,
                                  const std::string& blob) {
  const std::string text = header.dump();
  std::string out;
  out.reserve(magic.size() + 4 + text.size() + blob.size());
  out.append(magic);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  out += blob;
  return out;
}

struct Container {
  json header;
  std::string_view blob;
};

inline Container unwrap_container(std::string_view bytes, std::string_view magic) {
  if (bytes.size() < magic.size() + 4) throw FormatError("file too short for a container");
  const std::string_view found = bytes.substr(0, magic.size());
  if (found != magic) {
    if (found.substr(0, 4) == magic.substr(0, 4)) {
      throw FormatError("format version mismatch: expected " + std::string(magic) +
                        ", found " + std::string(found));
    }
    throw FormatError("bad magic, expected " + std::string(magic));
  }
  const std::size_t header_len = get_u32(bytes, magic.size());
  const std::size_t header_at = magic.size() + 4;
  if (header_len > bytes.size() - header_at) throw FormatError("truncated header");
  Container c;
  try {
    c.header = json::parse(bytes.substr(header_at, header_len));
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed header: ") + e.what());
  }
  c.blob = bytes.substr(header_at + header_len);
  try {
    if (c.header.at("format_version").get<int>() != kFormatVersion) {
      throw FormatError("format version mismatch");
    }
    const auto declared = c.header.at("blob_bytes").get<std::size_t>();
    if (declared != c.blob.size()) {
      throw FormatError("payload is " + std::to_string(c.blob.size()) + " bytes, header declares " +
                        std::to_string(declared));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed header: ") + e.what());
  }
  return c;
}

inline json layer_header(const LayerSpec& layer) {
  json j;
  j["id"] = layer.id;
  j["kind"] = std::string(to_string(layer.kind));
  j["inputs"] = layer.inputs;
  j["stride"] = layer.stride;
  j["padding"] = layer.padding;
  return j;
}

inline LayerSpec layer_from_header(const json& j) {
  LayerSpec layer;
  layer.id = j.at("id").get<std::string>();
  layer.kind = layer_kind_from_string(j.at("kind").get<std::string>());
  layer.inputs = j.at("inputs").get<std::vector<std::string>>();
  layer.stride = j.at("stride").get<std::size_t>();
  layer.padding = j.at("padding").get<std::size_t>();
  return layer;
}

inline json section(std::size_t offset, std::size_t count) {
  return json{{"offset", offset}, {"count", count}};
}

inline json shape_of(const Tensor4& t) { return json::array({t.out_ch, t.in_ch, t.kh, t.kw}); }

inline Tensor4 tensor_from(const json& shape, std::vector<float> data) {
  const auto dims = shape.get<std::vector<std::size_t>>();
  if (dims.size() != 4) throw FormatError("weight shape must have 4 dims");
  Tensor4 t;
  t.out_ch = dims[0];
  t.in_ch = dims[1];
  t.kh = dims[2];
  t.kw = dims[3];
  if (t.size() != data.size()) throw FormatError("weight count does not match shape");
  t.data = std::move(data);
  return t;
}

inline void write_bias(const LayerSpec& layer, json& j, BlobWriter& blob) {
  if (!layer.bias) return;
  j["bias"] = section(blob.offset(), layer.bias->size());
  blob.floats(*layer.bias, "layer '" + layer.id + "' bias");
}

inline void read_bias(const json& j, LayerSpec& layer, const BlobReader& blob) {
  if (!j.contains("bias")) return;
  layer.bias = blob.floats(j["bias"].at("offset"), j["bias"].at("count"),
                           "layer '" + layer.id + "' bias");
}

}  // namespace detail

// ---- dense models ---------------------------------------------------------

inline std::string to_bytes(const ModelGraph& model) {
  validate(model);
  detail::json header;
  header["format_version"] = kFormatVersion;
  header["name"] = model.name;
  header["input_shape"] = {model.input_shape.channels, model.input_shape.height,
                           model.input_shape.width};
  detail::BlobWriter blob;
  detail::json layers = detail::json::array();
  for (const auto& layer : model.layers) {
    detail::json j = detail::layer_header(layer);
    if (layer.weights) {
      j["weights"] = detail::section(blob.offset(), layer.weights->size());
      j["weights"]["shape"] = detail::shape_of(*layer.weights);
      blob.floats(layer.weights->data, "layer '" + layer.id + "' weights");
    }
    detail::write_bias(layer, j, blob);
    layers.push_back(std::move(j));
  }
  header["layers"] = std::move(layers);
  header["blob_bytes"] = blob.offset();
  return detail::wrap_container(kDenseMagic, header, blob.bytes());
}

inline ModelGraph model_from_bytes(std::string_view bytes) {
  const detail::Container c = detail::unwrap_container(bytes, kDenseMagic);
  const detail::BlobReader blob(c.blob);
  ModelGraph model;
  try {
    model.name = c.header.at("name").get<std::string>();
    const auto in = c.header.at("input_shape").get<std::vector<std::size_t>>();
    if (in.size() != 3) throw FormatError("input_shape must have 3 dims");
    model.input_shape = {in[0], in[1], in[2]};
    for (const auto& j : c.header.at("layers")) {
      LayerSpec layer = detail::layer_from_header(j);
      if (j.contains("weights")) {
        const auto& w = j["weights"];
        layer.weights = detail::tensor_from(
            w.at("shape"), blob.floats(w.at("offset"), w.at("count"),
                                       "layer '" + layer.id + "' weights"));
      }
      detail::read_bias(j, layer, blob);
      model.layers.push_back(std::move(layer));
    }
  } catch (const detail::json::exception& e) {
    throw FormatError(std::string("malformed header: ") + e.what());
  }
  validate(model);
  return model;
}

// ---- compressed models ----------------------------------------------------

inline std::string to_bytes(const CompressedModel& input) {
  CompressedModel model = input;
  std::sort(model.groups.begin(), model.groups.end(),
            [](const auto& a, const auto& b) { return a.root_id < b.root_id; });
  validate(model);

  detail::json header;
  header["format_version"] = kFormatVersion;
  header["name"] = model.name;
  header["input_shape"] = {model.input_shape.channels, model.input_shape.height,
                           model.input_shape.width};
  header["profile"] = {{"name", model.profile.name}, {"quant_bits", model.profile.quant_bits}};

  detail::BlobWriter blob;
  detail::json groups = detail::json::array();
  for (const auto& g : model.groups) {
    detail::json positions = detail::json::array();
    for (const Cell& p : g.pattern.positions) positions.push_back({p.row, p.col});
    const std::vector<unsigned char> mask = g.pattern.mask();
    groups.push_back({{"root", g.root_id},
                      {"leaves", g.leaf_ids},
                      {"bits", g.bitwidth},
                      {"pattern",
                       {{"kind", std::string(to_string(g.pattern.kind))},
                        {"d", g.pattern.d},
                        {"n", g.pattern.n},
                        {"positions", positions}}},
                      {"mask", detail::section(blob.offset(), mask.size())}});
    blob.raw(mask);
  }
  header["groups"] = std::move(groups);

  detail::json layers = detail::json::array();
  for (const auto& layer : model.layers) {
    detail::json j = detail::layer_header(layer.spec);
    const std::string where = "layer '" + layer.spec.id + "'";
    if (layer.packed) {
      const PackedWeights& p = *layer.packed;
      detail::json pj;
      pj["shape"] = {p.out_ch, p.in_ch, p.kh, p.kw};
      pj["layout"] = std::string(to_string(p.layout));
      pj["bits"] = p.bits;
      pj["scales"] = detail::section(blob.offset(), p.scales.size());
      blob.floats(p.scales, where + " scales");
      const std::size_t levels_at = blob.offset();
      std::vector<std::uint8_t> packed;
      for (const auto& unit : p.values) pack_lanes(unit, p.bits, packed);
      blob.raw(packed);
      pj["levels"] = {{"offset", levels_at}, {"bytes", packed.size()}};
      j["packed"] = std::move(pj);
    } else if (layer.spec.weights) {
      j["weights"] = detail::section(blob.offset(), layer.spec.weights->size());
      j["weights"]["shape"] = detail::shape_of(*layer.spec.weights);
      blob.floats(layer.spec.weights->data, where + " weights");
    }
    detail::write_bias(layer.spec, j, blob);
    layers.push_back(std::move(j));
  }
  header["layers"] = std::move(layers);
  header["blob_bytes"] = blob.offset();
  return detail::wrap_container(kCompressedMagic, header, blob.bytes());
}

inline CompressedModel compressed_from_bytes(std::string_view bytes) {
  const detail::Container c = detail::unwrap_container(bytes, kCompressedMagic);
  const detail::BlobReader blob(c.blob);
  CompressedModel model;
  try {
    model.name = c.header.at("name").get<std::string>();
    const auto in = c.header.at("input_shape").get<std::vector<std::size_t>>();
    if (in.size() != 3) throw FormatError("input_shape must have 3 dims");
    model.input_shape = {in[0], in[1], in[2]};
    model.profile.name = c.header.at("profile").at("name").get<std::string>();
    model.profile.quant_bits = c.header.at("profile").at("quant_bits").get<std::vector<int>>();

    for (const auto& gj : c.header.at("groups")) {
      CompressedGroup g;
      g.root_id = gj.at("root").get<std::string>();
      g.leaf_ids = gj.at("leaves").get<std::vector<std::string>>();
      g.bitwidth = gj.at("bits").get<int>();
      const auto& pj = gj.at("pattern");
      g.pattern.kind = pattern_kind_from_string(pj.at("kind").get<std::string>());
      g.pattern.d = pj.at("d").get<std::size_t>();
      g.pattern.n = pj.at("n").get<std::size_t>();
      for (const auto& cell : pj.at("positions")) {
        g.pattern.positions.push_back({cell.at(0).get<std::size_t>(), cell.at(1).get<std::size_t>()});
        if (g.pattern.positions.back().row >= g.pattern.d ||
            g.pattern.positions.back().col >= g.pattern.d) {
          throw FormatError("group '" + g.root_id + "': pattern cell out of range");
        }
      }
      const std::string_view mask = blob.range(gj.at("mask").at("offset"),
                                               gj.at("mask").at("count"), "group mask");
      const std::vector<unsigned char> expected = g.pattern.mask();
      if (mask.size() != expected.size() ||
          !std::equal(expected.begin(), expected.end(), mask.begin(),
                      [](unsigned char a, char b) { return a == static_cast<unsigned char>(b); })) {
        throw FormatError("group '" + g.root_id + "': mask does not match pattern");
      }
      model.groups.push_back(std::move(g));
    }

    for (const auto& j : c.header.at("layers")) {
      CompressedLayer layer;
      layer.spec = detail::layer_from_header(j);
      const std::string where = "layer '" + layer.spec.id + "'";
      if (j.contains("packed")) {
        const auto& pj = j["packed"];
        PackedWeights p;
        const auto dims = pj.at("shape").get<std::vector<std::size_t>>();
        if (dims.size() != 4) throw FormatError(where + ": packed shape must have 4 dims");
        p.out_ch = dims[0];
        p.in_ch = dims[1];
        p.kh = dims[2];
        p.kw = dims[3];
        p.layout = packed_layout_from_string(pj.at("layout").get<std::string>());
        p.bits = pj.at("bits").get<int>();
        if (!is_supported_bitwidth(p.bits)) throw FormatError(where + ": unsupported bitwidth");
        p.scales = blob.floats(pj["scales"].at("offset"), pj["scales"].at("count"),
                               where + " scales");
        const CompressedGroup* g = model.group_of(layer.spec.id);
        if (!g) throw FormatError(where + ": packed layer belongs to no group");
        if (p.scales.size() != p.unit_count()) throw FormatError(where + ": scale count mismatch");
        const std::string_view raw =
            blob.range(pj["levels"].at("offset"), pj["levels"].at("bytes"), where + " levels");
        std::size_t at = 0;
        p.values.resize(p.unit_count());
        for (std::size_t u = 0; u < p.unit_count(); ++u) {
          const std::size_t count = retained_cells(p, g->pattern, u).size();
          const std::size_t len = packed_bytes(count, p.bits);
          if (at + len > raw.size()) throw FormatError(where + ": truncated levels");
          p.values[u] = unpack_lanes(
              std::span(reinterpret_cast<const std::uint8_t*>(raw.data()) + at, len), count,
              p.bits);
          at += len;
        }
        if (at != raw.size()) throw FormatError(where + ": level section size mismatch");
        layer.packed = std::move(p);
      } else if (j.contains("weights")) {
        const auto& w = j["weights"];
        layer.spec.weights = detail::tensor_from(
            w.at("shape"), blob.floats(w.at("offset"), w.at("count"), where + " weights"));
      }
      detail::read_bias(j, layer.spec, blob);
      model.layers.push_back(std::move(layer));
    }
  } catch (const detail::json::exception& e) {
    throw FormatError(std::string("malformed header: ") + e.what());
  }
  validate(model);
  return model;
}

// ---- files ----------------------------------------------------------------

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failure on '" + path.string() + "'");
  return bytes;
}

inline void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

inline ModelGraph load_model(const std::filesystem::path& path) {
  return model_from_bytes(read_file(path));
}

inline void save_model(const ModelGraph& model, const std::filesystem::path& path) {
  write_file(path, to_bytes(model));
}

inline CompressedModel load_compressed(const std::filesystem::path& path) {
  return compressed_from_bytes(read_file(path));
}

inline void save_compressed(const CompressedModel& model, const std::filesystem::path& path) {
  write_file(path, to_bytes(model));
}

// Checksum of the canonical byte form.
template <typename Model>
std::uint64_t checksum(const Model& model) {
  return fnv1a64(to_bytes(model));
}

// Size of the payload blob in a serialized container (header excluded).
inline std::size_t blob_size(std::string_view container_bytes) {
  if (container_bytes.size() < 9) throw FormatError("file too short for a container");
  const std::size_t header_len = detail::get_u32(container_bytes, 5);
  return container_bytes.size() - 9 - header_len;
}

}  // namespace upaq
