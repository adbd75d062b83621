//
// Copyright 2026 The upaq Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <filesystem>

#include <gtest/gtest.h>

#include "helpers.hpp"

namespace upaq {
namespace {

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("upaq_test_" + name);
}

TEST(Serialize, DenseRoundTripIsIdentity) {
  for (const auto& arch : fixture_archs()) {
    for (std::uint64_t seed : {1u, 42u, 977u}) {
      const ModelGraph m = gen_fixture(arch, seed).model;
      const std::string bytes = to_bytes(m);
      const ModelGraph back = model_from_bytes(bytes);
      EXPECT_TRUE(back == m) << arch;
      EXPECT_EQ(to_bytes(back), bytes) << arch;
    }
  }
}

TEST(Serialize, SaveLoadKeepsChecksum) {
  const ModelGraph m = gen_fixture("toy-cnn", 42).model;
  const auto path = temp_path("toycnn_v1.upaq");
  save_model(m, path);
  const ModelGraph back = load_model(path);
  EXPECT_TRUE(back == m);
  EXPECT_EQ(checksum(back), checksum(m));
  EXPECT_EQ(back.layers.size(), 6u);
  std::filesystem::remove(path);
}

TEST(Serialize, CompressedRoundTripIsIdentity) {
  for (const auto& arch : fixture_archs()) {
    const ModelGraph m = gen_fixture(arch, 42).model;
    for (const auto& profile : {CompressionProfile::hck(3), CompressionProfile::lck(3)}) {
      const CompressedModel c = compress_model(m, profile, AnalyticCost{}).model;
      const std::string bytes = to_bytes(c);
      const CompressedModel back = compressed_from_bytes(bytes);
      EXPECT_EQ(to_bytes(back), bytes) << arch;
      EXPECT_EQ(blob_size(bytes), compressed_payload_bytes(c)) << arch;
    }
  }
}

TEST(Serialize, DenseBlobSizeMatchesPayload) {
  const ModelGraph m = gen_fixture("toy-residual", 42).model;
  EXPECT_EQ(blob_size(to_bytes(m)), dense_payload_bytes(m));
}

TEST(Serialize, TruncatedBlobIsFormatError) {
  const std::string bytes = to_bytes(gen_fixture("toy-cnn", 42).model);
  for (std::size_t cut : {std::size_t{3}, std::size_t{8}, std::size_t{40}, bytes.size() - 1}) {
    EXPECT_THROW(model_from_bytes(std::string_view(bytes).substr(0, cut)), FormatError) << cut;
  }
}

TEST(Serialize, VersionMismatch) {
  std::string bytes = to_bytes(gen_fixture("toy-cnn", 42).model);
  bytes[4] = '2';
  try {
    model_from_bytes(bytes);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("format version mismatch"), std::string::npos);
  }
}

TEST(Serialize, WrongMagicAndCorruptHeader) {
  std::string bytes = to_bytes(gen_fixture("toy-cnn", 42).model);
  EXPECT_THROW(compressed_from_bytes(bytes), FormatError);
  std::string corrupt = bytes;
  corrupt[10] = '#';
  EXPECT_THROW(model_from_bytes(corrupt), FormatError);
}

TEST(Serialize, NonFiniteIsRejected) {
  ModelGraph m = gen_fixture("toy-cnn", 42).model;
  m.layers[0].weights->data[0] = std::numeric_limits<float>::infinity();
  EXPECT_THROW(to_bytes(m), ValidationError);
}

TEST(Serialize, CompressedMaskTamperIsDetected) {
  const ModelGraph m = gen_fixture("toy-cnn", 42).model;
  const CompressedModel c = compress_model(m, CompressionProfile::hck(1), AnalyticCost{}).model;
  std::string bytes = to_bytes(c);
  const std::uint32_t header_len = detail::get_u32(bytes, 5);
  const std::size_t blob_start = 9 + header_len;
  bytes[blob_start] = static_cast<char>(bytes[blob_start] ^ 1);  // first mask byte
  EXPECT_THROW(compressed_from_bytes(bytes), FormatError);
}

TEST(Serialize, MissingFileIsIoError) {
  EXPECT_THROW(load_model(temp_path("does_not_exist.upaq")), IoError);
}

TEST(ActivationIo, RoundTrip) {
  const Fixture f = gen_fixture("toy-1x1", 9);
  const auto path = temp_path("acts.bin");
  write_activations(path, f.inputs);
  const auto back = read_activations(path);
  ASSERT_EQ(back.size(), f.inputs.size());
  for (std::size_t k = 0; k < back.size(); ++k) EXPECT_EQ(back[k].data, f.inputs[k].data);
  std::filesystem::remove(path);
  std::filesystem::remove(sidecar_path(path));
}

}  // namespace
}  // namespace upaq
