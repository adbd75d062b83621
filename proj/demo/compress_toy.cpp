//
// Copyright 2026 The upaq Authors.
// SPDX-License-Identifier: Apache-2.0
//

// Compresses the toy CNN with both profiles and prints what each one did.

#include <cstdio>

#include "upaq/upaq.hpp"

int main() {
  const upaq::Fixture fx = upaq::gen_fixture("toy-cnn", 42);
  const upaq::AnalyticCost cost;

  for (const auto& profile : {upaq::CompressionProfile::hck(7), upaq::CompressionProfile::lck(7)}) {
    const upaq::CompressionResult r = upaq::compress_model(fx.model, profile, cost);
    const upaq::FidelityReport f = upaq::evaluate_fidelity(fx.model, r.model, fx.inputs);

    std::printf("%s: ratio %.3f (%zu -> %zu bytes)\n", profile.name.c_str(), r.ratio,
                r.dense_bytes, r.compressed_bytes);
    for (const auto& d : r.decisions) {
      std::printf("  group %s (+%zu leaves): %s n=%zu, %d-bit, %.2f dB\n", d.group.root_id.c_str(),
                  d.group.leaf_ids.size(), std::string(upaq::to_string(d.pattern.kind)).c_str(),
                  d.pattern.n, d.bits, d.mean_sqnr_db);
    }
    std::printf("  rel err %.4g, top-1 agreement %.3f, cosine %.6f\n", f.mean_rel_err,
                f.top1_agreement, f.cosine_sim);
  }
  return 0;
}
