//
// Copyright 2026 The upaq Authors.
// SPDX-License-Identifier: Apache-2.0
//

// upaq command line: gen-fixture, compress, run, evaluate, inspect.
// Exit codes: 0 success, 1 I/O or format error, 2 validation error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "upaq/upaq.hpp"

namespace {

using nlohmann::json;

enum ExitCode { kOk = 0, kIoError = 1, kValidationError = 2 };

bool is_compressed_file(const std::filesystem::path& path) {
  const std::string bytes = upaq::read_file(path);
  return bytes.compare(0, upaq::kCompressedMagic.size(), upaq::kCompressedMagic) == 0;
}

void emit(const json& doc, const std::string& path) {
  if (path.empty()) {
    std::cout << doc.dump(2) << "\n";
  } else {
    upaq::write_file(path, doc.dump(2) + "\n");
  }
}

struct GenFixtureArgs {
  std::string arch = "toy-cnn";
  std::uint64_t seed = 42;
  std::string out;
  std::string inputs;
};

int gen_fixture(const GenFixtureArgs& a) {
  const upaq::Fixture f = upaq::gen_fixture(a.arch, a.seed);
  upaq::save_model(f.model, a.out);
  if (!a.inputs.empty()) upaq::write_activations(a.inputs, f.inputs);
  std::cout << json{{"model", a.out},
                    {"layers", f.model.layers.size()},
                    {"checksum", upaq::checksum(f.model)},
                    {"inputs", a.inputs.empty() ? json(nullptr) : json(a.inputs)}}
                   .dump()
            << "\n";
  return kOk;
}

struct CompressArgs {
  std::string profile = "hck";
  std::size_t patterns = 16;
  std::uint64_t seed = 0;
  std::string cost = "analytic";
  bool exhaustive = false;
  unsigned workers = 1;
  std::vector<int> bits;
  std::optional<std::size_t> nonzero;
  std::optional<double> alpha, beta, gamma;
  std::string probe_inputs;
  std::string in;
  std::string out;
  std::string report;
};

int compress(const CompressArgs& a) {
  upaq::CompressionProfile profile =
      a.profile == "lck" ? upaq::CompressionProfile::lck(a.seed) : upaq::CompressionProfile::hck(a.seed);
  profile.candidates = a.patterns;
  profile.exhaustive = a.exhaustive;
  if (!a.bits.empty()) {
    profile.quant_bits = a.bits;
    profile.name = "custom";
  }
  if (a.nonzero) {
    profile.n_nonzero = {{3, *a.nonzero}};
    profile.name = "custom";
  }
  if (a.alpha) profile.weights.alpha = *a.alpha;
  if (a.beta) profile.weights.beta = *a.beta;
  if (a.gamma) profile.weights.gamma = *a.gamma;

  const upaq::ModelGraph model = upaq::load_model(a.in);
  std::unique_ptr<upaq::CostModel> cost;
  if (a.cost == "measured") {
    std::vector<upaq::Activation> probes;
    if (!a.probe_inputs.empty()) {
      probes = upaq::read_activations(a.probe_inputs);
      if (probes.size() > 4) probes.resize(4);
    } else {
      upaq::Rng rng(upaq::stream_seed(a.seed, "probes"));
      for (int k = 0; k < 4; ++k) {
        upaq::Activation x(model.input_shape);
        for (float& v : x.data) v = rng.uniform(-1.0f, 1.0f);
        probes.push_back(std::move(x));
      }
    }
    cost = std::make_unique<upaq::MeasuredCost>(std::move(probes));
  } else {
    cost = std::make_unique<upaq::AnalyticCost>();
  }

  const upaq::CompressionResult result =
      upaq::compress_model(model, profile, *cost, {a.workers});
  upaq::save_compressed(result.model, a.out);
  json report = upaq::to_json(result, profile, cost->name());
  report["output"] = a.out;
  emit(report, a.report);
  return kOk;
}

struct RunArgs {
  std::string model;
  std::string inputs;
  std::string out;
  bool sparse = false;
};

int run(const RunArgs& a) {
  const std::vector<upaq::Activation> inputs = upaq::read_activations(a.inputs);
  std::vector<upaq::Activation> outputs;
  if (is_compressed_file(a.model)) {
    const upaq::ModelGraph dense = upaq::densify(upaq::load_compressed(a.model));
    for (const auto& x : inputs) {
      outputs.push_back(a.sparse ? upaq::forward_sparse(dense, x) : upaq::forward(dense, x));
    }
  } else {
    const upaq::ModelGraph model = upaq::load_model(a.model);
    for (const auto& x : inputs) {
      outputs.push_back(a.sparse ? upaq::forward_sparse(model, x) : upaq::forward(model, x));
    }
  }
  upaq::write_activations(a.out, outputs);
  std::cout << json{{"outputs", a.out}, {"count", outputs.size()}}.dump() << "\n";
  return kOk;
}

struct EvaluateArgs {
  std::string base;
  std::string compressed;
  std::string inputs;
  std::string out;
  std::string dump_prefix;
};

int evaluate(const EvaluateArgs& a) {
  const upaq::ModelGraph base = upaq::load_model(a.base);
  const upaq::CompressedModel compressed = upaq::load_compressed(a.compressed);
  const std::vector<upaq::Activation> inputs = upaq::read_activations(a.inputs);
  const upaq::FidelityRun run = upaq::run_fidelity(base, compressed, inputs, upaq::AnalyticCost{});
  if (!a.dump_prefix.empty()) {
    upaq::write_activations(a.dump_prefix + ".base.bin", run.base_outputs);
    upaq::write_activations(a.dump_prefix + ".compressed.bin", run.compressed_outputs);
  }
  emit(upaq::to_json(run.report), a.out);
  return kOk;
}

struct InspectArgs {
  std::string model;
  bool groups = false;
};

int inspect(const InspectArgs& a) {
  if (is_compressed_file(a.model)) {
    const upaq::CompressedModel m = upaq::load_compressed(a.model);
    if (a.groups) {
      for (const auto& g : m.groups) {
        std::cout << json{{"root", g.root_id}, {"leaves", g.leaf_ids}}.dump() << "\n";
      }
      return kOk;
    }
    json layers = json::array();
    for (const auto& l : m.layers) {
      layers.push_back({{"id", l.spec.id},
                        {"kind", std::string(upaq::to_string(l.spec.kind))},
                        {"packed", l.packed.has_value()},
                        {"bits", l.packed ? json(l.packed->bits) : json(nullptr)}});
    }
    json groups = json::array();
    for (const auto& g : m.groups) {
      groups.push_back({{"root", g.root_id},
                        {"leaves", g.leaf_ids},
                        {"bits", g.bitwidth},
                        {"pattern", upaq::to_json(g.pattern)}});
    }
    std::cout << json{{"format", "UPQC1"},
                      {"name", m.name},
                      {"profile", m.profile.name},
                      {"layers", layers},
                      {"groups", groups},
                      {"payload_bytes", upaq::compressed_payload_bytes(m)},
                      {"computational_cost", upaq::to_json(upaq::computational_cost(m))}}
                     .dump(2)
              << "\n";
    return kOk;
  }

  const upaq::ModelGraph m = upaq::load_model(a.model);
  if (a.groups) {
    for (const auto& g : upaq::find_root_groups(m)) {
      std::cout << upaq::to_json(g).dump() << "\n";
    }
    return kOk;
  }
  json layers = json::array();
  for (const auto& l : m.layers) {
    json j{{"id", l.id}, {"kind", std::string(upaq::to_string(l.kind))}, {"inputs", l.inputs}};
    if (l.weights) j["shape"] = {l.weights->out_ch, l.weights->in_ch, l.weights->kh, l.weights->kw};
    layers.push_back(std::move(j));
  }
  std::cout << json{{"format", "UPAQ1"},
                    {"name", m.name},
                    {"input_shape", {m.input_shape.channels, m.input_shape.height, m.input_shape.width}},
                    {"layers", layers},
                    {"payload_bytes", upaq::dense_payload_bytes(m)},
                    {"checksum", upaq::checksum(m)},
                    {"computational_cost", upaq::to_json(upaq::computational_cost(m))}}
                   .dump(2)
            << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"upaq: pattern pruning and mixed-precision quantization for conv nets"};
  app.require_subcommand(1);

  GenFixtureArgs gen_args;
  auto* gen = app.add_subcommand("gen-fixture", "Write a seeded toy model (and its inputs)");
  gen->add_option("--arch", gen_args.arch, "toy-cnn | toy-residual | toy-1x1")
      ->check(CLI::IsMember(upaq::fixture_archs()));
  gen->add_option("--seed", gen_args.seed, "Random seed");
  gen->add_option("-o,--out", gen_args.out, "Output .upaq path")->required();
  gen->add_option("--inputs", gen_args.inputs, "Also write the input batch here");

  CompressArgs comp_args;
  auto* comp = app.add_subcommand("compress", "Compress a dense model");
  comp->add_option("--profile", comp_args.profile, "hck | lck")
      ->check(CLI::IsMember({"hck", "lck"}));
  comp->add_option("--patterns", comp_args.patterns, "Sampled patterns per group");
  comp->add_option("--seed", comp_args.seed, "Random seed");
  comp->add_option("--cost", comp_args.cost, "analytic | measured")
      ->check(CLI::IsMember({"analytic", "measured"}));
  comp->add_flag("--exhaustive", comp_args.exhaustive, "Score every enumerable pattern");
  comp->add_option("--workers", comp_args.workers, "Parallel group searches");
  comp->add_option("--bits", comp_args.bits, "Override quantization bitwidths")->delimiter(',');
  comp->add_option("--nonzero", comp_args.nonzero, "Override retained weights per 3x3 kernel");
  comp->add_option("--alpha", comp_args.alpha, "SQNR weight");
  comp->add_option("--beta", comp_args.beta, "Latency weight");
  comp->add_option("--gamma", comp_args.gamma, "Energy weight");
  comp->add_option("--probe-inputs", comp_args.probe_inputs, "Inputs timed by --cost measured");
  comp->add_option("input", comp_args.in, "Dense .upaq model")->required();
  comp->add_option("-o,--out", comp_args.out, "Output .upaqc path")->required();
  comp->add_option("--report", comp_args.report, "Write the JSON report here instead of stdout");

  RunArgs run_args;
  auto* run_cmd = app.add_subcommand("run", "Forward a batch of inputs");
  run_cmd->add_option("model", run_args.model, ".upaq or .upaqc model")->required();
  run_cmd->add_option("--inputs", run_args.inputs, "Input blob")->required();
  run_cmd->add_option("--out", run_args.out, "Output blob")->required();
  run_cmd->add_flag("--sparse", run_args.sparse, "Skip zero weights");

  EvaluateArgs eval_args;
  auto* eval = app.add_subcommand("evaluate", "Compare a compressed model with its base");
  eval->add_option("base", eval_args.base, "Dense .upaq model")->required();
  eval->add_option("compressed", eval_args.compressed, "Compressed .upaqc model")->required();
  eval->add_option("--inputs", eval_args.inputs, "Input blob")->required();
  eval->add_option("-o,--out", eval_args.out, "Write the JSON report here instead of stdout");
  eval->add_option("--dump-outputs", eval_args.dump_prefix,
                   "Write <prefix>.base.bin and <prefix>.compressed.bin");

  InspectArgs insp_args;
  auto* insp = app.add_subcommand("inspect", "Describe a model file");
  insp->add_option("model", insp_args.model, ".upaq or .upaqc model")->required();
  insp->add_flag("--groups", insp_args.groups, "Print root/leaf groups as JSON lines");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidationError;
  }

  try {
    if (gen->parsed()) return gen_fixture(gen_args);
    if (comp->parsed()) return compress(comp_args);
    if (run_cmd->parsed()) return run(run_args);
    if (eval->parsed()) return evaluate(eval_args);
    if (insp->parsed()) return inspect(insp_args);
  } catch (const upaq::IoError& e) {
    std::cerr << "upaq: I/O error: " << e.what() << "\n";
    return kIoError;
  } catch (const upaq::FormatError& e) {
    std::cerr << "upaq: format error: " << e.what() << "\n";
    return kIoError;
  } catch (const upaq::ValidationError& e) {
    std::cerr << "upaq: validation error: " << e.what() << "\n";
    return kValidationError;
  }
  return kOk;
}
