#include <iostream>

#include <fmt/format.h>

#include "common.hpp"
#include "cretok/checkpoint.hpp"
#include "cretok/corpus.hpp"
#include "cretok/generation.hpp"
#include "cretok/io.hpp"

namespace cretok::cli {

namespace fs = std::filesystem;

namespace {

struct GenerateArgs {
  std::string checkpoint;
  std::string backend;
  std::string pairs;
  std::string prompt;
  std::string templates;
  std::string template_id = "photo";
  std::string out;
  std::uint64_t seed = 0;
  std::size_t seeds_per_pair = 1;
  std::size_t count = 1;
  std::uint32_t width = 512;
  std::uint32_t height = 512;
  std::size_t workers = 1;
  std::string sampler = "{}";
};

int run_generate(const GenerateArgs& a) {
  if (!a.pairs.empty() && !a.prompt.empty()) throw UsageError("--pairs and --prompt are mutually exclusive");
  if (a.pairs.empty() && a.prompt.empty()) throw UsageError("give --pairs or --prompt");
  if (!a.pairs.empty() && a.count != 1) throw UsageError("--count applies to --prompt; use --seeds-per-pair with --pairs");
  nlohmann::json sampler;
  try {
    sampler = nlohmann::json::parse(a.sampler);
  } catch (const nlohmann::json::exception&) {
    throw UsageError("--sampler must be a JSON object");
  }
  if (!sampler.is_object()) throw UsageError("--sampler must be a JSON object");

  const fs::path backend_path = a.backend.empty() ? data_dir() / "backend_stub.json" : fs::path(a.backend);
  const auto backend = generation::load_backend_config(backend_path);

  generation::GenerationRequest request;
  request.seed = a.seed;
  request.count = a.count;
  request.size = {a.width, a.height};
  request.sampler = sampler;
  if (!a.checkpoint.empty()) {
    const std::string text = io::read_file(a.checkpoint);
    request.checkpoint = std::make_shared<encoders::TokenEmbedding>(checkpoint::parse(text));
    request.checkpoint_id = checkpoint::checkpoint_id(text);
  }

  const fs::path out(a.out);
  nlohmann::json cfg{{"backend", backend_path.string()},
                     {"backend_name", backend->descriptor().name},
                     {"third_encoder", std::string(generation::to_string(backend->descriptor().third_encoder_policy()))},
                     {"checkpoint_id", request.checkpoint_id},
                     {"width", a.width},
                     {"height", a.height},
                     {"sampler", sampler}};

  if (!a.prompt.empty()) {
    request.prompt = a.prompt;
    const auto rows = generation::render(request, *backend, out, "prompt");
    io::write_file_atomic(out / "manifest.csv", generation::serialize_manifest(rows));
    cfg["prompt"] = a.prompt;
    cfg["count"] = a.count;
    write_run_manifest(out, "generate", cfg, a.seed);
    std::cout << fmt::format("rendered {} image(s) into {}\n", rows.size(), out.string());
    return 0;
  }

  const auto pool = a.templates.empty() ? corpus::TemplatePool::defaults() : corpus::TemplatePool::load(a.templates);
  const auto& tmpl = pool.get(a.template_id);
  const auto dataset = corpus::load_cangjie(a.pairs);
  generation::BatchOptions options{a.seed, a.seeds_per_pair, a.workers};
  const auto result = generation::batch_render(dataset.pairs, tmpl, request, *backend, out, options);
  cfg["pairs"] = a.pairs;
  cfg["template"] = tmpl.body;
  cfg["seeds_per_pair"] = a.seeds_per_pair;
  write_run_manifest(out, "generate", cfg, a.seed);
  std::cout << fmt::format("rendered {} image(s), {} failure(s) into {}\n", result.rows.size(),
                           result.failures.size(), out.string());
  for (const auto& f : result.failures)
    std::cerr << fmt::format("failed ({}, {}) seed {}: {}\n", f.pair_first, f.pair_second, f.seed, f.reason);
  return result.failures.empty() ? 0 : 1;
}

}  // namespace

void add_generate(CLI::App& app, std::function<int()>& action) {
  auto a = std::make_shared<GenerateArgs>();
  auto* cmd = app.add_subcommand("generate", "Render images from prompts containing the learned token");
  cmd->add_option("--checkpoint", a->checkpoint, "token checkpoint JSON (omit to render through the seed word)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--backend", a->backend, "generation backend config (default: stub backend)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--pairs", a->pairs, "pairs CSV; one prompt per pair from --template")->check(CLI::ExistingFile);
  cmd->add_option("--prompt", a->prompt, "a single literal prompt");
  cmd->add_option("--templates", a->templates, "template pool JSON")->check(CLI::ExistingFile);
  cmd->add_option("--template", a->template_id, "template id used with --pairs");
  cmd->add_option("--out", a->out, "output directory")->required();
  cmd->add_option("--seed", a->seed, "first seed");
  cmd->add_option("--seeds-per-pair", a->seeds_per_pair, "images per pair")->check(CLI::PositiveNumber);
  cmd->add_option("--count", a->count, "images for --prompt")->check(CLI::PositiveNumber);
  cmd->add_option("--width", a->width, "image width")->check(CLI::PositiveNumber);
  cmd->add_option("--height", a->height, "image height")->check(CLI::PositiveNumber);
  cmd->add_option("--workers", a->workers, "concurrent renders")->check(CLI::PositiveNumber);
  cmd->add_option("--sampler", a->sampler, "backend sampler settings as a JSON object");
  cmd->callback([&action, a] { action = [a] { return run_generate(*a); }; });
}

}  // namespace cretok::cli
