#include "cretok/trainer.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "cretok/checkpoint.hpp"
#include "cretok/error.hpp"
#include "cretok/io.hpp"

namespace cretok::optim {

namespace fs = std::filesystem;
using corpus::TextPair;
using encoders::TokenEmbedding;

void TrainingConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::kInvalidArgument, m); };
  if (!(theta >= 0.0 && theta <= 1.0)) fail("theta must lie in [0, 1]");
  if (n < 1) fail("n must be at least 1");
  if (steps < 1) fail("steps must be at least 1");
  if (!(lr0 > 0.0)) fail("lr0 must be positive");
  if (schedule != "cosine" && schedule != "constant") fail("schedule must be 'cosine' or 'constant'");
  if (snapshot_every < 1) fail("snapshot_every must be at least 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) fail("Adam betas must lie in [0, 1)");
  if (!(epsilon > 0.0)) fail("epsilon must be positive");
  if (max_norm < 0.0) fail("max_norm must be non-negative");
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(ErrorCode::kInvalidArgument, "expected a boolean, got '" + v + "'");
}

}  // namespace

TrainingConfig parse_training_config(std::string_view text) {
  TrainingConfig c;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::kMalformedRecord, "config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    try {
      if (key == "theta") c.theta = std::stod(value);
      else if (key == "n") c.n = std::stoul(value);
      else if (key == "steps") c.steps = std::stoul(value);
      else if (key == "lr0") c.lr0 = std::stod(value);
      else if (key == "schedule") c.schedule = value;
      else if (key == "seed") c.seed = std::stoull(value);
      else if (key == "snapshot_every") c.snapshot_every = std::stoul(value);
      else if (key == "beta1") c.beta1 = std::stod(value);
      else if (key == "beta2") c.beta2 = std::stod(value);
      else if (key == "epsilon") c.epsilon = std::stod(value);
      else if (key == "max_norm") c.max_norm = std::stod(value);
      else if (key == "with_replacement") c.with_replacement = parse_bool(value);
      else if (key == "use_paraphrases") c.use_paraphrases = parse_bool(value);
      else if (key == "embedding") c.embedding = parse_loss_embedding(value);
      else if (key == "probe_pairs") c.probe_pairs = std::stoul(value);
      else throw Error(ErrorCode::kInvalidArgument, "unknown config key '" + key + "'");
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::kMalformedRecord,
                  "config line " + std::to_string(line_no) + ": bad value for '" + key + "'");
    }
  }
  c.validate();
  return c;
}

TrainingConfig load_training_config(const fs::path& path) { return parse_training_config(io::read_file(path)); }

std::string to_config_text(const TrainingConfig& c) {
  std::map<std::string, std::string> kv{
      {"theta", fmt::format("{}", c.theta)},
      {"n", std::to_string(c.n)},
      {"steps", std::to_string(c.steps)},
      {"lr0", fmt::format("{}", c.lr0)},
      {"schedule", c.schedule},
      {"seed", std::to_string(c.seed)},
      {"snapshot_every", std::to_string(c.snapshot_every)},
      {"beta1", fmt::format("{}", c.beta1)},
      {"beta2", fmt::format("{}", c.beta2)},
      {"epsilon", fmt::format("{}", c.epsilon)},
      {"max_norm", fmt::format("{}", c.max_norm)},
      {"with_replacement", c.with_replacement ? "true" : "false"},
      {"use_paraphrases", c.use_paraphrases ? "true" : "false"},
      {"embedding", std::string(to_string(c.embedding))},
      {"probe_pairs", std::to_string(c.probe_pairs)},
  };
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

double lr_at(std::size_t step, const TrainingConfig& config) {
  if (step > config.steps)
    throw Error(ErrorCode::kOutOfRange,
                "step " + std::to_string(step) + " outside [0, " + std::to_string(config.steps) + "]");
  if (config.schedule == "constant") return config.lr0;
  const double progress = static_cast<double>(step) / static_cast<double>(config.steps);
  return config.lr0 * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

namespace {

std::string encode_f64(const std::vector<double>& v) {
  std::vector<std::uint8_t> bytes(v.size() * 8);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(v[i]);
    for (int b = 0; b < 8; ++b) bytes[8 * i + b] = static_cast<std::uint8_t>(bits >> (8 * b));
  }
  return io::base64_encode(bytes);
}

std::vector<double> decode_f64(const std::string& s) {
  const auto bytes = io::base64_decode(s);
  std::vector<double> v(bytes.size() / 8);
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[8 * i + b]) << (8 * b);
    v[i] = std::bit_cast<double>(bits);
  }
  return v;
}

}  // namespace

std::string serialize_state(const TrainingState& s) {
  nlohmann::json doc;
  doc["step"] = s.step;
  doc["marker"] = s.token.marker;
  doc["rng"] = s.rng_state;
  doc["adam_t"] = s.adam.t;
  doc["loss_history"] = encode_f64(s.loss_history);
  doc["cos_history"] = encode_f64(s.cos_history);
  doc["vectors"] = nlohmann::json::array();
  for (std::size_t i = 0; i < s.token.vectors.size(); ++i) {
    doc["vectors"].push_back({{"backend", s.token.vectors[i].backend},
                              {"values", encode_f64(s.token.vectors[i].values)},
                              {"m", encode_f64(s.adam.m.at(i))},
                              {"v", encode_f64(s.adam.v.at(i))}});
  }
  return doc.dump(2) + "\n";
}

TrainingState parse_state(std::string_view text) {
  TrainingState s;
  try {
    const auto doc = nlohmann::json::parse(text);
    s.step = doc.at("step").get<std::int64_t>();
    s.token.marker = doc.at("marker").get<std::string>();
    s.token.step = s.step;
    s.rng_state = doc.at("rng").get<std::string>();
    s.adam.t = doc.at("adam_t").get<std::int64_t>();
    s.loss_history = decode_f64(doc.at("loss_history").get<std::string>());
    s.cos_history = decode_f64(doc.at("cos_history").get<std::string>());
    for (const auto& v : doc.at("vectors")) {
      s.token.vectors.push_back({v.at("backend").get<std::string>(), decode_f64(v.at("values").get<std::string>())});
      s.adam.m.push_back(decode_f64(v.at("m").get<std::string>()));
      s.adam.v.push_back(decode_f64(v.at("v").get<std::string>()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCheckpointFormat, std::string("malformed training state: ") + e.what());
  }
  return s;
}

Trainer::Trainer(const encoders::EncoderSet& encoders, const corpus::TemplatePool& templates,
                 std::vector<TextPair> dataset, TrainingConfig config)
    : encoders_(encoders),
      templates_(templates),
      dataset_(std::move(dataset)),
      config_(std::move(config)),
      objective_(encoders, templates, ObjectiveOptions{config_.theta, config_.embedding}) {
  config_.validate();
  if (dataset_.empty()) throw Error(ErrorCode::kNotEnoughPairs, "training dataset is empty");
  if (!config_.with_replacement && config_.n > dataset_.size()) {
    throw Error(ErrorCode::kNotEnoughPairs, "n = " + std::to_string(config_.n) + " exceeds the " +
                                                std::to_string(dataset_.size()) + " training pairs");
  }
}

TrainingState Trainer::initial_state(TokenEmbedding token) const {
  for (const auto* b : encoders_.trainable()) {
    if (token.vector_for(b->info().name).empty())
      throw Error(ErrorCode::kInvalidArgument, "token has no vector for trainable backend '" + b->info().name + "'");
  }
  TrainingState s;
  s.token = std::move(token);
  s.token.step = 0;
  for (const auto& v : s.token.vectors) {
    s.adam.m.emplace_back(v.values.size(), 0.0);
    s.adam.v.emplace_back(v.values.size(), 0.0);
  }
  s.rng_state = Rng(config_.seed).save();
  return s;
}

void Trainer::update(TrainingState& s, const LossEval& eval, double lr) const {
  auto& a = s.adam;
  ++a.t;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(a.t));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(a.t));
  for (std::size_t k = 0; k < s.token.vectors.size(); ++k) {
    auto& x = s.token.vectors[k].values;
    const auto& g = eval.grad[k];
    for (std::size_t j = 0; j < x.size(); ++j) {
      a.m[k][j] = config_.beta1 * a.m[k][j] + (1.0 - config_.beta1) * g[j];
      a.v[k][j] = config_.beta2 * a.v[k][j] + (1.0 - config_.beta2) * g[j] * g[j];
      const double mhat = a.m[k][j] / bc1;
      const double vhat = a.v[k][j] / bc2;
      x[j] -= lr * mhat / (std::sqrt(vhat) + config_.epsilon);
    }
    if (config_.max_norm > 0.0) {
      double sq = 0.0;
      for (double v : x) sq += v * v;
      const double norm = std::sqrt(sq);
      if (norm > config_.max_norm)
        for (double& v : x) v *= config_.max_norm / norm;
    }
  }
}

namespace {

std::string log_row(std::int64_t step, double lr, double loss, double cos) {
  return fmt::format("{},{:.9g},{:.12g},{:.12g}\n", step, lr, loss, cos);
}

constexpr std::string_view kLogHeader = "step,lr,loss,mean_cos\n";

}  // namespace

TrainResult Trainer::run(TrainingState state, const TrainOptions& options) const {
  TrainResult result;
  const bool persist = !options.out_dir.empty();
  const auto active = templates_.active_adaptive();
  std::vector<TextPair> probe = options.probe;
  if (probe.size() > config_.probe_pairs) probe.resize(config_.probe_pairs);

  std::ofstream log;
  std::ofstream snap_index;
  if (persist) {
    fs::create_directories(options.out_dir / "snapshots");
    // Rebuild the log from the histories so resumed runs match fresh ones.
    std::string text(kLogHeader);
    for (std::size_t i = 0; i < state.loss_history.size(); ++i) {
      text += log_row(static_cast<std::int64_t>(i + 1), lr_at(i, config_), state.loss_history[i],
                      state.cos_history[i]);
    }
    io::write_file_atomic(options.out_dir / "train_log.csv", text);
    log.open(options.out_dir / "train_log.csv", std::ios::app | std::ios::binary);
    if (state.step == 0) io::write_file_atomic(options.out_dir / "snapshots.csv", "step,checkpoint,probe_mean_cos\n");
    snap_index.open(options.out_dir / "snapshots.csv", std::ios::app | std::ios::binary);
  }

  auto snapshot = [&](const TrainingState& s) {
    Snapshot snap;
    snap.step = s.step;
    snap.probe_mean_cos = probe.empty() ? std::nan("") : objective_.mean_cosine(probe, s.token);
    if (persist) {
      snap.path = options.out_dir / "snapshots" / fmt::format("step_{:06d}.json", s.step);
      checkpoint::save(snap.path, s.token);
      io::write_file_atomic(options.out_dir / "state.json", serialize_state(s));
      snap_index << fmt::format("{},{},{:.12g}\n", s.step, fs::relative(snap.path, options.out_dir).string(),
                                snap.probe_mean_cos);
      snap_index.flush();
    }
    result.snapshots.push_back(snap);
  };

  if (state.step == 0) snapshot(state);

  Rng rng(0);
  rng.restore(state.rng_state);
  std::vector<const corpus::PromptTemplate*> chosen;
  for (auto k = static_cast<std::size_t>(state.step); k < config_.steps; ++k) {
    const double lr = lr_at(k, config_);
    const auto batch = corpus::sample_pairs(dataset_, config_.n, rng, config_.with_replacement);
    chosen.assign(batch.size(), active.front());
    if (active.size() > 1)
      for (auto& t : chosen) t = active[rng.index(active.size())];
    const LossEval eval = objective_.iteration_loss(batch, state.token, chosen, true);

    bool finite = std::isfinite(eval.loss) && std::isfinite(eval.mean_cos);
    for (const auto& g : eval.grad)
      for (double x : g) finite = finite && std::isfinite(x);
    if (!finite) {
      state.rng_state = rng.save();
      snapshot(state);
      throw Error(ErrorCode::kNonFiniteLoss,
                  "non-finite loss or gradient at step " + std::to_string(k + 1) +
                      "; last good token saved at step " + std::to_string(state.step));
    }

    update(state, eval, lr);
    state.step = static_cast<std::int64_t>(k + 1);
    state.token.step = state.step;
    state.loss_history.push_back(eval.loss);
    state.cos_history.push_back(eval.mean_cos);
    if (!state.token.all_finite()) {
      throw Error(ErrorCode::kNonFiniteLoss, "token became non-finite at step " + std::to_string(state.step));
    }
    if (persist) log << log_row(state.step, lr, eval.loss, eval.mean_cos);
    if (options.on_step) options.on_step(state.step, lr, eval.loss, eval.mean_cos);

    if (static_cast<std::size_t>(state.step) % config_.snapshot_every == 0 ||
        static_cast<std::size_t>(state.step) == config_.steps) {
      state.rng_state = rng.save();
      if (persist) log.flush();
      snapshot(state);
    }
  }
  state.rng_state = rng.save();
  if (persist) {
    result.final_checkpoint = options.out_dir / "checkpoint.json";
    checkpoint::save(result.final_checkpoint, state.token);
  }
  result.state = std::move(state);
  return result;
}

TrainResult Trainer::resume(const TrainOptions& options) const {
  if (options.out_dir.empty()) throw Error(ErrorCode::kInvalidArgument, "resume needs an output directory");
  TrainingState state = parse_state(io::read_file(options.out_dir / "state.json"));
  // Drop snapshot index rows past the resume point.
  const auto index = io::read_csv(options.out_dir / "snapshots.csv");
  std::string text = "step,checkpoint,probe_mean_cos\n";
  for (const auto& row : index.rows)
    if (std::stoll(row[0]) <= state.step) text += io::csv_join(row) + "\n";
  io::write_file_atomic(options.out_dir / "snapshots.csv", text);
  return run(std::move(state), options);
}

TrainResult train(std::span<const TextPair> dataset, const TrainingConfig& config, encoders::EncoderSet& encoders,
                  const corpus::TemplatePool& templates, const TrainOptions& options,
                  const encoders::TokenInit& init, std::string_view marker) {
  TokenEmbedding token = encoders.inject(marker, init);
  Trainer trainer(encoders, templates, {dataset.begin(), dataset.end()}, config);
  return trainer.run(trainer.initial_state(std::move(token)), options);
}

}  // namespace cretok::optim
