#include "cretok/objective.hpp"

#include <cmath>

#include "cretok/error.hpp"
#include "cretok/losses.hpp"

namespace cretok::optim {

using corpus::Order;
using corpus::PromptTemplate;
using corpus::TextPair;
using encoders::TokenEmbedding;

std::string_view to_string(LossEmbedding e) {
  return e == LossEmbedding::kConcatenated ? "concatenated" : "per-backend-mean";
}

LossEmbedding parse_loss_embedding(std::string_view text) {
  if (text == "concatenated") return LossEmbedding::kConcatenated;
  if (text == "per-backend-mean") return LossEmbedding::kPerBackendMean;
  throw Error(ErrorCode::kInvalidArgument, "unknown loss embedding '" + std::string(text) + "'");
}

Objective::Objective(const encoders::EncoderSet& encoders, const corpus::TemplatePool& templates,
                     ObjectiveOptions options)
    : encoders_(encoders), templates_(templates), options_(options), backends_(encoders.trainable()) {
  if (backends_.empty()) throw Error(ErrorCode::kInvalidArgument, "objective needs at least one trainable encoder");
  set_theta(options.theta);
}

void Objective::set_theta(double theta) {
  if (!(theta >= 0.0 && theta <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "theta must lie in [0, 1]");
  options_.theta = theta;
}

Objective::Embedded Objective::embed(std::string_view prompt, const TokenEmbedding* token) const {
  Embedded e;
  for (const auto* b : backends_) {
    auto pooled = encoders::pooled_embed(*b, prompt, token, encoders_.seed_word());
    e.concatenated.insert(e.concatenated.end(), pooled.begin(), pooled.end());
    e.pooled.push_back(std::move(pooled));
  }
  return e;
}

const Objective::Embedded& Objective::restrictive_embedding(const std::string& prompt) const {
  std::lock_guard lock(cache_mutex_);
  auto it = restrictive_cache_.find(prompt);
  if (it == restrictive_cache_.end()) it = restrictive_cache_.emplace(prompt, embed(prompt, nullptr)).first;
  return it->second;
}

double Objective::cosine_and_grad(const Embedded& r, const Embedded& a,
                                  std::vector<std::vector<double>>* grad_a) const {
  if (options_.embedding == LossEmbedding::kConcatenated) {
    const double c = cosine_sim(a.concatenated, r.concatenated);
    if (grad_a != nullptr) {
      const auto g = cosine_grad(a.concatenated, r.concatenated);
      grad_a->clear();
      std::size_t off = 0;
      for (const auto& p : a.pooled) {
        grad_a->emplace_back(g.begin() + static_cast<std::ptrdiff_t>(off),
                             g.begin() + static_cast<std::ptrdiff_t>(off + p.size()));
        off += p.size();
      }
    }
    return c;
  }
  const double inv_b = 1.0 / static_cast<double>(a.pooled.size());
  double c = 0.0;
  if (grad_a != nullptr) grad_a->clear();
  for (std::size_t i = 0; i < a.pooled.size(); ++i) {
    c += cosine_sim(a.pooled[i], r.pooled[i]) * inv_b;
    if (grad_a != nullptr) {
      auto g = cosine_grad(a.pooled[i], r.pooled[i]);
      for (double& x : g) x *= inv_b;
      grad_a->push_back(std::move(g));
    }
  }
  return c;
}

void Objective::backprop(std::string_view adaptive_prompt, const TokenEmbedding& token,
                         const std::vector<std::vector<double>>& upstream, LossEval& out) const {
  if (out.grad.empty()) {
    for (const auto& v : token.vectors) out.grad.emplace_back(v.values.size(), 0.0);
  }
  for (std::size_t i = 0; i < backends_.size(); ++i) {
    const auto* b = backends_[i];
    std::size_t slot = token.vectors.size();
    for (std::size_t k = 0; k < token.vectors.size(); ++k)
      if (token.vectors[k].backend == b->info().name) slot = k;
    if (slot == token.vectors.size()) continue;  // marker substituted; no trainable vector here
    const auto g = b->pooled_vjp(adaptive_prompt, token.vectors[slot].values, upstream[i]);
    for (std::size_t j = 0; j < g.size(); ++j) out.grad[slot][j] += g[j];
  }
}

LossEval Objective::pair_loss(const TextPair& pair, const TokenEmbedding& token, const PromptTemplate* adaptive,
                              bool with_grad) const {
  const PromptTemplate* tmpl[] = {adaptive};
  return iteration_loss(std::span(&pair, 1), token, adaptive ? std::span(tmpl) : std::span<const PromptTemplate* const>{},
                        with_grad);
}

LossEval Objective::iteration_loss(std::span<const TextPair> pairs, const TokenEmbedding& token,
                                   std::span<const PromptTemplate* const> adaptive, bool with_grad) const {
  if (pairs.empty()) throw Error(ErrorCode::kInvalidArgument, "iteration loss over an empty pair list");
  if (!adaptive.empty() && adaptive.size() != pairs.size())
    throw Error(ErrorCode::kInvalidArgument, "one adaptive template per pair expected");
  const PromptTemplate& fallback = *templates_.active_adaptive().front();
  const PromptTemplate& restrictive = templates_.restrictive();
  const double theta = options_.theta;
  const double inv_n = 1.0 / static_cast<double>(pairs.size());

  // The token is fixed within an iteration, so each adaptive prompt is
  // embedded once; per-pair upstream gradients are summed before the VJP,
  // which equals accumulating n separate backward passes.
  struct AdaptiveTerm {
    std::string prompt;
    Embedded embedded;
    std::vector<std::vector<double>> upstream;
  };
  std::vector<AdaptiveTerm> terms;
  auto term_for = [&](const PromptTemplate& t) -> AdaptiveTerm& {
    std::string prompt = corpus::render_adaptive(t, token.marker);
    for (auto& term : terms)
      if (term.prompt == prompt) return term;
    AdaptiveTerm term;
    term.embedded = embed(prompt, &token);
    for (const auto& p : term.embedded.pooled) term.upstream.emplace_back(p.size(), 0.0);
    term.prompt = std::move(prompt);
    terms.push_back(std::move(term));
    return terms.back();
  };

  LossEval out;
  double loss_sum = 0.0;
  double cos_sum = 0.0;
  std::vector<std::vector<double>> grad_a;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    AdaptiveTerm& term = term_for(adaptive.empty() ? fallback : *adaptive[i]);
    for (Order order : {Order::kForward, Order::kReversed}) {
      const Embedded& r = restrictive_embedding(corpus::render_restrictive(pairs[i], order, restrictive));
      const double c = cosine_and_grad(r, term.embedded, with_grad ? &grad_a : nullptr);
      loss_sum += 1.0 - std::min(c, theta);
      cos_sum += c;
      // min(c, theta) is flat once c reaches theta.
      if (with_grad && c < theta) {
        const double w = -0.5 * inv_n;
        for (std::size_t b = 0; b < grad_a.size(); ++b)
          for (std::size_t j = 0; j < grad_a[b].size(); ++j) term.upstream[b][j] += w * grad_a[b][j];
      }
    }
  }
  out.loss = 0.5 * loss_sum * inv_n;
  out.mean_cos = 0.5 * cos_sum * inv_n;
  if (with_grad) {
    for (const auto& term : terms) backprop(term.prompt, token, term.upstream, out);
    if (out.grad.empty())
      for (const auto& v : token.vectors) out.grad.emplace_back(v.values.size(), 0.0);
  }
  return out;
}

double Objective::prompt_cosine(std::string_view restrictive, std::string_view adaptive,
                                const TokenEmbedding& token) const {
  const Embedded r = embed(restrictive, nullptr);
  const Embedded a = embed(adaptive, &token);
  return cosine_and_grad(r, a, nullptr);
}

double Objective::mean_cosine(std::span<const TextPair> pairs, const TokenEmbedding& token) const {
  return iteration_loss(pairs, token, {}, false).mean_cos;
}

}  // namespace cretok::optim
