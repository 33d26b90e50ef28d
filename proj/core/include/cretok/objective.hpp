#pragma once

#include <map>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "cretok/corpus.hpp"
#include "cretok/encoders.hpp"

namespace cretok::optim {

/// Which embedding the cosine is taken on.
enum class LossEmbedding {
  kConcatenated,    // cosine of the concatenated pooled vectors (c_vec)
  kPerBackendMean,  // mean over backends of per-backend cosines
};

std::string_view to_string(LossEmbedding e);
LossEmbedding parse_loss_embedding(std::string_view text);

struct ObjectiveOptions {
  double theta = 0.5;
  LossEmbedding embedding = LossEmbedding::kConcatenated;
};

/// Loss value, mean unclamped cosine, and gradient with respect to each
/// vector of the token (same order as TokenEmbedding::vectors).
struct LossEval {
  double loss = 0.0;
  double mean_cos = 0.0;
  std::vector<std::vector<double>> grad;
};

/// The CreTok objective over the trainable backends of an encoder set.
///
/// Restrictive prompts never see the marker, so their embeddings are cached.
class Objective {
 public:
  Objective(const encoders::EncoderSet& encoders, const corpus::TemplatePool& templates,
            ObjectiveOptions options);

  const ObjectiveOptions& options() const { return options_; }
  void set_theta(double theta);

  /// Mean of the clamped loss over the forward and reversed restrictive
  /// prompts against one adaptive prompt (the pool's first active template
  /// when `adaptive` is null).
  LossEval pair_loss(const corpus::TextPair& pair, const encoders::TokenEmbedding& token,
                     const corpus::PromptTemplate* adaptive = nullptr, bool with_grad = true) const;

  /// Mean of pair losses. `adaptive[i]` selects the template for pair i
  /// (empty = first active template for all).
  LossEval iteration_loss(std::span<const corpus::TextPair> pairs, const encoders::TokenEmbedding& token,
                          std::span<const corpus::PromptTemplate* const> adaptive = {},
                          bool with_grad = true) const;

  /// Mean unclamped cosine over both orderings of every pair.
  double mean_cosine(std::span<const corpus::TextPair> pairs, const encoders::TokenEmbedding& token) const;

  /// Unclamped cosine for one restrictive/adaptive prompt pair.
  double prompt_cosine(std::string_view restrictive, std::string_view adaptive,
                       const encoders::TokenEmbedding& token) const;

 private:
  struct Embedded {
    std::vector<std::vector<double>> pooled;  // per trainable backend
    std::vector<double> concatenated;
  };
  Embedded embed(std::string_view prompt, const encoders::TokenEmbedding* token) const;
  const Embedded& restrictive_embedding(const std::string& prompt) const;

  /// Unclamped cosine and its gradient with respect to each backend's
  /// adaptive pooled vector.
  double cosine_and_grad(const Embedded& r, const Embedded& a,
                         std::vector<std::vector<double>>* grad_a) const;

  /// Accumulates the token gradient through each backend's VJP.
  void backprop(std::string_view adaptive_prompt, const encoders::TokenEmbedding& token,
                const std::vector<std::vector<double>>& upstream, LossEval& out) const;

  const encoders::EncoderSet& encoders_;
  const corpus::TemplatePool& templates_;
  ObjectiveOptions options_;
  std::vector<const encoders::EncoderBackend*> backends_;
  mutable std::mutex cache_mutex_;
  mutable std::map<std::string, Embedded, std::less<>> restrictive_cache_;
};

}  // namespace cretok::optim
