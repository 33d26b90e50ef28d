#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cretok/rng.hpp"

namespace cretok::corpus {

inline constexpr std::string_view kDefaultMarker = "<CreTok>";

/// Unordered pair of concept words, stored canonically (first <= second).
struct TextPair {
  std::string first;
  std::string second;

  /// Normalizes both words (trim, lowercase, single internal spaces) and
  /// orders them. Throws kEmptyConcept on an empty word.
  static TextPair make(std::string_view a, std::string_view b);

  /// "(first, second)"
  std::string label() const;

  auto operator<=>(const TextPair&) const = default;
};

enum class Order { kForward, kReversed };

std::string_view to_string(Order order);

enum class TemplateKind { kTrainingAdaptive, kTrainingRestrictive, kGeneration, kStyle };

std::string_view to_string(TemplateKind kind);
TemplateKind parse_template_kind(std::string_view text);

/// Prompt template with `{t1}`, `{t2}`, `{token}` and `{resemble}` slots.
struct PromptTemplate {
  std::string id;
  std::string body;
  TemplateKind kind = TemplateKind::kTrainingAdaptive;

  /// Checks the slot rules for `kind`; throws kMissingPlaceholder or
  /// kInvalidArgument.
  void validate() const;
};

struct PromptPair {
  std::string restrictive;
  std::string adaptive;
  Order order = Order::kForward;
};

struct ValidationReport {
  std::vector<std::string> ordering_violations;  // "line N: (b, a)"
  std::vector<std::string> duplicates;           // only in lenient mode
  std::vector<TextPair> overlaps;                // shared with the reference set
  std::vector<std::string> warnings;

  bool clean() const {
    return ordering_violations.empty() && duplicates.empty() && overlaps.empty();
  }
};

struct LoadOptions {
  /// Strict mode rejects a repeated unordered pair with kDuplicatePair.
  bool reject_duplicates = true;
  /// Pairs to check for overlap (e.g. the evaluation set when loading training).
  std::span<const TextPair> overlap_reference = {};
};

struct Dataset {
  std::vector<TextPair> pairs;
  ValidationReport report;
};

Dataset parse_cangjie(std::string_view text, std::string_view source_name,
                      const LoadOptions& options = {});
Dataset load_cangjie(const std::filesystem::path& path, const LoadOptions& options = {});

/// Canonical CSV: header `first,second`, one pair per line, LF endings.
std::string serialize_cangjie(std::span<const TextPair> pairs);

std::vector<TextPair> overlapping_pairs(std::span<const TextPair> a, std::span<const TextPair> b);

/// Restrictive prompt; training casing (lowercase, trailing period).
std::string render_restrictive(const TextPair& pair, Order order, const PromptTemplate& tmpl);

/// "a lettuce and a mantis", "a turtle, a peacock, a horse and a lizard".
std::string resemblance_list(std::span<const std::string> concepts);

/// Substitutes the marker for `{token}`. `{resemble}` expands to
/// " that resembles <list>" or, with no concepts, to "." so the no-concept
/// prompt reads "A photo of a <CreTok> mixture.". Templates without the slot
/// get the clause inserted before a trailing period.
std::string render_adaptive(const PromptTemplate& tmpl, std::string_view marker,
                            std::span<const std::string> resemble = {});

/// n pairs, distinct within the draw unless `with_replacement`.
std::vector<TextPair> sample_pairs(std::span<const TextPair> pairs, std::size_t n, Rng& rng,
                                   bool with_replacement = false);

/// Templates keyed by id plus the active training selection.
class TemplatePool {
 public:
  /// Built-in pool: one training adaptive template (active), three
  /// paraphrases (inactive unless `use_paraphrases`), the restrictive
  /// concatenation, and the photo generation template.
  static TemplatePool defaults(bool use_paraphrases = false);
  static TemplatePool load(const std::filesystem::path& path);
  static TemplatePool parse(std::string_view json_text);

  void add(PromptTemplate tmpl);
  const PromptTemplate& get(std::string_view id) const;
  bool contains(std::string_view id) const;

  const PromptTemplate& restrictive() const { return get(restrictive_id_); }
  std::vector<const PromptTemplate*> active_adaptive() const;
  /// Enables every training-adaptive template in the pool.
  void use_all_adaptive();

  void set_restrictive(std::string id);
  void set_active_adaptive(std::vector<std::string> ids);

  const std::map<std::string, PromptTemplate, std::less<>>& all() const { return templates_; }

 private:
  std::map<std::string, PromptTemplate, std::less<>> templates_;
  std::string restrictive_id_;
  std::vector<std::string> active_adaptive_;
};

PromptPair make_prompt_pair(const TextPair& pair, Order order, const PromptTemplate& restrictive,
                            const PromptTemplate& adaptive, std::string_view marker);

}  // namespace cretok::corpus
