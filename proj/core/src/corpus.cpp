#include "cretok/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "cretok/error.hpp"
#include "cretok/io.hpp"

namespace cretok::corpus {

namespace {

constexpr std::string_view kT1 = "{t1}";
constexpr std::string_view kT2 = "{t2}";
constexpr std::string_view kToken = "{token}";
constexpr std::string_view kResemble = "{resemble}";

std::size_t count_of(std::string_view text, std::string_view needle) {
  std::size_t n = 0;
  for (std::size_t pos = text.find(needle); pos != std::string_view::npos;
       pos = text.find(needle, pos + needle.size()))
    ++n;
  return n;
}

void replace_all(std::string& text, std::string_view needle, std::string_view value) {
  for (std::size_t pos = text.find(needle); pos != std::string::npos;
       pos = text.find(needle, pos + value.size()))
    text.replace(pos, needle.size(), value);
}

std::string normalize_word(std::string_view raw) {
  std::string out;
  bool pending_space = false;
  for (char c : raw) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

std::string indefinite(std::string_view word) {
  const bool vowel = !word.empty() && std::string_view("aeiou").find(word.front()) != std::string_view::npos;
  return (vowel ? "an " : "a ") + std::string(word);
}

}  // namespace

TextPair TextPair::make(std::string_view a, std::string_view b) {
  std::string x = normalize_word(a);
  std::string y = normalize_word(b);
  if (x.empty() || y.empty()) {
    throw Error(ErrorCode::kEmptyConcept,
                "empty concept word in pair (" + std::string(a) + ", " + std::string(b) + ")");
  }
  if (y < x) std::swap(x, y);
  return {std::move(x), std::move(y)};
}

std::string TextPair::label() const { return "(" + first + ", " + second + ")"; }

std::string_view to_string(Order order) {
  return order == Order::kForward ? "forward" : "reversed";
}

std::string_view to_string(TemplateKind kind) {
  switch (kind) {
    case TemplateKind::kTrainingAdaptive: return "training-adaptive";
    case TemplateKind::kTrainingRestrictive: return "training-restrictive";
    case TemplateKind::kGeneration: return "generation";
    case TemplateKind::kStyle: return "style";
  }
  return "unknown";
}

TemplateKind parse_template_kind(std::string_view text) {
  for (auto kind : {TemplateKind::kTrainingAdaptive, TemplateKind::kTrainingRestrictive,
                    TemplateKind::kGeneration, TemplateKind::kStyle})
    if (to_string(kind) == text) return kind;
  throw Error(ErrorCode::kInvalidArgument, "unknown template kind '" + std::string(text) + "'");
}

void PromptTemplate::validate() const {
  const auto tokens = count_of(body, kToken);
  const auto t1 = count_of(body, kT1);
  const auto t2 = count_of(body, kT2);
  switch (kind) {
    case TemplateKind::kTrainingAdaptive:
      if (tokens != 1)
        throw Error(ErrorCode::kMissingPlaceholder,
                    "template '" + id + "' must contain {token} exactly once");
      if (t1 || t2 || count_of(body, kResemble))
        throw Error(ErrorCode::kInvalidArgument,
                    "training-adaptive template '" + id + "' may not contain concept slots");
      break;
    case TemplateKind::kTrainingRestrictive:
      if (t1 != 1 || t2 != 1)
        throw Error(ErrorCode::kMissingPlaceholder,
                    "template '" + id + "' must contain {t1} and {t2} exactly once");
      if (tokens)
        throw Error(ErrorCode::kInvalidArgument,
                    "restrictive template '" + id + "' may not contain {token}");
      break;
    case TemplateKind::kGeneration:
    case TemplateKind::kStyle:
      if (tokens != 1)
        throw Error(ErrorCode::kMissingPlaceholder,
                    "template '" + id + "' must contain {token} exactly once");
      break;
  }
}

Dataset parse_cangjie(std::string_view text, std::string_view source_name, const LoadOptions& options) {
  const io::CsvTable table = io::parse_csv(text, source_name);
  if (table.header != std::vector<std::string>{"first", "second"}) {
    throw Error(ErrorCode::kMalformedRecord,
                std::string(source_name) + ": header must be 'first,second'");
  }
  Dataset out;
  std::set<TextPair> seen;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::string where = std::string(source_name) + ":" + std::to_string(table.lines[i]);
    TextPair pair;
    try {
      pair = TextPair::make(row[0], row[1]);
    } catch (const Error& e) {
      throw Error(e.code(), where + ": " + e.what());
    }
    if (normalize_word(row[0]) != pair.first) {
      out.report.ordering_violations.push_back(where + ": (" + row[0] + ", " + row[1] + ")");
    }
    if (!seen.insert(pair).second) {
      if (options.reject_duplicates)
        throw Error(ErrorCode::kDuplicatePair, where + ": duplicate pair " + pair.label());
      out.report.duplicates.push_back(where + ": " + pair.label());
      continue;
    }
    out.pairs.push_back(std::move(pair));
  }
  if (!std::is_sorted(out.pairs.begin(), out.pairs.end()))
    out.report.warnings.push_back("pairs are not in canonical order");
  out.report.overlaps = overlapping_pairs(out.pairs, options.overlap_reference);
  if (!out.report.overlaps.empty())
    out.report.warnings.push_back(std::to_string(out.report.overlaps.size()) +
                                  " pair(s) also appear in the reference set");
  return out;
}

Dataset load_cangjie(const std::filesystem::path& path, const LoadOptions& options) {
  return parse_cangjie(io::read_file(path), path.string(), options);
}

std::string serialize_cangjie(std::span<const TextPair> pairs) {
  std::string out = "first,second\n";
  for (const auto& p : pairs) out += io::csv_escape(p.first) + "," + io::csv_escape(p.second) + "\n";
  return out;
}

std::vector<TextPair> overlapping_pairs(std::span<const TextPair> a, std::span<const TextPair> b) {
  std::set<TextPair> lookup(b.begin(), b.end());
  std::vector<TextPair> out;
  for (const auto& p : a)
    if (lookup.contains(p)) out.push_back(p);
  return out;
}

std::string render_restrictive(const TextPair& pair, Order order, const PromptTemplate& tmpl) {
  if (tmpl.kind != TemplateKind::kTrainingRestrictive)
    throw Error(ErrorCode::kInvalidArgument, "template '" + tmpl.id + "' is not training-restrictive");
  tmpl.validate();
  std::string a = normalize_word(pair.first);
  std::string b = normalize_word(pair.second);
  if (a.empty() || b.empty()) throw Error(ErrorCode::kEmptyConcept, "empty concept word");
  if (order == Order::kReversed) std::swap(a, b);
  std::string out = tmpl.body;
  replace_all(out, kT1, a);
  replace_all(out, kT2, b);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (out.empty() || out.back() != '.') out.push_back('.');
  return out;
}

std::string resemblance_list(std::span<const std::string> concepts) {
  std::string out;
  for (std::size_t i = 0; i < concepts.size(); ++i) {
    if (i > 0) out += (i + 1 == concepts.size()) ? " and " : ", ";
    out += indefinite(normalize_word(concepts[i]));
  }
  return out;
}

std::string render_adaptive(const PromptTemplate& tmpl, std::string_view marker,
                            std::span<const std::string> resemble) {
  if (count_of(tmpl.body, kToken) == 0)
    throw Error(ErrorCode::kMissingPlaceholder, "template '" + tmpl.id + "' has no {token} slot");
  for (const auto& c : resemble)
    if (normalize_word(c).empty()) throw Error(ErrorCode::kEmptyConcept, "empty concept word");
  std::string out = tmpl.body;
  const std::string clause = resemble.empty() ? "" : " that resembles " + resemblance_list(resemble);
  if (count_of(out, kResemble) > 0) {
    replace_all(out, kResemble, resemble.empty() ? "." : clause);
  } else if (!clause.empty()) {
    if (!out.empty() && out.back() == '.')
      out.insert(out.size() - 1, clause);
    else
      out += clause;
  }
  replace_all(out, kToken, marker);
  return out;
}

std::vector<TextPair> sample_pairs(std::span<const TextPair> pairs, std::size_t n, Rng& rng,
                                   bool with_replacement) {
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "sample size must be at least 1");
  if (pairs.empty()) throw Error(ErrorCode::kNotEnoughPairs, "cannot sample from an empty pair list");
  std::vector<TextPair> out;
  out.reserve(n);
  if (with_replacement) {
    for (std::size_t i = 0; i < n; ++i) out.push_back(pairs[rng.index(pairs.size())]);
    return out;
  }
  if (n > pairs.size()) {
    throw Error(ErrorCode::kNotEnoughPairs, "requested " + std::to_string(n) + " distinct pairs from " +
                                                std::to_string(pairs.size()));
  }
  // Partial Fisher-Yates over indices.
  std::vector<std::size_t> idx(pairs.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + rng.index(idx.size() - i);
    std::swap(idx[i], idx[j]);
    out.push_back(pairs[idx[i]]);
  }
  return out;
}

TemplatePool TemplatePool::defaults(bool use_paraphrases) {
  TemplatePool pool;
  pool.add({"concat", "a {t1} {t2}.", TemplateKind::kTrainingRestrictive});
  pool.add({"photo-mixture", "a photo of a {token} mixture.", TemplateKind::kTrainingAdaptive});
  pool.add({"image-mixture", "an image of a {token} mixture.", TemplateKind::kTrainingAdaptive});
  pool.add({"picture-mixture", "a picture of a {token} mixture.", TemplateKind::kTrainingAdaptive});
  pool.add({"bare-mixture", "a {token} mixture.", TemplateKind::kTrainingAdaptive});
  pool.add({"photo", "A photo of a {token} mixture{resemble}", TemplateKind::kGeneration});
  pool.set_restrictive("concat");
  pool.set_active_adaptive({"photo-mixture"});
  if (use_paraphrases) pool.use_all_adaptive();
  return pool;
}

TemplatePool TemplatePool::parse(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedRecord, std::string("template pool: ") + e.what());
  }
  TemplatePool pool;
  try {
    for (const auto& [id, entry] : doc.at("templates").items()) {
      pool.add({id, entry.at("body").get<std::string>(),
                parse_template_kind(entry.at("kind").get<std::string>())});
    }
    const auto& training = doc.at("training");
    pool.set_restrictive(training.at("restrictive").get<std::string>());
    pool.set_active_adaptive(training.at("adaptive").get<std::vector<std::string>>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedRecord, std::string("template pool: ") + e.what());
  }
  return pool;
}

TemplatePool TemplatePool::load(const std::filesystem::path& path) {
  return parse(io::read_file(path));
}

void TemplatePool::add(PromptTemplate tmpl) {
  tmpl.validate();
  const std::string id = tmpl.id;
  templates_.insert_or_assign(id, std::move(tmpl));
}

const PromptTemplate& TemplatePool::get(std::string_view id) const {
  auto it = templates_.find(id);
  if (it == templates_.end())
    throw Error(ErrorCode::kInvalidArgument, "unknown template '" + std::string(id) + "'");
  return it->second;
}

bool TemplatePool::contains(std::string_view id) const { return templates_.find(id) != templates_.end(); }

std::vector<const PromptTemplate*> TemplatePool::active_adaptive() const {
  std::vector<const PromptTemplate*> out;
  for (const auto& id : active_adaptive_) out.push_back(&get(id));
  return out;
}

void TemplatePool::use_all_adaptive() {
  active_adaptive_.clear();
  for (const auto& [id, t] : templates_)
    if (t.kind == TemplateKind::kTrainingAdaptive) active_adaptive_.push_back(id);
  // Keep the primary template first so a single-template pool is unchanged.
  auto it = std::find(active_adaptive_.begin(), active_adaptive_.end(), "photo-mixture");
  if (it != active_adaptive_.end()) std::rotate(active_adaptive_.begin(), it, it + 1);
}

void TemplatePool::set_restrictive(std::string id) {
  if (get(id).kind != TemplateKind::kTrainingRestrictive)
    throw Error(ErrorCode::kInvalidArgument, "template '" + id + "' is not training-restrictive");
  restrictive_id_ = std::move(id);
}

void TemplatePool::set_active_adaptive(std::vector<std::string> ids) {
  if (ids.empty()) throw Error(ErrorCode::kInvalidArgument, "at least one adaptive template is required");
  for (const auto& id : ids)
    if (get(id).kind != TemplateKind::kTrainingAdaptive)
      throw Error(ErrorCode::kInvalidArgument, "template '" + id + "' is not training-adaptive");
  active_adaptive_ = std::move(ids);
}

PromptPair make_prompt_pair(const TextPair& pair, Order order, const PromptTemplate& restrictive,
                            const PromptTemplate& adaptive, std::string_view marker) {
  return {render_restrictive(pair, order, restrictive), render_adaptive(adaptive, marker), order};
}

}  // namespace cretok::corpus
