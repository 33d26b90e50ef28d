#include "cretok/judge.hpp"

#include <cctype>
#include <regex>
#include <vector>

namespace cretok::eval {

namespace {

constexpr std::string_view kIntro =
    "The subject of this evaluation is an image that represents a mixture of {pair}. The objective is to assess "
    "the creativity of an entity that synthesizes two distinct concepts as delineated in the provided prompt. "
    "Accordingly, please evaluate the creativity of images generated by various methodologies for the identical "
    "prompt, utilizing the following criteria on a scale from 1 to 10:";

constexpr std::string_view kIntegration =
    "1. Conceptual Integration (1-10): This criterion gauges the degree to which the image manifests a coherent and "
    "integrated concept, as opposed to merely placing two independent elements side by side. A high score signifies "
    "that the elements are intricately merged, creating a new, unified entity.";

constexpr std::string_view kAlignment =
    "2. Alignment with Prompt (1-10): This evaluates the extent to which the image conforms to and encapsulates the "
    "specific combination of concepts described in the prompt. The image should refrain from including irrelevant "
    "elements that detract from the primary concepts. A high score is allocated when the image closely adheres to "
    "the specifications of the prompt.";

constexpr std::string_view kOriginality =
    "3. Originality (1-10): This assesses the innovativeness of the concept portrayed in the image. The depicted "
    "concept should not mimic existing animals, plants, or widely recognized mythical creatures unless specifically "
    "mentioned in the prompt. Images that present a distinctive and inventive amalgamation receive a high score.";

constexpr std::string_view kAesthetics =
    "4. Aesthetic Quality (1-10): This criterion scrutinizes the visual appeal of the image, focusing on color "
    "harmony, the balance and arrangement of elements, and the overall visual impact. A high score is awarded when "
    "the image is not only conceptually robust but also visually engaging.";

constexpr std::string_view kConclusion =
    "In conclusion, based on the aforementioned criteria, provide a comprehensive creative assessment (1-10) and "
    "articulate specific justifications for your rating.";

bool blank(std::string_view s) { return s.find_first_not_of(" \t\r\n") == std::string_view::npos; }

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

struct Criterion {
  double JudgeScores::*field;
  std::string_view display;
  std::vector<std::string_view> labels;  // longest first
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {&JudgeScores::integration, "Conceptual Integration", {"conceptual integration", "integration"}},
      {&JudgeScores::alignment, "Alignment with Prompt", {"alignment with prompt", "alignment"}},
      {&JudgeScores::originality, "Originality", {"originality"}},
      {&JudgeScores::aesthetics, "Aesthetic Quality", {"aesthetic quality", "aesthetics", "aesthetic"}},
      {&JudgeScores::comprehensive,
       "Comprehensive",
       {"comprehensive creative assessment", "comprehensive assessment", "comprehensive", "overall"}},
  };
  return all;
}

// Drops list numbering, bullets, heading marks and emphasis at line start.
std::string strip_decoration(std::string_view line) {
  std::string s;
  for (char c : line)
    if (c != '*' && c != '_' && c != '#') s += c;
  std::size_t i = 0;
  auto skip_space = [&] {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  };
  skip_space();
  if (i < s.size() && (s[i] == '-' || s[i] == '+')) {
    ++i;
    skip_space();
  }
  std::size_t j = i;
  while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
  if (j > i && j < s.size() && (s[j] == '.' || s[j] == ')')) {
    i = j + 1;
    skip_space();
  }
  return lower(std::string_view(s).substr(i));
}

enum class Found { kNone, kLabelOnly, kNumber };

Found scan_value(const std::string& rest, double& value) {
  static const std::regex range_hint(R"(\(\s*1\s*(-|–|to)\s*10\s*\))");
  static const std::regex number(R"((^|[^\w.])(-?\d+(\.\d+)?)(?![\w]))");
  const std::string cleaned = std::regex_replace(rest, range_hint, " ");
  std::smatch m;
  if (!std::regex_search(cleaned, m, number)) return Found::kLabelOnly;
  value = std::stod(m[2].str());
  return Found::kNumber;
}

}  // namespace

std::string judge_prompt(std::string_view t1, std::string_view t2) {
  if (blank(t1) || blank(t2)) throw Error(ErrorCode::kEmptyConcept, "judge prompt needs two non-empty concepts");
  std::string intro(kIntro);
  const std::string pair = "a " + normalize_whitespace(t1) + " and a " + normalize_whitespace(t2);
  intro.replace(intro.find("{pair}"), 6, pair);
  std::string out;
  for (std::string_view p : {std::string_view(intro), kIntegration, kAlignment, kOriginality, kAesthetics, kConclusion}) {
    if (!out.empty()) out += "\n\n";
    out += p;
  }
  return out;
}

JudgeScores parse_judge(std::string_view response) {
  if (blank(response)) throw Error(ErrorCode::kUnparseable, "judge response is empty");
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= response.size()) {
    const auto end = response.find('\n', start);
    lines.push_back(strip_decoration(response.substr(start, end == std::string_view::npos ? end : end - start)));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }

  JudgeScores out;
  for (const auto& c : criteria()) {
    Found best = Found::kNone;
    double value = 0;
    for (const auto& line : lines) {
      for (auto label : c.labels) {
        if (line.rfind(label, 0) != 0) continue;
        const Found f = scan_value(line.substr(label.size()), value);
        if (f == Found::kNumber) {
          best = f;
        } else if (best == Found::kNone) {
          best = Found::kLabelOnly;
        }
        break;
      }
      if (best == Found::kNumber) break;
    }
    if (best == Found::kNone)
      throw Error(ErrorCode::kMissingCriterion, "judge response has no '" + std::string(c.display) + "' line");
    if (best == Found::kLabelOnly)
      throw Error(ErrorCode::kUnparseable, "no numeric score for '" + std::string(c.display) + "'");
    if (!(value >= 1.0 && value <= 10.0)) {
      throw Error(ErrorCode::kOutOfRange,
                  std::string(c.display) + " score " + std::to_string(value) + " outside [1, 10]");
    }
    out.*c.field = value;
  }
  return out;
}

JudgeOutcome try_parse_judge(std::string_view response) noexcept {
  JudgeOutcome out;
  try {
    out.raw = std::string(response);
    out.scores = parse_judge(response);
  } catch (const Error& e) {
    out.error = e.code();
    out.message = e.what();
  } catch (const std::exception& e) {
    out.error = ErrorCode::kUnparseable;
    out.message = e.what();
  } catch (...) {
    out.error = ErrorCode::kUnparseable;
    out.message = "unknown parse failure";
  }
  return out;
}

std::string normalize_whitespace(std::string_view text) {
  std::string out;
  bool pending = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending = !out.empty();
    } else {
      if (pending) out += ' ';
      pending = false;
      out += c;
    }
  }
  return out;
}

}  // namespace cretok::eval
