#include <algorithm>
#include <cctype>
#include <fstream>

#include "imutrace/error.hpp"
#include "imutrace/hash.hpp"
#include "imutrace/llm_client.hpp"
#include "imutrace/resources.hpp"

namespace imutrace::llm {

namespace {

std::string lowercase(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

struct Hit {
  std::size_t begin;
  std::size_t end;
  std::optional<TrajectoryLabel> label;  // empty for a hedge
};

void collect_hits(const std::string& hay, const std::string& phrase,
                  std::optional<TrajectoryLabel> label, std::vector<Hit>& hits) {
  if (phrase.empty()) return;
  for (auto pos = hay.find(phrase); pos != std::string::npos; pos = hay.find(phrase, pos + 1)) {
    const std::size_t end = pos + phrase.size();
    const bool left_ok = pos == 0 || !is_word_char(hay[pos - 1]) || !is_word_char(phrase.front());
    const bool right_ok = end == hay.size() || !is_word_char(hay[end]) || !is_word_char(phrase.back());
    if (left_ok && right_ok) hits.push_back({pos, end, label});
  }
}

}  // namespace

const Lexicon& Lexicon::defaults() {
  static const Lexicon kDefault = from_json(nlohmann::json::parse(resources::kDefaultLexicon));
  return kDefault;
}

Lexicon Lexicon::from_json(const nlohmann::json& j) {
  Lexicon lex;
  try {
    lex.version = j.at("version").get<int>();
    for (const auto& [name, phrases] : j.at("labels").items()) {
      const TrajectoryLabel label = parse_trajectory_label(name);
      lex.phrases.emplace_back(lowercase(name), label);
      for (const auto& phrase : phrases) lex.phrases.emplace_back(lowercase(phrase.get<std::string>()), label);
    }
    if (j.contains("hedges")) {
      for (const auto& hedge : j.at("hedges")) lex.hedges.push_back(lowercase(hedge.get<std::string>()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("llm_client", std::string("bad lexicon: ") + e.what());
  } catch (const DataError& e) {
    throw ConfigError("llm_client", std::string("bad lexicon: ") + e.what());
  }
  for (const TrajectoryLabel label : kAllLabels) {
    const bool covered = std::any_of(lex.phrases.begin(), lex.phrases.end(),
                                     [&](const auto& p) { return p.second == label; });
    if (!covered) {
      throw ConfigError("llm_client", "lexicon has no phrases for '" + std::string(to_string(label)) + "'");
    }
  }
  return lex;
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("llm_client", "cannot open lexicon '" + path.string() + "'");
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("llm_client", "lexicon '" + path.string() + "' is not valid JSON: " + e.what());
  }
}

std::string Lexicon::hash() const {
  nlohmann::json j;
  j["version"] = version;
  for (const auto& [phrase, label] : phrases) j["phrases"].push_back({phrase, label_index(label)});
  j["hedges"] = hedges;
  return sha256_hex(j.dump());
}

TrajectoryLabel parse_label(std::string_view text, PromptMode /*mode*/, const Lexicon& lexicon) {
  // Both modes share one rule: a direct answer is just a conclusion with no
  // preamble.
  const std::string hay = lowercase(text);
  std::vector<Hit> hits;
  for (const auto& [phrase, label] : lexicon.phrases) collect_hits(hay, phrase, label, hits);
  for (const auto& hedge : lexicon.hedges) collect_hits(hay, hedge, std::nullopt, hits);

  if (hits.empty()) {
    std::string preview(text.substr(0, 80));
    throw UnparseableLabelError("no trajectory label found in model output: '" + preview + "'");
  }

  std::size_t last_end = 0;
  for (const Hit& h : hits) last_end = std::max(last_end, h.end);
  std::size_t longest = 0;
  for (const Hit& h : hits) {
    if (h.end == last_end) longest = std::max(longest, h.end - h.begin);
  }
  std::optional<TrajectoryLabel> winner;
  bool hedge = false;
  bool tie = false;
  for (const Hit& h : hits) {
    if (h.end != last_end || h.end - h.begin != longest) continue;
    if (!h.label) {
      hedge = true;
    } else if (winner && *winner != *h.label) {
      tie = true;
    } else {
      winner = h.label;
    }
  }
  if (hedge) throw AmbiguousLabelError("model output ends on an undecided answer");
  if (tie || !winner) throw AmbiguousLabelError("model output ends on a tie between labels");
  return *winner;
}

}  // namespace imutrace::llm
