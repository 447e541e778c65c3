#include <progshot/corpus.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <optional>

#include <json.hpp>
#include <progshot/error.hpp>

#include "common/util.hpp"

namespace progshot {

using nlohmann::json;

std::string_view to_string(Dataset d) {
  switch (d) {
    case Dataset::gsm8k: return "gsm8k";
    case Dataset::svamp: return "svamp";
    case Dataset::mathqa: return "mathqa";
    case Dataset::custom: return "custom";
  }
  return "custom";
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::valid: return "valid";
    case Split::test: return "test";
  }
  return "train";
}

Dataset dataset_from_string(std::string_view name) {
  if (name == "gsm8k") return Dataset::gsm8k;
  if (name == "svamp") return Dataset::svamp;
  if (name == "mathqa") return Dataset::mathqa;
  if (name == "custom") return Dataset::custom;
  throw Error(ErrorCode::config_error, "unknown dataset tag '" + std::string(name) + "'");
}

Split split_from_string(std::string_view name) {
  if (name == "train") return Split::train;
  if (name == "valid" || name == "dev" || name == "validation") return Split::valid;
  if (name == "test") return Split::test;
  throw Error(ErrorCode::config_error, "unknown split '" + std::string(name) + "'");
}

FieldMap FieldMap::defaults(Dataset d) {
  switch (d) {
    case Dataset::svamp: return {{"Body", "Question"}, "Answer"};
    case Dataset::mathqa: return {{"text"}, "answer"};
    case Dataset::gsm8k:
    case Dataset::custom: break;
  }
  return {{"question"}, "answer"};
}

std::size_t Corpus::count(Split s) const {
  return static_cast<std::size_t>(std::count_if(
      problems_.begin(), problems_.end(), [s](const Problem& p) { return p.split == s; }));
}

std::vector<Problem> Corpus::split(Split s) const {
  std::vector<Problem> out;
  for (const auto& p : problems_) {
    if (p.split == s) out.push_back(p);
  }
  return out;
}

const Problem* Corpus::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &problems_[it->second];
}

const Problem& Corpus::at(std::string_view id) const {
  if (const auto* p = find(id)) return *p;
  throw Error(ErrorCode::unknown_problem_id, std::string(id));
}

void Corpus::add(Problem p) {
  if (by_id_.contains(p.id)) {
    throw Error(ErrorCode::malformed_record, "duplicate problem id '" + p.id + "'");
  }
  by_id_.emplace(p.id, problems_.size());
  problems_.push_back(std::move(p));
}

void Corpus::merge(const Corpus& other) {
  for (const auto& p : other.problems_) add(p);
  for (const auto& s : other.skipped_) skipped_.push_back(s);
}

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n\f\v");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n\f\v");
  return std::string(s.substr(b, e - b + 1));
}

Split infer_split(const std::filesystem::path& path) {
  std::string name = path.filename().string();
  std::transform(name.begin(), name.end(), name.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (name.find("test") != std::string::npos) return Split::test;
  if (name.find("valid") != std::string::npos || name.find("dev") != std::string::npos) {
    return Split::valid;
  }
  return Split::train;
}

std::string field_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number()) return v.dump();
  return {};
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& path, Dataset dataset, const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::file_missing, path.string());

  const FieldMap fields = options.fields.value_or(FieldMap::defaults(dataset));
  const Split default_split = options.split.value_or(infer_split(path));

  Corpus corpus;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    json rec = json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.is_object()) {
      throw Error(ErrorCode::malformed_record, path.string() + ":" + std::to_string(lineno) +
                                                   ": invalid JSON object");
    }

    std::string question;
    for (const auto& key : fields.question_keys) {
      auto it = rec.find(key);
      if (it == rec.end()) {
        throw Error(ErrorCode::malformed_record, path.string() + ":" + std::to_string(lineno) +
                                                     ": missing field '" + key + "'");
      }
      std::string part = trim(field_text(*it));
      if (part.empty()) continue;
      if (!question.empty()) question.push_back(' ');
      question += part;
    }
    auto ans = rec.find(fields.answer_key);
    if (ans == rec.end()) {
      throw Error(ErrorCode::malformed_record, path.string() + ":" + std::to_string(lineno) +
                                                   ": missing field '" + fields.answer_key + "'");
    }

    if (question.empty()) {
      corpus.add_skip({lineno, "empty_question"});
      continue;
    }
    double gold = 0.0;
    try {
      if (ans->is_number()) {
        gold = ans->get<double>();
        if (!std::isfinite(gold)) throw Error(ErrorCode::answer_unparsable, "non-finite");
      } else if (ans->is_string()) {
        gold = parse_gold_answer(ans->get<std::string>());
      } else {
        throw Error(ErrorCode::answer_unparsable, "answer is not text or number");
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::answer_unparsable) throw;
      corpus.add_skip({lineno, "answer_unparsable: " + e.detail()});
      continue;
    }

    Split split = default_split;
    if (auto it = rec.find("split"); it != rec.end() && it->is_string()) {
      split = split_from_string(it->get<std::string>());
    }
    std::string id;
    for (const char* key : {"id", "ID", "problem_id"}) {
      if (auto it = rec.find(key); it != rec.end()) {
        id = trim(field_text(*it));
        if (!id.empty()) break;
      }
    }
    if (id.empty()) {
      id = std::string(to_string(dataset)) + "-" + std::string(to_string(split)) + "-" +
           std::to_string(lineno);
    }
    try {
      corpus.add({std::move(id), std::move(question), gold, dataset, split});
    } catch (const Error& e) {
      throw Error(e.code(), path.string() + ":" + std::to_string(lineno) + ": " + e.detail());
    }
  }
  return corpus;
}

double parse_gold_answer(std::string_view raw) {
  std::string_view text = raw;
  if (auto marker = text.rfind("####"); marker != std::string_view::npos) {
    text = text.substr(marker + 4);
  }

  // Scan for the last token shaped like [-]digits[,digits]*[.digits][e[-]digits].
  std::optional<std::string> last;
  std::size_t i = 0;
  auto is_digit = [](char c) { return c >= '0' && c <= '9'; };
  while (i < text.size()) {
    const bool dot_start = text[i] == '.' && i + 1 < text.size() && is_digit(text[i + 1]);
    if (!is_digit(text[i]) && !dot_start) {
      ++i;
      continue;
    }
    bool negative = false;
    if (i > 0 && text[i - 1] == '-' &&
        (i < 2 || !std::isalnum(static_cast<unsigned char>(text[i - 2])))) {
      negative = true;
    }
    if (i > 1 && text[i - 1] == '$' && text[i - 2] == '-') negative = true;
    std::string digits;
    std::size_t j = i;
    while (j < text.size()) {
      if (is_digit(text[j])) {
        digits.push_back(text[j]);
      } else if (text[j] == ',' && j + 1 < text.size() && is_digit(text[j + 1]) &&
                 digits.find('.') == std::string::npos && !digits.empty()) {
        // thousands separator
      } else if (text[j] == '.' && j + 1 < text.size() && is_digit(text[j + 1]) &&
                 digits.find('.') == std::string::npos) {
        digits.push_back('.');
      } else {
        break;
      }
      ++j;
    }
    if (j + 1 < text.size() && (text[j] == 'e' || text[j] == 'E')) {
      std::size_t k = j + 1;
      if (k < text.size() && (text[k] == '-' || text[k] == '+')) ++k;
      if (k < text.size() && is_digit(text[k])) {
        digits.append(text.substr(j, k - j));
        while (k < text.size() && is_digit(text[k])) digits.push_back(text[k++]);
        j = k;
      }
    }
    last = (negative ? "-" : "") + digits;
    i = j;
  }
  if (!last) throw Error(ErrorCode::answer_unparsable, "no numeric token in '" + std::string(raw) + "'");
  const double v = std::strtod(last->c_str(), nullptr);
  if (!std::isfinite(v)) throw Error(ErrorCode::answer_unparsable, "non-finite '" + *last + "'");
  return v;
}

bool answers_match(double pred, double gold) {
  if (!std::isfinite(pred) || !std::isfinite(gold)) return false;
  return std::fabs(pred - gold) <= 1e-6 + 1e-4 * std::fabs(gold);
}

void write_skip_report(const Corpus& corpus, const std::filesystem::path& path) {
  std::string out;
  for (const auto& s : corpus.skipped()) {
    out += json{{"line", s.line}, {"reason", s.reason}}.dump();
    out.push_back('\n');
  }
  detail::write_file(path, out);
}

}  // namespace progshot
