#include "callsynth/structured.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <regex>
#include <set>

namespace callsynth {

namespace {

std::string preview(std::string_view s) {
  std::string p(s.substr(0, 80));
  if (s.size() > 80) p += "...";
  return p;
}

bool fold_equal(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i])))
      return false;
  return true;
}

std::string strip_prefix_label(std::string s) {
  static const std::regex re(R"(^\s*(label|labels|answer|category|categories|score)\s*:\s*)",
                             std::regex::icase);
  return std::regex_replace(s, re, "");
}

long index_from_json(const json& v) {
  if (v.is_number_integer()) return v.get<long>();
  if (v.is_string()) {
    static const std::regex re(R"(^\s*\(?\s*(-?\d+)\s*\)?\s*$)");
    std::smatch m;
    const auto s = v.get<std::string>();
    if (std::regex_match(s, m, re)) return std::stol(m[1].str());
  }
  fail(ErrorKind::SchemaViolation, "turn reference is not an integer: " + v.dump());
}

}  // namespace

json extract_json(std::string_view text) {
  const auto open = text.find_first_of("{[");
  if (open == std::string_view::npos) fail(ErrorKind::UnparsableOutput, "no JSON in '" + preview(text) + "'");
  const char close_ch = text[open] == '{' ? '}' : ']';
  // Try the widest span first, then shrink towards earlier closing brackets.
  for (auto close = text.rfind(close_ch); close != std::string_view::npos && close > open;
       close = text.rfind(close_ch, close - 1)) {
    try {
      return json::parse(text.substr(open, close - open + 1));
    } catch (const json::exception&) {
    }
    if (close == 0) break;
  }
  fail(ErrorKind::UnparsableOutput, "malformed JSON in '" + preview(text) + "'");
}

std::vector<Boundary> parse_chunk_list(std::string_view text) {
  const json j = extract_json(text);
  const json* arr = nullptr;
  if (j.is_array()) arr = &j;
  else if (j.is_object()) {
    for (const char* key : {"topics", "chunks", "segments"})
      if (j.contains(key)) arr = &j[key];
  }
  if (!arr || !arr->is_array()) fail(ErrorKind::SchemaViolation, "expected a list of topics");
  std::vector<Boundary> out;
  for (const auto& item : *arr) {
    if (!item.is_object()) fail(ErrorKind::SchemaViolation, "topic entry is not an object");
    for (const char* key : {"start_turn", "end_turn"})
      if (!item.contains(key) || !item[key].is_number_integer())
        fail(ErrorKind::SchemaViolation, std::string("topic entry lacks integer ") + key);
    Boundary b;
    b.start_turn = item["start_turn"].get<long>();
    b.end_turn = item["end_turn"].get<long>();
    if (item.contains("name") && item["name"].is_string()) b.name = item["name"].get<std::string>();
    if (item.contains("description") && item["description"].is_string())
      b.description = item["description"].get<std::string>();
    out.push_back(std::move(b));
  }
  return out;
}

std::string parse_label(std::string_view text, const std::vector<std::string>& allowed) {
  const std::string raw = strip_prefix_label(trim(text));
  if (raw.empty()) fail(ErrorKind::UnparsableOutput, "empty label reply");
  const std::string norm = normalize_label(raw);
  for (const auto& l : allowed)
    if (l == norm) return l;
  fail(ErrorKind::UnknownLabel, "'" + preview(raw) + "'");
}

std::vector<std::string> parse_label_list(std::string_view text, const std::vector<std::string>& allowed) {
  const std::string raw = strip_prefix_label(trim(text));
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!is_blank(cur)) {
      auto l = parse_label(cur, allowed);
      if (std::find(out.begin(), out.end(), l) == out.end()) out.push_back(std::move(l));
    }
    cur.clear();
  };
  for (char c : raw) {
    if (c == ',' || c == ';' || c == '\n' || c == '|') flush();
    else cur += c;
  }
  flush();
  if (out.empty()) fail(ErrorKind::UnparsableOutput, "no labels in '" + preview(text) + "'");
  return out;
}

ArcLabel parse_arc(std::string_view text, Dimension arc_dim) {
  std::string s = strip_prefix_label(trim(text));
  if (s.empty()) fail(ErrorKind::UnparsableOutput, "empty arc reply");
  static const std::vector<std::string> seps{"\xE2\x86\x92", "->", "=>", "_to_", " to "};
  for (const auto& sep : seps) {
    const auto pos = s.find(sep);
    if (pos == std::string::npos) continue;
    const auto a = normalize_label(s.substr(0, pos));
    const auto b = normalize_label(s.substr(pos + sep.size()));
    try {
      return make_arc(arc_dim, a, b);
    } catch (const Error&) {
      fail(ErrorKind::UnknownLabel, "arc '" + preview(s) + "'");
    }
  }
  fail(ErrorKind::UnparsableOutput, "no arc separator in '" + preview(s) + "'");
}

double parse_last_number(std::string_view text) {
  static const std::regex re(R"([-+]?\d+(?:\.\d+)?)");
  const std::string s(text);
  std::string last;
  for (auto it = std::sregex_iterator(s.begin(), s.end(), re); it != std::sregex_iterator(); ++it)
    last = it->str();
  if (last.empty()) fail(ErrorKind::UnparsableOutput, "no number in '" + preview(text) + "'");
  return std::stod(last);
}

int parse_score(std::string_view text, int lo, int hi) {
  const double v = parse_last_number(text);
  if (v != std::floor(v)) fail(ErrorKind::SchemaViolation, "score is not an integer");
  if (v < lo || v > hi)
    fail(ErrorKind::ScoreOutOfRange, "score " + std::to_string(static_cast<long>(v)) + " outside [" +
                                         std::to_string(lo) + "," + std::to_string(hi) + "]");
  return static_cast<int>(v);
}

std::vector<std::pair<std::string, std::vector<long>>> parse_turn_index_map(
    std::string_view text, const std::vector<std::string>& allowed) {
  const json j = extract_json(text);
  if (!j.is_object()) fail(ErrorKind::SchemaViolation, "expected an object of label -> turn list");
  std::vector<std::pair<std::string, std::vector<long>>> out;
  for (const auto& [key, v] : j.items()) {
    const auto label = parse_label(key, allowed);
    if (!v.is_array()) fail(ErrorKind::SchemaViolation, "turns for '" + key + "' are not a list");
    auto it = std::find_if(out.begin(), out.end(), [&](const auto& e) { return e.first == label; });
    if (it == out.end()) it = out.insert(out.end(), {label, {}});
    for (const auto& x : v) it->second.push_back(index_from_json(x));
  }
  return out;
}

std::string parse_final_answer(std::string_view text) {
  static const std::regex re(R"(final answer is\s*:?\s*(.+))", std::regex::icase);
  const std::string s(text);
  std::string found;
  for (auto it = std::sregex_iterator(s.begin(), s.end(), re); it != std::sregex_iterator(); ++it)
    found = (*it)[1].str();
  if (found.empty()) {
    // Fall back to the last non-empty line.
    std::size_t end = s.size();
    while (end > 0) {
      auto start = s.rfind('\n', end - 1);
      start = start == std::string::npos ? 0 : start + 1;
      auto line = trim(std::string_view(s).substr(start, end - start));
      if (!line.empty()) {
        found = line;
        break;
      }
      if (start == 0) break;
      end = start - 1;
    }
  }
  auto nl = found.find('\n');
  if (nl != std::string::npos) found.resize(nl);
  found = trim(found);
  while (!found.empty() && (found.back() == '.' || found.back() == '"' || found.back() == '\''))
    found.pop_back();
  while (!found.empty() && (found.front() == '"' || found.front() == '\'')) found.erase(found.begin());
  found = trim(found);
  if (found.empty()) fail(ErrorKind::UnparsableOutput, "no answer in '" + preview(text) + "'");
  return found;
}

std::vector<ParsedTurn> parse_turn_lines(std::string_view text) {
  static const std::regex re(
      R"(^\s*(?:[-*]\s*)?(?:\(\s*(\d+)\s*\)\s*)?\**\s*(agent|customer)\s*(?:\(\s*(\d+)\s*\))?\s*\**\s*:\s*\**\s*(.*?)\s*$)",
      std::regex::icase);
  std::vector<ParsedTurn> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string line(text.substr(pos, nl - pos));
    pos = nl + 1;
    std::smatch m;
    if (std::regex_match(line, m, re) && !is_blank(m[4].str())) {
      ParsedTurn t;
      if (m[1].matched) t.index = std::stol(m[1].str());
      t.speaker = fold_equal(m[2].str(), "agent") ? Speaker::agent : Speaker::customer;
      t.text = m[4].str();
      out.push_back(std::move(t));
    }
    if (nl == text.size()) break;
  }
  return out;
}

std::string render_turn_line(const Turn& t, bool with_index) {
  std::string s;
  if (with_index) s = "(" + std::to_string(t.index) + ") ";
  s += std::string(to_string(t.speaker)) + ": " + t.text;
  return s;
}

std::string render_turns(const std::vector<Turn>& turns, bool with_index) {
  std::string out;
  for (std::size_t i = 0; i < turns.size(); ++i) {
    if (i) out += '\n';
    out += render_turn_line(turns[i], with_index);
  }
  return out;
}

}  // namespace callsynth
