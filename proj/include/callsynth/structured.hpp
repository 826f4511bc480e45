#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "callsynth/core.hpp"
#include "callsynth/json_io.hpp"
#include "callsynth/taxonomy.hpp"

namespace callsynth {

// Chunk boundaries as proposed by the segmenter, not yet validated.
struct Boundary {
  long start_turn = 0;
  long end_turn = 0;
  std::string name;
  std::string description;
  bool operator==(const Boundary&) const = default;
};

// First JSON value embedded in free text (code fences and prose tolerated).
json extract_json(std::string_view text);

std::vector<Boundary> parse_chunk_list(std::string_view text);
std::string parse_label(std::string_view text, const std::vector<std::string>& allowed);
std::vector<std::string> parse_label_list(std::string_view text, const std::vector<std::string>& allowed);
ArcLabel parse_arc(std::string_view text, Dimension arc_dim);
// Integer score in [lo, hi], taken from the last numeric token.
int parse_score(std::string_view text, int lo = 1, int hi = 10);
// Last numeric token, unbounded (judges are clamped by the caller).
double parse_last_number(std::string_view text);
// Label -> turn numbers, in the order the labels appear in the reply.
std::vector<std::pair<std::string, std::vector<long>>> parse_turn_index_map(
    std::string_view text, const std::vector<std::string>& allowed);
std::string parse_final_answer(std::string_view text);

struct ParsedTurn {
  std::optional<long> index;
  Speaker speaker = Speaker::agent;
  std::string text;
};

// Lines shaped "agent: ..." or "(12) customer: ...". Other lines are ignored.
std::vector<ParsedTurn> parse_turn_lines(std::string_view text);

std::string render_turn_line(const Turn& t, bool with_index = true);
std::string render_turns(const std::vector<Turn>& turns, bool with_index = true);

}  // namespace callsynth
