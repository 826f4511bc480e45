#include <algorithm>

#include "callsynth/generation.hpp"
#include "gen_internal.hpp"

namespace callsynth {

bool is_valid_partition(const std::vector<Boundary>& b, long n) {
  if (b.empty() || n < 1) return false;
  long cursor = 0;
  for (const auto& c : b) {
    if (c.start_turn != cursor || c.end_turn < c.start_turn) return false;
    if (c.end_turn - c.start_turn + 1 > kMaxChunkTurns) return false;
    cursor = c.end_turn + 1;
  }
  return cursor == n;
}

std::vector<Boundary> repair_boundaries(std::vector<Boundary> proposed, long n) {
  require(n >= 1, ErrorKind::SegmentationInvalid, "cannot segment an empty transcript");
  // Clamp into range and drop what cannot be salvaged.
  std::vector<Boundary> usable;
  for (auto b : proposed) {
    b.start_turn = std::max(0L, b.start_turn);
    b.end_turn = std::min(n - 1, b.end_turn);
    if (b.start_turn > b.end_turn) continue;
    usable.push_back(std::move(b));
  }
  if (usable.empty()) fail(ErrorKind::SegmentationInvalid, "no usable chunk boundaries in the reply");
  std::stable_sort(usable.begin(), usable.end(), [](const Boundary& a, const Boundary& b) {
    return a.start_turn != b.start_turn ? a.start_turn < b.start_turn : a.end_turn < b.end_turn;
  });

  std::vector<Boundary> swept;
  long cursor = 0;  // first turn not yet covered
  for (auto b : usable) {
    if (b.end_turn < cursor) continue;                 // swallowed by an earlier chunk
    if (b.start_turn < cursor) b.start_turn = cursor;  // overlap: the earlier chunk keeps it
    if (b.start_turn > cursor) {                       // gap
      if (swept.empty()) b.start_turn = 0;
      else swept.back().end_turn = b.start_turn - 1;
    }
    cursor = b.end_turn + 1;
    swept.push_back(std::move(b));
  }
  swept.back().end_turn = n - 1;

  std::vector<Boundary> out;
  for (const auto& b : swept) {
    const long len = b.end_turn - b.start_turn + 1;
    if (len <= kMaxChunkTurns) {
      out.push_back(b);
      continue;
    }
    int part = 1;
    for (long s = b.start_turn; s <= b.end_turn; s += kMaxChunkTurns, ++part) {
      Boundary piece = b;
      piece.start_turn = s;
      piece.end_turn = std::min(b.end_turn, s + kMaxChunkTurns - 1);
      piece.name = b.name + " (part " + std::to_string(part) + ")";
      out.push_back(std::move(piece));
    }
  }
  // Never hand back a bad partition silently.
  if (!is_valid_partition(out, n)) fail(ErrorKind::SegmentationInvalid, "repair did not yield a partition");
  return out;
}

std::vector<Chunk> chunks_from_boundaries(const Transcript& t, const std::vector<Boundary>& b) {
  require(is_valid_partition(b, static_cast<long>(t.size())), ErrorKind::SegmentationInvalid,
          "boundaries do not partition the transcript");
  std::vector<Chunk> out;
  for (const auto& x : b) {
    Chunk c{x.start_turn, x.end_turn, {}, x.name, x.description};
    c.turns.assign(t.turns.begin() + x.start_turn, t.turns.begin() + x.end_turn + 1);
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<Chunk> segment_transcript(const Transcript& t, const GenContext& ctx) {
  require(!t.empty(), ErrorKind::EmptyTranscript, "cannot segment an empty transcript");
  const long n = static_cast<long>(t.size());
  auto req = detail::build_request(ctx, llm::Role::generation, "segment",
                                   {{"transcript_json", to_json(t).dump()}});
  std::optional<std::vector<Boundary>> latest;
  for (int attempt = 0; attempt < 2; ++attempt) {
    const auto resp = ctx.client.complete(req, ctx.trace);
    try {
      auto b = parse_chunk_list(resp.text);
      if (is_valid_partition(b, n)) return chunks_from_boundaries(t, b);
      latest = std::move(b);
      ctx.warn("segment: reply is not a valid partition");
    } catch (const Error& e) {
      if (!llm::is_parse_error(e.kind())) throw;
      ctx.warn(std::string("segment: unusable reply: ") + e.what());
    }
    if (attempt == 0) req.user_prompt += llm::kReaskSuffix;
  }
  if (!latest) fail(ErrorKind::SegmentationInvalid, "no parsable chunk list after re-ask");
  ctx.warn("segment: repairing proposed boundaries");
  return chunks_from_boundaries(t, repair_boundaries(*latest, n));
}

}  // namespace callsynth
