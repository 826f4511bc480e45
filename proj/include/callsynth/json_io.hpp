#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "callsynth/core.hpp"

namespace callsynth {

using json = nlohmann::ordered_json;

json to_json(const CallAttributes& a);
// Structural parse only; run validate_attributes for invariants.
CallAttributes attributes_from_json(const json& j);
CallAttributes load_attributes(const std::filesystem::path& p);

json to_json(const TopicSegment& s);
json to_json(const Transcript& t);  // array of turn records

std::string read_file(const std::filesystem::path& p);
void write_file(const std::filesystem::path& p, const std::string& contents);
Transcript load_transcript(const std::filesystem::path& p, Language lang = Language::en);

}  // namespace callsynth
