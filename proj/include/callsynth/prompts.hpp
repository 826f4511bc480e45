#pragma once

#include <map>
#include <string>

#include "callsynth/json_io.hpp"

namespace callsynth {

struct PromptTemplate {
  std::string system;
  std::string user;
};

// Named templates for every backend call the toolkit makes. Candidates for
// tuning override a subset of entries.
struct PromptSet {
  std::string name = "default";
  std::map<std::string, PromptTemplate> templates;

  const PromptTemplate& get(const std::string& task) const;
};

const PromptSet& default_prompts();
// {"name": ..., "templates": {"task": {"system": str|[lines], "user": str|[lines]}}}
// Missing tasks and fields fall back to the defaults.
PromptSet prompt_set_from_json(const json& j);
json to_json(const PromptSet& p);

}  // namespace callsynth
