#pragma once

#include <map>
#include <string>
#include <vector>

#include "callsynth/core.hpp"
#include "callsynth/json_io.hpp"
#include "callsynth/taxonomy.hpp"

namespace callsynth {

struct DisfluencyType {
  std::string name;
  std::string description;
  std::string example;
};

const std::vector<DisfluencyType>& disfluency_dictionary();

struct TurnTargetTable {
  std::map<std::pair<Language, CallLengthCategory>, double> mean_turns;
  double mean(Language l, CallLengthCategory c) const;  // MissingCell if absent
};

const TurnTargetTable& turn_target_table();

// Reference distribution from the shipped tuning-set fixtures.
const ReferenceDistribution& reference(Language l, Dimension d);

struct ReferenceSet {
  std::map<Dimension, ReferenceDistribution> by_dimension;
  const ReferenceDistribution* find(Dimension d) const;
};

ReferenceSet shipped_references(Language l);
ReferenceDistribution reference_from_json(const json& j);
json to_json(const ReferenceDistribution& r);

// Raw shipped document by path relative to data/, e.g. "prompts.json".
const json& shipped_document(const std::string& rel_path);
std::vector<std::string> shipped_paths();

}  // namespace callsynth
