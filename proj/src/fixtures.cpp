#include "callsynth/fixtures.hpp"

#include <cmath>
#include <mutex>

#include "callsynth/embedded.hpp"

namespace callsynth {

namespace {

struct Store {
  std::map<std::string, json> docs;
  std::vector<DisfluencyType> disfluencies;
  TurnTargetTable turn_targets;
  std::map<std::pair<Language, Dimension>, ReferenceDistribution> refs;
};

const Store& store() {
  static const Store s = [] {
    Store st;
    for (const auto& f : embedded_files())
      st.docs.emplace(std::string(f.path), json::parse(f.contents));
    for (const auto& d : st.docs.at("disfluencies.json").at("disfluencies"))
      st.disfluencies.push_back({d.at("name").get<std::string>(),
                                 d.at("description").get<std::string>(),
                                 d.at("example").get<std::string>()});
    for (const auto& [lang, row] : st.docs.at("turn_targets.json").at("mean_turns").items())
      for (const auto& [bin, v] : row.items())
        st.turn_targets.mean_turns[{parse_language(lang), parse_call_length(bin)}] = v.get<double>();
    for (const auto& [path, doc] : st.docs) {
      if (path.rfind("reference/", 0) != 0) continue;
      auto r = reference_from_json(doc);
      st.refs.emplace(std::make_pair(r.language, r.dimension), std::move(r));
    }
    return st;
  }();
  return s;
}

}  // namespace

const std::vector<DisfluencyType>& disfluency_dictionary() { return store().disfluencies; }

double TurnTargetTable::mean(Language l, CallLengthCategory c) const {
  auto it = mean_turns.find({l, c});
  if (it == mean_turns.end())
    fail(ErrorKind::MissingCell, "no turn target for (" + std::string(to_string(l)) + ", " +
                                     std::string(to_string(c)) + ")");
  return it->second;
}

const TurnTargetTable& turn_target_table() { return store().turn_targets; }

const ReferenceDistribution& reference(Language l, Dimension d) {
  const auto& refs = store().refs;
  auto it = refs.find({l, d});
  if (it == refs.end())
    fail(ErrorKind::MissingCell, "no reference for " + std::string(to_string(l)) + "/" +
                                     std::string(to_string(d)));
  return it->second;
}

const ReferenceDistribution* ReferenceSet::find(Dimension d) const {
  auto it = by_dimension.find(d);
  return it == by_dimension.end() ? nullptr : &it->second;
}

ReferenceSet shipped_references(Language l) {
  ReferenceSet s;
  for (auto d : all_dimensions()) s.by_dimension.emplace(d, reference(l, d));
  return s;
}

ReferenceDistribution reference_from_json(const json& j) {
  ReferenceDistribution r;
  r.language = parse_language(j.at("language").get<std::string>());
  r.dimension = parse_dimension(j.at("dimension").get<std::string>());
  const auto labels = label_set(r.dimension);
  double sum = 0.0;
  for (const auto& [label, p] : j.at("proportions").items()) {
    if (label != kOther && !labels.contains(label))
      fail(ErrorKind::LabelOutOfSet, "reference " + std::string(to_string(r.dimension)) +
                                         " has unknown label '" + label + "'");
    const double v = p.get<double>();
    if (!(v >= 0.0 && v <= 1.0))
      fail(ErrorKind::OutOfRange, "reference proportion outside [0,1] for '" + label + "'");
    sum += v;
    r.proportions.emplace_back(label, v);
  }
  if (cardinality_of(r.dimension) == Cardinality::single_label && std::fabs(sum - 1.0) > 1e-9)
    fail(ErrorKind::NotNormalized, "reference " + std::string(to_string(r.language)) + "/" +
                                       std::string(to_string(r.dimension)) + " sums to " +
                                       std::to_string(sum));
  return r;
}

json to_json(const ReferenceDistribution& r) {
  json j;
  j["language"] = std::string(to_string(r.language));
  j["dimension"] = std::string(to_string(r.dimension));
  json p = json::object();
  for (const auto& [l, v] : r.proportions) p[l] = v;
  j["proportions"] = p;
  return j;
}

const json& shipped_document(const std::string& rel_path) {
  const auto& docs = store().docs;
  auto it = docs.find(rel_path);
  if (it == docs.end()) fail(ErrorKind::Io, "no shipped document " + rel_path);
  return it->second;
}

std::vector<std::string> shipped_paths() {
  std::vector<std::string> out;
  for (const auto& [p, d] : store().docs) out.push_back(p);
  return out;
}

}  // namespace callsynth
