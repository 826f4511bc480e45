#include "callsynth/prompts.hpp"

#include "callsynth/error.hpp"
#include "callsynth/fixtures.hpp"

namespace callsynth {

namespace {

std::string text_of(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) out += '\n';
      out += v[i].get<std::string>();
    }
    return out;
  }
  fail(ErrorKind::InvalidConfig, "prompt text must be a string or list of lines");
}

void overlay(PromptSet& p, const json& templates) {
  for (const auto& [task, t] : templates.items()) {
    auto& dst = p.templates[task];
    if (t.contains("system")) dst.system = text_of(t["system"]);
    if (t.contains("user")) dst.user = text_of(t["user"]);
  }
}

}  // namespace

const PromptTemplate& PromptSet::get(const std::string& task) const {
  auto it = templates.find(task);
  if (it == templates.end()) fail(ErrorKind::InvalidConfig, "no prompt template for task '" + task + "'");
  return it->second;
}

const PromptSet& default_prompts() {
  static const PromptSet p = [] {
    PromptSet s;
    overlay(s, shipped_document("prompts.json"));
    return s;
  }();
  return p;
}

PromptSet prompt_set_from_json(const json& j) {
  PromptSet p = default_prompts();
  try {
    p.name = j.at("name").get<std::string>();
    if (j.contains("templates")) overlay(p, j["templates"]);
  } catch (const json::exception& e) {
    fail(ErrorKind::InvalidConfig, std::string("prompt set: ") + e.what());
  }
  return p;
}

json to_json(const PromptSet& p) {
  json t = json::object();
  for (const auto& [task, tpl] : p.templates) t[task] = {{"system", tpl.system}, {"user", tpl.user}};
  return {{"name", p.name}, {"templates", t}};
}

}  // namespace callsynth
