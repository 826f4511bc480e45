#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "callsynth/evaluation.hpp"
#include "callsynth/generation.hpp"
#include "callsynth/llm.hpp"
#include "callsynth/reconstruction.hpp"

namespace callsynth::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalidInput = 2;
inline constexpr int kExitBackend = 3;
inline constexpr int kExitContract = 4;

int exit_code_for(ErrorKind k) noexcept;

struct ToolConfig {
  llm::BackendConfig backend;
  std::uint64_t seed = 0;
  std::size_t k_max = 100;
  std::size_t context_w = 2;
  double merge_threshold = 0.10;
  Weights weights;
  double turn_dispersion = 0.15;
  int disfluency_k = 4;
  bool trace_http = false;  // write redacted HTTP bodies next to the outputs
};

json to_json(const ToolConfig& c);
ToolConfig tool_config_from_json(const json& j, ToolConfig base = {});

// Flag values; unset ones leave the config file (or defaults) in place.
struct CommonFlags {
  std::optional<std::string> config_path;
  std::optional<std::string> backend;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> k_max;
  std::optional<std::size_t> context_w;
  std::optional<double> merge_threshold;
  std::optional<std::string> mock_script;
  std::optional<int> pool_width;
  bool trace = false;
};

ToolConfig resolve_config(const CommonFlags& flags);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& p);

// Written last into every --out directory.
struct RunManifest {
  std::string command;
  json arguments = json::object();
  json config = json::object();
  std::vector<std::pair<std::string, std::string>> inputs;   // path, sha256
  std::vector<std::pair<std::string, std::string>> outputs;  // path relative to --out, sha256
  std::string started_at;
  std::string finished_at;
  std::string status = "ok";
  std::string error;
  int exit_code = 0;
};

json to_json(const RunManifest& m);

struct GenerateArgs {
  std::string attrs_path;
  std::string method = "single_stage";
  std::string out_dir;
  std::optional<std::string> targets_path;  // "shipped" uses the tuning fixtures
  std::optional<std::string> prompts_path;
};

struct EvaluateArgs {
  std::string real_dir;
  std::string synth_dir;
  std::vector<std::string> dims;  // empty means all
  std::string out_dir;
  std::string language = "en";
};

struct ReconstructArgs {
  std::string synth_path;
  std::string attrs_path;
  std::string out_dir;
};

struct FixturesArgs {
  std::string action = "list";  // list | export
  std::string what = "all";     // all | disfluencies | turn-targets | refs
  std::optional<std::string> language;
  std::optional<std::string> dimension;
  std::optional<std::string> out_dir;
};

struct TuneArgs {
  std::vector<std::string> candidate_paths;
  std::vector<std::string> dataset_paths;
  std::string method = "single_stage";
  std::string out_dir;
  std::optional<std::string> targets_path;
};

int cmd_generate(const ToolConfig& cfg, const GenerateArgs& a, std::ostream& out, std::ostream& err);
int cmd_evaluate(const ToolConfig& cfg, const EvaluateArgs& a, std::ostream& out, std::ostream& err);
int cmd_reconstruct(const ToolConfig& cfg, const ReconstructArgs& a, std::ostream& out, std::ostream& err);
int cmd_fixtures(const FixturesArgs& a, std::ostream& out, std::ostream& err);
int cmd_tune(const ToolConfig& cfg, const TuneArgs& a, std::ostream& out, std::ostream& err);

// Index-paired corpora by identical file name. PairingMismatch names the orphan.
std::vector<CorpusPair> load_paired_corpora(const std::filesystem::path& real_dir,
                                            const std::filesystem::path& synth_dir, Language lang);

}  // namespace callsynth::cli
