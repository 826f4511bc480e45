#include <doctest.h>

#include <filesystem>
#include <set>

#include "callsynth/embedded.hpp"
#include "callsynth/fixtures.hpp"
#include "callsynth/json_io.hpp"

using namespace callsynth;

TEST_CASE("disfluency dictionary has the 26 published types") {
  const auto& d = disfluency_dictionary();
  REQUIRE(d.size() == 26);
  CHECK(d.front().name == "Stuttering");
  CHECK(d.back().name == "Disagreements");
  std::set<std::string> names;
  for (const auto& x : d) {
    names.insert(x.name);
    CHECK_FALSE(x.description.empty());
    CHECK_FALSE(x.example.empty());
  }
  CHECK(names.size() == 26);
}

TEST_CASE("turn target table covers all 16 cells") {
  const auto& t = turn_target_table();
  CHECK(t.mean_turns.size() == 16);
  CHECK(t.mean(Language::en, CallLengthCategory::very_short) == doctest::Approx(65.07));
  CHECK(t.mean(Language::en, CallLengthCategory::long_) == doctest::Approx(495.54));
  CHECK(t.mean(Language::fr_ca, CallLengthCategory::long_) == doctest::Approx(637.00));
  CHECK(t.mean(Language::es, CallLengthCategory::long_) == doctest::Approx(385.00));
  CHECK(t.mean(Language::fr, CallLengthCategory::medium) == doctest::Approx(304.00));
  TurnTargetTable empty;
  try {
    empty.mean(Language::en, CallLengthCategory::short_);
    FAIL("expected MissingCell");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MissingCell);
  }
}

TEST_CASE("reference distributions exist for every language and dimension") {
  for (auto l : kLanguages) {
    const auto set = shipped_references(l);
    CHECK(set.by_dimension.size() == 18);
    for (const auto& [d, ref] : set.by_dimension) {
      CHECK_FALSE(ref.proportions.empty());
      double sum = 0.0;
      for (const auto& [label, p] : ref.proportions) {
        CHECK(p >= 0.0);
        sum += p;
      }
      if (cardinality_of(d) == Cardinality::single_label) CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
  const auto& pro = reference(Language::en, Dimension::proactivity);
  REQUIRE(pro.proportions.size() == 1);
  CHECK(pro.proportions[0].first == "neutral");
  CHECK(pro.proportions[0].second == doctest::Approx(1.0));
}

TEST_CASE("reference documents reject labels outside the taxonomy") {
  json j = to_json(reference(Language::en, Dimension::emphasis));
  CHECK(reference_from_json(j).proportions.size() == reference(Language::en, Dimension::emphasis).proportions.size());
  j["proportions"]["loudness"] = 0.0;
  CHECK_THROWS_AS(reference_from_json(j), Error);
}

TEST_CASE("embedded data matches the data directory byte for byte") {
  namespace fs = std::filesystem;
  const fs::path root = fs::path(CALLSYNTH_SOURCE_DIR) / "data";
  std::size_t on_disk = 0;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file() && e.path().extension() == ".json") ++on_disk;
  CHECK(embedded_files().size() == on_disk);
  for (const auto& f : embedded_files()) CHECK(read_file(root / std::string(f.path)) == std::string(f.contents));
}
