#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <fstream>
#include <random>

#include "shieldsql/dataset.hpp"
#include "shieldsql/fixtures.hpp"
#include "test_support.hpp"

using namespace shieldsql;

TEST_CASE("dataset io: empty file, round-trip, missing field") {
  testsupport::TempDir dir("core1");

  SECTION("empty file loads to an empty list") {
    std::string path = dir.file("empty.jsonl");
    std::ofstream(path).close();
    CHECK(load_dataset(path).empty());
  }

  SECTION("round-trip of a three-sample fixture is byte-identical") {
    std::string db = testsupport::students_db(dir);
    auto all = golden_samples(db);
    std::vector<InteractionSample> subset(all.begin(), all.begin() + 3);
    std::string p1 = dir.file("a.jsonl"), p2 = dir.file("b.jsonl");
    save_dataset(subset, p1);
    auto loaded = load_dataset(p1);
    save_dataset(loaded, p2);
    std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
    std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(s1 == s2);
    CHECK_FALSE(s1.empty());
  }

  SECTION("missing label field names the line") {
    std::string db = testsupport::students_db(dir);
    auto sample = golden_samples(db)[0];
    ojson j = to_json(sample);
    j.erase("label");
    std::string path = dir.file("broken.jsonl");
    {
      std::ofstream out(path);
      out << canonical_record(sample) << '\n' << j.dump() << '\n';
    }
    try {
      load_dataset(path);
      FAIL("expected parse error");
    } catch (const IoError& e) {
      std::string msg = e.what();
      CHECK(msg.find("line 2") != std::string::npos);
      CHECK(msg.find("label") != std::string::npos);
    }
  }
}

TEST_CASE("round-trip identity over randomized valid samples") {
  testsupport::TempDir dir("core2");
  std::string db = testsupport::students_db(dir);
  std::mt19937 rng(99);
  auto goldens = golden_samples(db);

  std::vector<InteractionSample> samples;
  for (int i = 0; i < 40; ++i) {
    InteractionSample s = goldens[rng() % goldens.size()];
    s.id = "rand-" + std::to_string(i);
    if (rng() % 2) {
      HCot h;
      h.safety_cot = "step " + std::to_string(rng() % 100);
      h.verdict = s.label;
      h.sql_cot = "derive " + std::to_string(rng() % 100);
      h.sql = s.gold_sql;
      s.hcot = h;
    }
    if (rng() % 3 == 0 && !s.history.empty()) s.history.pop_back();
    samples.push_back(std::move(s));
  }
  std::string p1 = dir.file("r1.jsonl"), p2 = dir.file("r2.jsonl");
  save_dataset(samples, p1);
  save_dataset(load_dataset(p1), p2);
  std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
  std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(s1 == s2);
}

TEST_CASE("round-trip survives json-significant characters in text fields") {
  testsupport::TempDir dir("core_esc");
  std::string db = testsupport::students_db(dir);
  InteractionSample s = golden_samples(db)[0];
  s.id = "esc-1";
  s.question = "What about \"quoted\" names,\nnewlines\tand emoji \xF0\x9F\x94\x92 and \\backslash?";
  HCot h;
  h.safety_cot = "line one\nline two with <angle> brackets & ampersand";
  h.verdict = s.label;
  h.sql_cot = "uses 'single quotes' and é accents";
  h.sql = s.gold_sql;
  s.hcot = h;

  std::string p1 = dir.file("esc1.jsonl"), p2 = dir.file("esc2.jsonl");
  save_dataset({s}, p1);
  auto loaded = load_dataset(p1);
  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0].question == s.question);
  CHECK(loaded[0].hcot->safety_cot == h.safety_cot);
  save_dataset(loaded, p2);
  std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
  std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(b1 == b2);
  // One record stays one line despite embedded newlines.
  CHECK(std::count(b1.begin(), b1.end(), '\n') == 1);
}

TEST_CASE("validate_sample") {
  testsupport::TempDir dir("core3");
  std::string db_path = testsupport::students_db(dir);
  Database db(db_path);
  auto goldens = golden_samples(db_path);

  SECTION("well-formed SA sample has an empty report") {
    const auto& sa = goldens.back();
    REQUIRE(sa.pattern == Pattern::SA);
    auto report = validate_sample(sa, db);
    CHECK(report.valid());
    // Determinism: same input, same report.
    CHECK(validate_sample(sa, db).violations == report.violations);
  }

  SECTION("pattern/label contradiction is reported") {
    InteractionSample s = goldens[0];
    REQUIRE(s.pattern == Pattern::DI);
    s.label = SafetyLabel::Safe;
    auto report = validate_sample(s, db);
    REQUIRE_FALSE(report.valid());
    bool found = false;
    for (const auto& v : report.violations)
      if (v.find("pattern/label contradiction") != std::string::npos) found = true;
    CHECK(found);
  }

  SECTION("gold SQL referencing a column absent from the schema") {
    InteractionSample s = goldens[0];
    s.gold_sql = "SELECT ghost_column FROM Students";
    auto report = validate_sample(s, db);
    REQUIRE_FALSE(report.valid());
    bool found = false;
    for (const auto& v : report.violations)
      if (v.find("unresolved column") != std::string::npos &&
          v.find("ghost_column") != std::string::npos)
        found = true;
    CHECK(found);
  }

  SECTION("unreachable database is an IO error, not a violation") {
    CHECK_THROWS_AS(validate_sample(goldens[0], dir.file("missing.db")), IoError);
  }

  SECTION("history longer than two turns is flagged") {
    InteractionSample s = goldens[0];
    for (int i = 0; i < 3; ++i) s.history.push_back({"q", "SELECT 1"});
    auto report = validate_sample(s, db);
    bool found = false;
    for (const auto& v : report.violations)
      if (v.find("history too long") != std::string::npos) found = true;
    CHECK(found);
  }
}

TEST_CASE("external records import into the canonical form") {
  testsupport::TempDir dir("core_imp");
  std::string db = testsupport::students_db(dir);
  auto canonical = golden_samples(db)[0];

  // Alternative spellings: db_id, utterance, query, numeric label,
  // [question, sql] history arrays, no pattern tag.
  ojson ext;
  ext["db_id"] = db;
  ext["schema"] = to_json(canonical.schema);
  ext["constraints"] = ojson::array({to_json(canonical.constraints[0])});
  ext["history"] = ojson::array({ojson::array({"first question", "SELECT id FROM Students"})});
  ext["utterance"] = "Show all names with status";
  ext["query"] = "SELECT full_name, disability FROM Students";
  ext["label"] = 0;

  auto imported = import_external_record(ext);
  CHECK(imported.db_ref == db);
  CHECK(imported.question == "Show all names with status");
  CHECK(imported.gold_sql == "SELECT full_name, disability FROM Students");
  CHECK(imported.label == SafetyLabel::Unsafe);
  CHECK(imported.pattern == Pattern::DI);  // default tag for unlabeled unsafe
  REQUIRE(imported.history.size() == 1);
  CHECK(imported.history[0].sql == "SELECT id FROM Students");
  CHECK_FALSE(imported.id.empty());

  // Canonical records pass through unchanged.
  auto same = import_external_record(to_json(canonical));
  CHECK(canonical_record(same) == canonical_record(canonical));

  // File-level import.
  std::string path = dir.file("external.jsonl");
  {
    std::ofstream out(path);
    out << ext.dump() << '\n';
  }
  CHECK(import_external_dataset(path).size() == 1);
}

TEST_CASE("schema invariants") {
  DatabaseSchema s;
  s.tables.push_back({"t", {{"a", ColumnType::Integer, false}, {"a", ColumnType::Text, false}}});
  s.tables.push_back({"t", {{"b", ColumnType::Integer, false}}});
  s.foreign_keys.push_back({"t", "missing", "u", "also_missing"});
  auto problems = s.check_invariants();
  CHECK(problems.size() >= 3);
}

TEST_CASE("constraint qualification presence matches scope") {
  auto schema = students_schema();
  SecurityConstraint c = students_constraint();
  c.qualification.reset();  // hybrid without qualification: invalid
  CHECK_FALSE(c.check(schema).empty());

  SecurityConstraint col = students_constraint_column();
  CHECK(col.check(schema).empty());
  col.qualification = Qualification{{"Students", "score"}, QualOp::Gt, "50"};
  CHECK_FALSE(col.check(schema).empty());
}
