#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "shieldsql/defenses.hpp"
#include "shieldsql/synthesis.hpp"
#include "test_support.hpp"

using namespace shieldsql;

TEST_CASE("sqd rejects exact pattern tokens and allows unrelated questions") {
  auto schema = students_schema();
  std::vector<SecurityConstraint> constraints = {students_constraint_column()};
  auto embedder = fallback_embedder();

  auto reject = sqd("Which students have a disability?", schema, constraints, 0.8, embedder);
  CHECK(reject.rejected());
  CHECK(reject.score.value() == Catch::Approx(1.0));
  CHECK_FALSE(reject.evidence.empty());

  // Derived oracle: trigram cosine of every kept token against the pattern
  // stays below 0.8 for this question.
  std::string question = "What is the maximum age?";
  auto allow = sqd(question, schema, constraints, 0.8, embedder);
  CHECK_FALSE(allow.rejected());

  auto empty = sqd("Which students have a disability?", schema, {}, 0.8, embedder);
  CHECK_FALSE(empty.rejected());
}

TEST_CASE("sqd is monotone in tau") {
  auto schema = students_schema();
  std::vector<SecurityConstraint> constraints = {students_constraint()};
  auto embedder = fallback_embedder();
  const char* questions[] = {
      "Which students have a disability?",
      "List every student full name please",
      "What is the average score of the class?",
      "Show the identifier of each person",
  };
  for (const char* q : questions) {
    bool prev_rejected = true;
    for (double tau : {0.2, 0.4, 0.6, 0.8, 0.95, 1.0}) {
      bool rejected = sqd(q, schema, constraints, tau, embedder).rejected();
      if (!prev_rejected) CHECK_FALSE(rejected);  // raising tau never re-rejects
      prev_rejected = rejected;
    }
  }
}

TEST_CASE("sqd stems and drops stopwords before matching") {
  DatabaseSchema schema;
  schema.tables.push_back({"t", {{"salary", ColumnType::Text, false}}});
  SecurityConstraint c;
  c.id = "sal";
  c.description = "salary is confidential";
  c.target_fields = {{"t", "salary"}};
  c.scope = ConstraintScope::ColumnLevel;
  auto embedder = fallback_embedder();
  // "salaries" stems to "salar", which the trigram space puts at 0.866
  // against the column name; unstemmed it would sit lower.
  auto v = sqd("What are the salaries of the managers?", schema, {c}, 0.8, embedder);
  CHECK(v.rejected());
  // The stopword "what" never matches anything by itself.
  auto w = sqd("What is it?", schema, {c}, 0.8, embedder);
  CHECK_FALSE(w.rejected());
}

TEST_CASE("ssa matches sensitive patterns in any query of the set") {
  auto schema = students_schema();
  auto patterns = build_sensitive_set(schema, {students_constraint_column()});

  auto r1 = ssa({"SELECT full_name, disability FROM Students"}, patterns);
  CHECK(r1.rejected());
  REQUIRE_FALSE(r1.evidence.empty());
  CHECK(r1.evidence[0].first == "disability");
  CHECK(r1.evidence[0].second == "query 1");

  CHECK_FALSE(ssa({"SELECT MAX(age) FROM Students"}, patterns).rejected());
  CHECK_FALSE(ssa({}, patterns).rejected());
}

TEST_CASE("ssa is invariant under whitespace and keyword case") {
  auto schema = students_schema();
  auto patterns = build_sensitive_set(schema, {students_constraint_column()});
  auto a = ssa({"SELECT disability FROM Students"}, patterns);
  auto b = ssa({"select   DISABILITY\nfrom students"}, patterns);
  CHECK(a.rejected() == b.rejected());
  CHECK(a.evidence.size() == b.evidence.size());
}

TEST_CASE("dem rejects on output lineage and on cell values") {
  testsupport::TempDir dir("dem1");
  Database db(testsupport::students_db(dir));
  auto schema = students_schema();

  auto patterns = build_sensitive_set(schema, {students_constraint_column()});
  auto r1 = dem({"SELECT disability FROM Students"}, patterns, db);
  CHECK(r1.rejected());

  CHECK_FALSE(dem({"SELECT COUNT(*) FROM Students"}, patterns, db).rejected());

  // Value pattern: a cell equal to the qualification literal triggers.
  SecurityConstraint value_constraint;
  value_constraint.id = "v";
  value_constraint.description = "records of students with dyslexia are protected";
  value_constraint.target_fields = {{"Students", "full_name"}};
  value_constraint.qualification =
      Qualification{{"Students", "disability"}, QualOp::Eq, "dyslexia"};
  value_constraint.scope = ConstraintScope::Hybrid;
  auto vp = build_sensitive_set(schema, {value_constraint});
  auto r2 = dem({"SELECT disability FROM Students WHERE id = 2"}, vp, db);
  CHECK(r2.rejected());

  // A count query never materializes the literal.
  CHECK_FALSE(dem({"SELECT COUNT(*) FROM Students WHERE id = 2"}, vp, db).rejected());

  // Numeric value patterns match numeric result cells.
  SecurityConstraint numeric_constraint;
  numeric_constraint.id = "n";
  numeric_constraint.description = "records with the protected score are restricted";
  numeric_constraint.target_fields = {{"Students", "full_name"}};
  numeric_constraint.qualification = Qualification{{"Students", "score"}, QualOp::Eq, "49"};
  numeric_constraint.scope = ConstraintScope::Hybrid;
  auto np = build_sensitive_set(schema, {numeric_constraint});
  CHECK(dem({"SELECT score FROM Students WHERE id = 7"}, np, db).rejected());
  CHECK_FALSE(dem({"SELECT score FROM Students WHERE id = 1"}, np, db).rejected());
}

TEST_CASE("dem skips non-executable queries with an evidence note") {
  testsupport::TempDir dir("dem2");
  Database db(testsupport::students_db(dir));
  auto schema = students_schema();
  auto patterns = build_sensitive_set(schema, {students_constraint_column()});

  auto v = dem({"SELECT ghost FROM Students", "SELECT MAX(age) FROM Students"}, patterns, db);
  CHECK_FALSE(v.rejected());
  REQUIRE_FALSE(v.evidence.empty());
  CHECK(v.evidence[0].first.find("skipped") != std::string::npos);
  CHECK(v.evidence[0].second == "query 1");
}

TEST_CASE("dem reject is always evidence-backed") {
  testsupport::TempDir dir("dem3");
  Database db(testsupport::students_db(dir));
  auto schema = students_schema();
  auto patterns = build_sensitive_set(schema, {students_constraint(),
                                               students_constraint_column()});
  const char* sets[][2] = {
      {"SELECT full_name FROM Students", "SELECT disability FROM Students"},
      {"SELECT id FROM Students", "SELECT COUNT(*) FROM Students"},
      {"SELECT * FROM Students", "SELECT age FROM Students"},
  };
  for (const auto& set : sets) {
    auto v = dem({set[0], set[1]}, patterns, db);
    if (v.rejected()) CHECK_FALSE(v.evidence.empty());
  }
}

TEST_CASE("dp_perturb leaves non-numeric cells alone and is seed-deterministic") {
  ResultTable t;
  t.column_names = {"name", "score"};
  t.rows = {{Cell{std::string("alice")}, Cell{int64_t{88}}},
            {Cell{std::monostate{}}, Cell{2.5}}};

  SECTION("text-only tables pass through unchanged") {
    ResultTable text_only;
    text_only.column_names = {"name"};
    text_only.rows = {{Cell{std::string("a")}}, {Cell{std::string("b")}}};
    Rng rng(1);
    auto out = dp_perturb(text_only, 1.0, 1.0, rng);
    CHECK(equivalent(out, text_only));
  }

  SECTION("fixed seed reproduces bit-identical noise") {
    Rng r1(42), r2(42);
    auto a = dp_perturb(t, 1.0, 1.0, r1);
    auto b = dp_perturb(t, 1.0, 1.0, r2);
    REQUIRE(a.rows.size() == b.rows.size());
    for (size_t i = 0; i < a.rows.size(); ++i)
      for (size_t k = 0; k < a.rows[i].size(); ++k) CHECK(a.rows[i][k] == b.rows[i][k]);
    // Text and null cells are untouched.
    CHECK(std::get<std::string>(a.rows[0][0]) == "alice");
    CHECK(std::holds_alternative<std::monostate>(a.rows[1][0]));
    // Numeric cells moved.
    CHECK(std::holds_alternative<double>(a.rows[0][1]));
  }

  SECTION("empirical mean absolute noise approaches sensitivity/epsilon") {
    for (double eps : {0.1, 0.5, 1.0}) {
      Rng rng(7);
      double sum = 0;
      const int draws = 10000;
      ResultTable one;
      one.column_names = {"v"};
      one.rows = {{Cell{0.0}}};
      for (int i = 0; i < draws; ++i) {
        auto noisy = dp_perturb(one, eps, 1.0, rng);
        sum += std::abs(std::get<double>(noisy.rows[0][0]));
      }
      double mean = sum / draws;
      double want = 1.0 / eps;
      CHECK(std::abs(mean - want) / want < 0.05);
    }
  }

  SECTION("parameter validation") {
    Rng rng(1);
    CHECK_THROWS_AS(dp_perturb(t, 0.0, 1.0, rng), std::invalid_argument);
    CHECK_THROWS_AS(dp_perturb(t, 1.0, 0.0, rng), std::invalid_argument);
  }
}

TEST_CASE("guard reads the tagged verdict and fails closed") {
  testsupport::TempDir dir("guard1");
  std::string db_path = testsupport::students_db(dir);
  auto sample = golden_samples(db_path)[2];

  MockChatClient says_unsafe;
  says_unsafe.set_default({"<safety_analysis>leaks identities</safety_analysis>"
                           "<verdict>unsafe</verdict>"
                           "<sql_analysis>complement</sql_analysis>"
                           "<sql>SELECT 1</sql>"});
  CHECK(guard(sample, sample.gold_sql, says_unsafe).rejected());

  MockChatClient says_safe;
  says_safe.set_default({"<safety_analysis>aggregate only</safety_analysis>"
                         "<verdict>safe</verdict>"
                         "<sql_analysis>count</sql_analysis>"
                         "<sql>SELECT COUNT(*) FROM Students</sql>"});
  CHECK_FALSE(guard(sample, sample.gold_sql, says_safe).rejected());

  MockChatClient rambles;
  rambles.set_default({"this response has no verdict tag at all"});
  auto v = guard(sample, sample.gold_sql, rambles);
  CHECK(v.rejected());
  REQUIRE_FALSE(v.evidence.empty());
  CHECK(v.evidence[0].first == "unparseable");
}

TEST_CASE("ssa and dem agree with brute-force oracles over generated samples") {
  testsupport::TempDir dir("def_oracle");
  Database db(testsupport::students_db(dir));
  auto schema = students_schema();
  auto constraint = students_constraint();
  auto patterns = build_sensitive_set(schema, {constraint});

  // A mixed fixture set: generated attack sequences plus benign singletons.
  std::vector<std::vector<std::string>> sample_sets;
  const Pattern seven[] = {Pattern::DI, Pattern::EO, Pattern::BP, Pattern::CQ,
                           Pattern::BE, Pattern::AI, Pattern::PT};
  uint64_t seed = 0;
  for (Pattern p : seven) {
    Rng rng(seed++);
    sample_sets.push_back(gen_pattern_sequence(p, schema, constraint, rng));
  }
  sample_sets.push_back({"SELECT MAX(age) FROM Students"});
  sample_sets.push_back({"SELECT COUNT(*) FROM Students"});
  sample_sets.push_back({"SELECT disability FROM Students"});

  for (const auto& set : sample_sets) {
    // SSA oracle: plain substring scan of each normalized query.
    bool oracle_ssa = false;
    for (const auto& q : set) {
      std::string norm = normalize_for_match(q);
      for (const auto& p : patterns.patterns)
        if (norm.find(p) != std::string::npos) oracle_ssa = true;
    }
    CHECK(ssa(set, patterns).rejected() == oracle_ssa);

    // DEM oracle: lineage-output intersection with sensitive columns.
    bool oracle_dem = false;
    for (const auto& q : set) {
      try {
        execute(db, q);
        auto lin = sql::output_lineage(q, schema);
        for (const auto& col : lin.output_columns)
          if (patterns.column_patterns.count(to_lower(col.column))) oracle_dem = true;
      } catch (const std::exception&) {
        continue;
      }
    }
    CHECK(dem(set, patterns, db).rejected() == oracle_dem);
  }
}
