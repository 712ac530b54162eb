#include <catch2/catch_amalgamated.hpp>

#include "shieldsql/fixtures.hpp"
#include "shieldsql/sql/lineage.hpp"

using namespace shieldsql;
using sql::output_lineage;

namespace {
std::set<QualifiedColumn> cols(std::initializer_list<const char*> names) {
  std::set<QualifiedColumn> out;
  for (const char* n : names) out.insert(parse_qualified(n));
  return out;
}
}  // namespace

TEST_CASE("projection lineage resolves plain columns") {
  auto schema = students_schema();
  auto lin = output_lineage("SELECT full_name, disability FROM Students", schema);
  CHECK(lin.output_columns == cols({"Students.full_name", "Students.disability"}));
}

TEST_CASE("star expansion covers all table columns") {
  auto schema = students_schema();
  auto lin = output_lineage("SELECT * FROM Students", schema);
  CHECK(lin.output_columns.size() == 6);
  CHECK(lin.output_columns ==
        cols({"Students.id", "Students.full_name", "Students.disability", "Students.score",
              "Students.age", "Students.score_rank"}));
}

TEST_CASE("where-clause columns are referenced but not output") {
  auto schema = students_schema();
  auto lin = output_lineage("SELECT full_name FROM Students WHERE disability IS NULL", schema);
  CHECK(lin.output_columns == cols({"Students.full_name"}));
  CHECK(lin.referenced_columns == cols({"Students.full_name", "Students.disability"}));
}

TEST_CASE("aggregates contribute their argument column") {
  auto schema = students_schema();
  auto lin = output_lineage("SELECT SUM(id) FROM Students WHERE disability IS NOT NULL", schema);
  CHECK(lin.output_columns == cols({"Students.id"}));
  CHECK(lin.referenced_columns.count(parse_qualified("Students.disability")) == 1);
  // COUNT(*) alone exposes no column.
  auto lin2 = output_lineage("SELECT COUNT(*) FROM Students", schema);
  CHECK(lin2.output_columns.empty());
}

TEST_CASE("aliases and subqueries resolve to base columns") {
  auto schema = students_schema();
  auto lin = output_lineage("SELECT s.nm FROM (SELECT full_name AS nm FROM Students) s", schema);
  CHECK(lin.output_columns == cols({"Students.full_name"}));

  auto lin2 = output_lineage(
      "SELECT t.full_name FROM Students AS t WHERE t.score = (SELECT MIN(score) FROM Students)",
      schema);
  CHECK(lin2.output_columns == cols({"Students.full_name"}));
  CHECK(lin2.referenced_columns == cols({"Students.full_name", "Students.score"}));
}

TEST_CASE("order by and join columns are referenced") {
  DatabaseSchema schema;
  schema.tables.push_back({"a", {{"id", ColumnType::Integer, true}, {"v", ColumnType::Text, false}}});
  schema.tables.push_back({"b", {{"id", ColumnType::Integer, true}, {"w", ColumnType::Text, false}}});
  auto lin = output_lineage("SELECT a.v FROM a JOIN b ON a.id = b.id ORDER BY b.w", schema);
  CHECK(lin.output_columns == cols({"a.v"}));
  CHECK(lin.referenced_columns == cols({"a.v", "a.id", "b.id", "b.w"}));
}

TEST_CASE("set operations union output lineage") {
  auto schema = students_schema();
  auto lin = output_lineage("SELECT full_name FROM Students UNION SELECT disability FROM Students",
                            schema);
  CHECK(lin.output_columns == cols({"Students.full_name", "Students.disability"}));
}

TEST_CASE("qualified star expands through aliases") {
  auto schema = students_schema();
  auto lin = output_lineage("SELECT s.* FROM Students s WHERE s.id > 1", schema);
  CHECK(lin.output_columns.size() == 6);
}

TEST_CASE("order by a projection alias resolves to the base column") {
  auto schema = students_schema();
  auto lin = output_lineage("SELECT full_name AS nm FROM Students ORDER BY nm", schema);
  CHECK(lin.output_columns == cols({"Students.full_name"}));
  CHECK(lin.referenced_columns == cols({"Students.full_name"}));
}

TEST_CASE("unresolved identifiers are named in the error") {
  auto schema = students_schema();
  try {
    output_lineage("SELECT nonexistent FROM Students", schema);
    FAIL("expected analysis error");
  } catch (const AnalysisError& e) {
    CHECK(e.identifier == "nonexistent");
  }
  CHECK_THROWS_AS(output_lineage("SELECT x FROM missing_table", schema), AnalysisError);
}

TEST_CASE("lineage is invariant under whitespace and keyword case") {
  auto schema = students_schema();
  auto a = output_lineage("SELECT full_name FROM Students WHERE disability IS NULL", schema);
  auto b = output_lineage("select   full_name\n from students\twhere DISABILITY is null", schema);
  CHECK(a.output_columns == b.output_columns);
  CHECK(a.referenced_columns == b.referenced_columns);
}

TEST_CASE("output columns are a subset of referenced columns") {
  auto schema = students_schema();
  const char* queries[] = {
      "SELECT * FROM Students",
      "SELECT full_name FROM Students WHERE score > 50",
      "SELECT MAX(score) FROM Students GROUP BY age",
      "SELECT s.id FROM Students s JOIN Students t ON s.id = t.id",
      "SELECT full_name FROM Students UNION SELECT disability FROM Students",
      "SELECT AVG(id) FROM (SELECT id FROM Students ORDER BY score DESC LIMIT 3)",
  };
  for (const char* q : queries) {
    auto lin = output_lineage(q, schema);
    for (const auto& c : lin.output_columns) CHECK(lin.referenced_columns.count(c) == 1);
  }
}

TEST_CASE("golden pattern sqls all analyze against the fixture schema") {
  auto schema = students_schema();
  for (Pattern p : all_patterns())
    for (const auto& q : golden_pattern_sqls(p)) CHECK_NOTHROW(output_lineage(q, schema));
}
