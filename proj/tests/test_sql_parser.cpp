#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "shieldsql/sql/parser.hpp"

using namespace shieldsql;
using namespace shieldsql::sql;

TEST_CASE("parses a minimal select") {
  auto stmt = parse_sql("SELECT 1");
  REQUIRE(stmt->cores.size() == 1);
  REQUIRE(stmt->cores[0].columns.size() == 1);
}

TEST_CASE("syntax error reports byte offset") {
  try {
    parse_sql("SELEC 1");
    FAIL("expected syntax error");
  } catch (const SqlSyntaxError& e) {
    CHECK(e.offset == 0);
  }
}

TEST_CASE("non-select statements are rejected as unsupported") {
  CHECK_THROWS_AS(parse_sql("DROP TABLE Students"), UnsupportedStatementError);
  CHECK_THROWS_AS(parse_sql("INSERT INTO t VALUES (1)"), UnsupportedStatementError);
  CHECK_THROWS_AS(parse_sql("UPDATE t SET x = 1"), UnsupportedStatementError);
  CHECK_THROWS_AS(parse_sql("WITH q AS (SELECT 1) SELECT * FROM q"), UnsupportedStatementError);
}

TEST_CASE("only a single statement is accepted") {
  CHECK_THROWS_AS(parse_sql("SELECT 1; SELECT 2"), SqlSyntaxError);
  CHECK_NOTHROW(parse_sql("SELECT 1;"));
  CHECK_THROWS_AS(parse_sql(""), SqlSyntaxError);
  CHECK_THROWS_AS(parse_sql("   "), SqlSyntaxError);
}

TEST_CASE("dialect coverage") {
  // Joins, aliases, subqueries, aggregates, set ops, ordering, limits.
  CHECK_NOTHROW(parse_sql("SELECT a.x, b.y FROM t1 AS a JOIN t2 b ON a.id = b.id WHERE a.x > 3"));
  CHECK_NOTHROW(parse_sql("SELECT x FROM (SELECT x FROM t) WHERE x IS NOT NULL"));
  CHECK_NOTHROW(parse_sql("SELECT COUNT(*), SUM(v), AVG(v) FROM t GROUP BY k HAVING COUNT(*) > 1"));
  CHECK_NOTHROW(parse_sql("SELECT x FROM t UNION SELECT y FROM u ORDER BY 1 LIMIT 5"));
  CHECK_NOTHROW(parse_sql("SELECT x FROM t WHERE x BETWEEN 1 AND 9 AND y IN (1, 2, 3)"));
  CHECK_NOTHROW(parse_sql("SELECT x FROM t WHERE y IN (SELECT y FROM u WHERE z = 'a')"));
  CHECK_NOTHROW(parse_sql("SELECT x FROM t WHERE name LIKE 'A%' OR NOT x = 1"));
  CHECK_NOTHROW(parse_sql("SELECT DISTINCT x FROM t ORDER BY x DESC LIMIT 10 OFFSET 2"));
  CHECK_NOTHROW(
      parse_sql("SELECT AVG(id) FROM (SELECT id FROM t ORDER BY s DESC LIMIT (SELECT COUNT(*) - 1 "
                "FROM t))"));
  CHECK_NOTHROW(parse_sql("SELECT \"quoted col\" FROM `weird table`"));
  CHECK_NOTHROW(parse_sql("SELECT x FROM t -- trailing comment"));
  CHECK_NOTHROW(parse_sql("SELECT /* inline */ x FROM t"));
}

TEST_CASE("order-by flag is captured") {
  CHECK(parse_sql("SELECT x FROM t ORDER BY x")->has_order_by());
  CHECK_FALSE(parse_sql("SELECT x FROM t")->has_order_by());
  // ORDER BY inside a subquery does not make the statement order sensitive.
  CHECK_FALSE(parse_sql("SELECT x FROM (SELECT x FROM t ORDER BY x)")->has_order_by());
}

TEST_CASE("lexer pinpoints bad characters") {
  try {
    parse_sql("SELECT x FROM t WHERE y = $5");
    FAIL("expected syntax error");
  } catch (const SqlSyntaxError& e) {
    CHECK(e.offset == 26);
  }
}

TEST_CASE("string escapes and numeric forms") {
  CHECK_NOTHROW(parse_sql("SELECT 'it''s', 1.5, .25, 2e3, -4"));
  CHECK_THROWS_AS(parse_sql("SELECT 'unterminated"), SqlSyntaxError);
}

TEST_CASE("mangled inputs fail with exceptions, never crashes") {
  const std::string base =
      "SELECT full_name, COUNT(*) FROM Students WHERE score BETWEEN 1 AND 9 "
      "AND disability IN (SELECT disability FROM Students) ORDER BY 1 LIMIT 3";
  // Every prefix of a valid statement either parses or throws cleanly.
  for (size_t cut = 0; cut <= base.size(); ++cut) {
    try {
      parse_sql(base.substr(0, cut));
    } catch (const SqlSyntaxError&) {
    } catch (const UnsupportedStatementError&) {
    }
  }
  // Random byte soup likewise.
  std::mt19937 rng(31337);
  const std::string alphabet = "SELECT FROM WHERE()*,.;'\"`=<>0123456789abcXYZ_-%";
  for (int trial = 0; trial < 300; ++trial) {
    std::string text;
    size_t len = rng() % 40;
    for (size_t i = 0; i < len; ++i) text += alphabet[rng() % alphabet.size()];
    try {
      parse_sql(text);
    } catch (const SqlSyntaxError&) {
    } catch (const UnsupportedStatementError&) {
    }
  }
  SUCCEED("no crash on mangled input");
}
