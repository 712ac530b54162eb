#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <random>

#include "shieldsql/db.hpp"
#include "shieldsql/fixtures.hpp"
#include "test_support.hpp"

using namespace shieldsql;

namespace {

std::string file_checksum(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return hex64(fnv1a(data));
}

ResultTable table_of(std::vector<std::vector<Cell>> rows, bool ordered = false) {
  ResultTable t;
  t.order_sensitive = ordered;
  size_t arity = rows.empty() ? 0 : rows[0].size();
  for (size_t i = 0; i < arity; ++i) t.column_names.push_back("c" + std::to_string(i));
  t.rows = std::move(rows);
  return t;
}

}  // namespace

TEST_CASE("execute returns materialized rows") {
  testsupport::TempDir dir("exec1");
  Database db(testsupport::students_db(dir));

  auto r = execute(db, "SELECT 1+1");
  REQUIRE(r.rows.size() == 1);
  CHECK(std::get<int64_t>(r.rows[0][0]) == 2);

  // Hand-enumerated fixture: ten rows.
  auto count = execute(db, "SELECT COUNT(*) FROM Students");
  CHECK(std::get<int64_t>(count.rows[0][0]) == 10);

  CHECK_THROWS_AS(execute(db, "SELECT nonexistent FROM Students"), ExecError);
}

TEST_CASE("execution is read-only and rejects writes up front") {
  testsupport::TempDir dir("exec2");
  std::string path = testsupport::students_db(dir);
  std::string before = file_checksum(path);
  Database db(path);
  CHECK_THROWS_AS(execute(db, "DROP TABLE Students"), UnsupportedStatementError);
  CHECK_THROWS_AS(execute(db, "INSERT INTO Students VALUES (11,'x',NULL,1,1,1)"),
                  UnsupportedStatementError);
  execute(db, "SELECT * FROM Students");
  CHECK(file_checksum(path) == before);
}

TEST_CASE("row cap marks truncation") {
  testsupport::TempDir dir("exec3");
  Database db(testsupport::students_db(dir));
  ExecLimits limits;
  limits.max_rows = 3;
  auto r = execute(db, "SELECT id FROM Students", limits);
  CHECK(r.rows.size() == 3);
  CHECK(r.truncated);
}

TEST_CASE("order_sensitive comes from a top-level ORDER BY") {
  testsupport::TempDir dir("exec4");
  Database db(testsupport::students_db(dir));
  CHECK(execute(db, "SELECT id FROM Students ORDER BY id").order_sensitive);
  CHECK_FALSE(execute(db, "SELECT id FROM Students").order_sensitive);
}

TEST_CASE("equivalence: bag comparison when unordered") {
  auto a = table_of({{Cell{int64_t{1}}, Cell{std::string("a")}},
                     {Cell{int64_t{2}}, Cell{std::string("b")}}});
  auto b = table_of({{Cell{int64_t{2}}, Cell{std::string("b")}},
                     {Cell{int64_t{1}}, Cell{std::string("a")}}});
  CHECK(equivalent(a, b));

  auto c = table_of({{Cell{int64_t{1}}}, {Cell{int64_t{2}}}}, /*ordered=*/true);
  auto d = table_of({{Cell{int64_t{2}}}, {Cell{int64_t{1}}}}, /*ordered=*/true);
  CHECK_FALSE(equivalent(c, d));
  CHECK(equivalent(c, c));
}

TEST_CASE("equivalence normalization rules") {
  // Reals compared to six decimal places; integers widen to reals.
  auto a = table_of({{Cell{1.0000004}}});
  auto b = table_of({{Cell{1.0}}});
  CHECK(equivalent(a, b));
  auto a2 = table_of({{Cell{1.000001}}});
  CHECK_FALSE(equivalent(a2, b));
  CHECK(equivalent(table_of({{Cell{int64_t{3}}}}), table_of({{Cell{3.0}}})));

  // Trailing whitespace stripped; null stays distinct from empty text.
  CHECK(equivalent(table_of({{Cell{std::string("x  ")}}}), table_of({{Cell{std::string("x")}}})));
  CHECK_FALSE(equivalent(table_of({{Cell{std::monostate{}}}}),
                         table_of({{Cell{std::string("")}}})));

  // Tiny negatives land on the same normal form as zero.
  CHECK(equivalent(table_of({{Cell{-1e-9}}}), table_of({{Cell{0.0}}})));
  CHECK(equivalent(table_of({{Cell{-0.0}}}), table_of({{Cell{int64_t{0}}}})));

  // Arity mismatch always differs; column names are ignored.
  auto one = table_of({{Cell{int64_t{1}}}});
  auto two = table_of({{Cell{int64_t{1}}, Cell{int64_t{1}}}});
  CHECK_FALSE(equivalent(one, two));
}

TEST_CASE("equivalence laws on random fixture query pairs") {
  testsupport::TempDir dir("exec5");
  Database db(testsupport::students_db(dir));

  // A pool of queries; several are bag-equal by construction.
  const std::vector<std::string> pool = {
      "SELECT id FROM Students",
      "SELECT id FROM Students ORDER BY id",
      "SELECT id FROM Students ORDER BY id DESC",
      "SELECT id FROM Students WHERE id <= 5",
      "SELECT full_name FROM Students",
      "SELECT full_name FROM Students WHERE disability IS NULL",
      "SELECT score FROM Students",
      "SELECT COUNT(*) FROM Students",
      "SELECT AVG(score) FROM Students",
      "SELECT id, score FROM Students WHERE score > 60",
  };
  std::vector<ResultTable> results;
  for (const auto& q : pool) results.push_back(execute(db, q));

  // Brute-force oracle: sort normalized rows then compare (or compare the
  // raw sequences when either side is order sensitive).
  auto oracle = [](const ResultTable& x, const ResultTable& y) {
    if (x.arity() != y.arity()) return false;
    std::vector<std::vector<std::string>> nx, ny;
    for (const auto& r : x.rows) nx.push_back(normalize_row(r));
    for (const auto& r : y.rows) ny.push_back(normalize_row(r));
    if (x.order_sensitive || y.order_sensitive) return nx == ny;
    std::sort(nx.begin(), nx.end());
    std::sort(ny.begin(), ny.end());
    return nx == ny;
  };

  std::mt19937 rng(7);
  int pairs = 0;
  for (int t = 0; t < 120; ++t) {
    const auto& a = results[rng() % results.size()];
    const auto& b = results[rng() % results.size()];
    CHECK(equivalent(a, b) == oracle(a, b));
    // reflexivity and symmetry
    CHECK(equivalent(a, a));
    CHECK(equivalent(a, b) == equivalent(b, a));
    ++pairs;
  }
  REQUIRE(pairs >= 50);

  // Transitivity over the pool.
  for (const auto& a : results)
    for (const auto& b : results)
      for (const auto& c : results)
        if (equivalent(a, b) && equivalent(b, c)) CHECK(equivalent(a, c));
}

TEST_CASE("timeout interrupts runaway queries") {
  testsupport::TempDir dir("exec6");
  Database db(testsupport::students_db(dir));
  ExecLimits limits;
  limits.timeout_seconds = 0.05;
  // Five-way cross join of 10 rows = 100k combinations with sorting: slow enough.
  CHECK_THROWS_AS(execute(db,
                          "SELECT COUNT(*) FROM Students a, Students b, Students c, Students d, "
                          "Students e, Students f WHERE a.id + b.id + c.id + d.id + e.id + f.id "
                          "> 0",
                          limits),
                  TimeoutError);
}
