#include <doctest.h>

#include <random>

#include "claimaudit/csv.hpp"
#include "claimaudit/errors.hpp"

using namespace claimaudit;

TEST_CASE("csv parses header and rows") {
  auto t = csv::parse("a,b,c\n1,2,3\n4,5,6\n");
  CHECK(t.header == std::vector<std::string>{"a", "b", "c"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0] == std::vector<std::string>{"1", "2", "3"});
  CHECK(t.column("b") == 1);
  CHECK(!t.column("missing"));
}

TEST_CASE("csv handles quoting, embedded separators and newlines") {
  auto t = csv::parse("id,text\n1,\"hello, \"\"world\"\"\"\n2,\"line1\nline2\"\n");
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][1] == "hello, \"world\"");
  CHECK(t.rows[1][1] == "line1\nline2");
}

TEST_CASE("csv accepts crlf line endings and missing trailing newline") {
  auto t = csv::parse("a,b\r\nx,y\r\nz,w");
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[1] == std::vector<std::string>{"z", "w"});
}

TEST_CASE("csv empty fields survive") {
  auto t = csv::parse("a,b,c\n,,\nx,,y\n");
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0] == std::vector<std::string>{"", "", ""});
  CHECK(t.rows[1] == std::vector<std::string>{"x", "", "y"});
}

TEST_CASE("csv unterminated quote is an error") {
  CHECK_THROWS_AS(csv::parse("a\n\"oops\n"), AuditError);
}

TEST_CASE("csv round-trips arbitrary field content") {
  std::mt19937 rng(20240811);
  const std::string alphabet = "abc,\"\n\r x|;";
  std::uniform_int_distribution<std::size_t> len(0, 8);
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);

  for (int trial = 0; trial < 200; ++trial) {
    csv::Table t;
    t.header = {"c0", "c1", "c2"};
    std::uniform_int_distribution<std::size_t> nrows(0, 5);
    const std::size_t rows = nrows(rng);
    for (std::size_t r = 0; r < rows; ++r) {
      std::vector<std::string> row;
      for (int c = 0; c < 3; ++c) {
        std::string field;
        const std::size_t n = len(rng);
        for (std::size_t i = 0; i < n; ++i) field.push_back(alphabet[pick(rng)]);
        row.push_back(std::move(field));
      }
      t.rows.push_back(std::move(row));
    }
    auto parsed = csv::parse(csv::to_string(t));
    REQUIRE(parsed.header == t.header);
    REQUIRE(parsed.rows.size() == t.rows.size());
    for (std::size_t r = 0; r < rows; ++r) {
      CHECK(parsed.rows[r] == t.rows[r]);
    }
  }
}
