#include "doctest.h"

#include "escher/construction.hpp"

using escher::Construction;
using escher::parse_construction;
using escher::TaskDomain;

TEST_CASE("parses each construction variant") {
  const Construction cp = parse_construction(R"({"task":"cp","circles":[[0.5,0.5,0.1]]})");
  CHECK(cp.task() == TaskDomain::CP);
  REQUIRE(cp.circles().size() == 1);
  CHECK(cp.circles()[0].r == 0.1);

  const Construction kn = parse_construction(R"({"task":"kn","vectors":[[2,0],[0,-2]]})");
  CHECK(kn.task() == TaskDomain::KN);
  CHECK(kn.vectors()[1][1] == -2);

  const Construction ht = parse_construction(R"({"task":"ht","points":[[0.5,0.25]]})");
  CHECK(ht.task() == TaskDomain::HT);
  CHECK(ht.points()[0].y == 0.25);
}

TEST_CASE("rejects malformed documents") {
  using escher::ConstructionParseError;
  CHECK_THROWS_AS(parse_construction("not json"), ConstructionParseError);
  CHECK_THROWS_AS(parse_construction(R"([1,2,3])"), ConstructionParseError);
  CHECK_THROWS_AS(parse_construction(R"({"circles":[[0.5,0.5,0.1]]})"), ConstructionParseError);
  CHECK_THROWS_AS(parse_construction(R"({"task":"xx","circles":[]})"), escher::Error);
  CHECK_THROWS_AS(parse_construction(R"({"task":"cp","circles":[[0.5,0.5]]})"),
                  ConstructionParseError);
  CHECK_THROWS_AS(parse_construction(R"({"task":"ht","points":[[0.5]]})"), ConstructionParseError);
  CHECK_THROWS_AS(parse_construction(R"({"task":"kn"})"), ConstructionParseError);
}

TEST_CASE("kn vector components must be integers") {
  CHECK_THROWS_AS(parse_construction(R"({"task":"kn","vectors":[[1.5,0]]})"),
                  escher::ConstructionParseError);
}

TEST_CASE("dump and parse round-trip preserves values") {
  const std::string text =
      R"({"task":"cp","circles":[[0.123456789012345,0.5,0.0625],[0.9,0.9,0.05]]})";
  const Construction c = parse_construction(text);
  const Construction back = parse_construction(escher::dump_construction(c));
  REQUIRE(back.circles().size() == 2);
  CHECK(back.circles()[0].x == c.circles()[0].x);
  CHECK(back.circles()[0].r == c.circles()[0].r);
}
