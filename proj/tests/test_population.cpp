#include "doctest.h"

#include "escher/population.hpp"
#include "escher/rng.hpp"

using escher::AgentKind;
using escher::AgentRecord;
using escher::MapElitesConfig;
using escher::Population;

namespace {

AgentRecord make(escher::AgentId id, double score, std::int64_t created = 0,
                 AgentKind kind = AgentKind::Optimizer) {
  AgentRecord rec;
  rec.id = id;
  rec.kind = kind;
  rec.score = score;
  rec.created_at_iteration = created;
  rec.payload = "agent-" + std::to_string(id);
  return rec;
}

}  // namespace

TEST_CASE("insert below capacity keeps everyone") {
  Population pop(AgentKind::Optimizer, 50);
  for (escher::AgentId id = 0; id < 49; ++id) pop.insert(make(id, 1000.0 + id));
  const auto out = pop.insert(make(100, 900.0));
  CHECK(out.inserted);
  CHECK_FALSE(out.evicted.has_value());
  CHECK(pop.size() == 50);
}

TEST_CASE("insert rejects duplicates and kind mismatches") {
  Population pop(AgentKind::Optimizer, 10);
  pop.insert(make(1, 1200.0));
  CHECK_THROWS_AS(pop.insert(make(1, 1300.0)), escher::Error);
  CHECK_THROWS_AS(pop.insert(make(2, 0.5, 0, AgentKind::Task)), escher::Error);
}

TEST_CASE("weakest member is evicted at capacity") {
  Population pop(AgentKind::Optimizer, 3);
  pop.insert(make(1, 1000.0));
  pop.insert(make(2, 1100.0));
  pop.insert(make(3, 1200.0));
  const auto out = pop.insert(make(4, 1150.0));
  CHECK(out.inserted);
  REQUIRE(out.evicted.has_value());
  CHECK(*out.evicted == 1);
  CHECK(pop.contains(4));
}

TEST_CASE("a strictly weakest newcomer bounces off a full population") {
  Population pop(AgentKind::Optimizer, 50);
  for (escher::AgentId id = 0; id < 50; ++id) pop.insert(make(id, 1100.0 + id));
  const auto out = pop.insert(make(999, 900.0));
  CHECK_FALSE(out.inserted);
  CHECK_FALSE(out.evicted.has_value());
  CHECK(pop.size() == 50);
  CHECK_FALSE(pop.contains(999));
}

TEST_CASE("eviction ties remove the older record, never the newcomer") {
  Population pop(AgentKind::Optimizer, 2);
  pop.insert(make(1, 1000.0, 0));
  pop.insert(make(2, 1000.0, 3));
  const auto out = pop.insert(make(3, 1000.0, 5));
  CHECK(out.inserted);
  REQUIRE(out.evicted.has_value());
  CHECK(*out.evicted == 1);
  CHECK(pop.contains(3));
}

TEST_CASE("best follows max score with older-then-smaller-id ties") {
  Population pop(AgentKind::Task, 10);
  SUBCASE("singleton") {
    pop.insert(make(7, 0.4, 2, AgentKind::Task));
    CHECK(pop.best().id == 7);
  }
  SUBCASE("tie goes to the older record") {
    pop.insert(make(1, 0.3, 0, AgentKind::Task));
    pop.insert(make(2, 0.9, 5, AgentKind::Task));
    pop.insert(make(3, 0.9, 2, AgentKind::Task));
    CHECK(pop.best().id == 3);
  }
  SUBCASE("optimizer ratings") {
    Population opts(AgentKind::Optimizer, 10);
    opts.insert(make(1, 1200.0));
    opts.insert(make(2, 1216.0));
    opts.insert(make(3, 1184.0));
    CHECK(opts.best().id == 2);
  }
  SUBCASE("empty population throws") {
    Population empty(AgentKind::Task, 4);
    CHECK_THROWS_AS(empty.best(), escher::Error);
  }
}

TEST_CASE("random insert sequences respect capacity and best equals a linear scan") {
  escher::Rng rng(99);
  Population pop(AgentKind::Task, 17);
  for (int i = 0; i < 400; ++i) {
    AgentRecord rec = make(static_cast<escher::AgentId>(i), 0.0, i / 10, AgentKind::Task);
    rec.score = escher::uniform_unit(rng);
    pop.insert(std::move(rec));
    CHECK(pop.size() <= 17);
    double max_score = -1.0;
    for (const auto& m : pop.members()) max_score = std::max(max_score, m.score);
    CHECK(pop.best().score == max_score);
  }
}

TEST_CASE("map-elites overlay keeps the better record per cell") {
  MapElitesConfig grid;
  grid.enabled = true;
  grid.payload_buckets = 4;
  grid.payload_bucket_width = 8;
  grid.eval_buckets = 2;
  grid.eval_bucket_width = 5;
  Population pop(AgentKind::Optimizer, 50, grid);

  AgentRecord a = make(1, 1200.0);
  a.payload = "short";  // bucket 0
  pop.insert(a);

  AgentRecord weaker = make(2, 1100.0);
  weaker.payload = "tiny";  // same cell
  const auto drop = pop.insert(weaker);
  CHECK_FALSE(drop.inserted);
  CHECK(pop.size() == 1);

  AgentRecord stronger = make(3, 1300.0);
  stronger.payload = "mini";  // same cell again
  const auto replace = pop.insert(stronger);
  CHECK(replace.inserted);
  REQUIRE(replace.evicted.has_value());
  CHECK(*replace.evicted == 1);

  AgentRecord elsewhere = make(4, 900.0);
  elsewhere.payload = std::string(20, 'x');  // different payload bucket
  CHECK(pop.insert(elsewhere).inserted);
  CHECK(pop.size() == 2);
}

TEST_CASE("population serialization round-trips") {
  Population pop(AgentKind::Task, 5);
  AgentRecord rec = make(3, 0.75, 2, AgentKind::Task);
  rec.parent_ids = {1, 2};
  rec.eval_count = 4;
  pop.insert(rec);
  const Population back = Population::from_json(pop.to_json());
  CHECK(back.size() == 1);
  CHECK(back.members()[0].id == 3);
  CHECK(back.members()[0].score == 0.75);
  CHECK(back.members()[0].parent_ids == std::vector<escher::AgentId>{1, 2});
  CHECK(back.capacity() == 5);
}
