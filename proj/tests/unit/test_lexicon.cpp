#include <doctest.h>

#include "aerotask/error.hpp"
#include "aerotask/lexicon.hpp"
#include "aerotask/world.hpp"

using namespace aerotask;
using namespace aerotask::lexicon;
using Keys = std::set<std::string>;

TEST_CASE("keyword normalization") {
  CHECK(extract_keywords("Move forward 5 meters and take a picture") ==
        Keys{"move", "forward", "take", "picture"});
  CHECK(extract_keywords("the").empty());
  CHECK(extract_keywords("avoid obstacles in time") == Keys{"avoid", "obstacle", "time"});
  CHECK(extract_keywords("Flying over the bedrooms, taking photos!") ==
        Keys{"fly", "bedroom", "take", "photo"});
  CHECK(lemmatize("boxes") == "box");
  CHECK(lemmatize("batteries") == "battery");
  CHECK(lemmatize("glass") == "glass");
}

TEST_CASE("tokenize numbers and separators") {
  auto t = tokenize("fly up 2.5 m, then land.");
  REQUIRE(t.size() == 8);
  CHECK(t[2].is_number);
  CHECK(t[2].value == 2.5);
  CHECK(t[4].is_separator);
  CHECK(t[7].is_separator);
}

namespace {
std::vector<ActionKind> kinds(std::string_view s) { return action_sequence(parse_instruction(s)); }
}  // namespace

TEST_CASE("verb table") {
  using A = ActionKind;
  CHECK(kinds("go to the kitchen and take a photo") == std::vector{A::go_to, A::capture});
  CHECK(kinds("hello").empty());
  CHECK(kinds("Move forward 5 meters then take pictures for the kitchen and two bedrooms and "
              "avoid obstacles in time") ==
        std::vector{A::move, A::capture, A::capture, A::capture, A::avoid});
  CHECK(kinds("take off and move forward 5 meters") == std::vector{A::takeoff, A::move});
  CHECK(kinds("turn left, hover for 3 seconds and land") ==
        std::vector{A::rotate, A::hover, A::land});
  CHECK(kinds("search for a specific location") == std::vector{A::search});
}

TEST_CASE("action parameters") {
  auto p = parse_instruction("fly 3 meters up then turn right 45 degrees and hover 4 seconds");
  REQUIRE(p.actions.size() == 3);
  CHECK(p.actions[0].direction == Direction::up);
  CHECK(*p.actions[0].amount == 3);
  CHECK(*p.actions[1].amount == -45);
  CHECK(*p.actions[2].amount == 4);

  auto q = parse_instruction("take pictures for kitchen and two bedrooms");
  REQUIRE(q.actions.size() == 2);
  CHECK(q.actions[0].target == TargetPhrase{"kitchen", 1});
  CHECK(q.actions[1].target == TargetPhrase{"bedroom", 2});

  auto r = parse_instruction("return home");
  REQUIRE(r.actions.size() == 1);
  CHECK(r.actions[0].target == TargetPhrase{"home", 1});
}

TEST_CASE("resolve against a world") {
  auto w = load_world(
      "room kitchen 0 0 0 5 5 3\n"
      "room bedroom1 5 0 0 10 5 3\n"
      "room bedroom2 10 0 0 15 5 3\n");
  auto acts = resolve_actions(parse_instruction("take pictures of the kitchen and two bedrooms"), w);
  REQUIRE(acts.size() == 3);
  CHECK(*acts[1].target == "bedroom1");
  CHECK(*acts[2].target == "bedroom2");
  CHECK_THROWS_AS(resolve_actions(parse_instruction("go to the garage"), w), Error);
  try {
    resolve_actions(parse_instruction("search for a specific location"), w);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::AutonomousInstruction);
  }
  try {
    resolve_actions(parse_instruction("photograph three bedrooms"), w);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::UnresolvableTarget);
  }
}
