#include <doctest.h>

#include <random>

#include "aerotask/core.hpp"
#include "aerotask/error.hpp"

using namespace aerotask;

TEST_CASE("parse_command canonical forms") {
  CHECK(parse_command("takeoff") == Command::takeoff());
  CHECK(parse_command("move forward 5") == Command::move(Direction::forward, 5));
  CHECK(parse_command("  MOVE   Left 2.5 ") == Command::move(Direction::left, 2.5));
  CHECK(parse_command("rotate -90") == Command::rotate(-90));
  CHECK(parse_command("capture kitchen") == Command::capture("kitchen"));
  CHECK(parse_command("capture") == Command::capture());
  CHECK(parse_command("goto 1 2 3") == Command::go_to(Vec3{1, 2, 3}));
  CHECK(parse_command("goto bedroom2") == Command::go_to("bedroom2"));
  CHECK(parse_command("invoke_tool avoidance target=kitchen") ==
        Command::invoke("avoidance", {{"target", "kitchen"}}));
  CHECK(render_command(parse_command("hover 2.0")) == "hover 2");
}

TEST_CASE("parse_command errors") {
  auto code = [](std::string_view s) {
    try {
      parse_command(s);
    } catch (const Error& e) {
      return e.code();
    }
    FAIL("no error for " << s);
    return Errc::EmptyInput;
  };
  CHECK(code("move forward 0") == Errc::BadParameter);
  CHECK(code("move forward 51") == Errc::BadParameter);
  CHECK(code("rotate 361") == Errc::BadParameter);
  CHECK(code("hover 0") == Errc::BadParameter);
  CHECK(code("goto 60 1 1") == Errc::BadParameter);
  CHECK(code("jump 3") == Errc::UnknownVerb);
  CHECK(code("move sideways 3") == Errc::MalformedSyntax);
  CHECK(code("move forward") == Errc::MalformedSyntax);
  CHECK(code("takeoff now") == Errc::MalformedSyntax);
  CHECK(code("hover abc") == Errc::MalformedSyntax);
}

namespace {
Command random_command(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> kind(0, 7);
  std::uniform_real_distribution<double> meters(0.01, 50.0);
  std::uniform_real_distribution<double> deg(-360.0, 360.0);
  std::uniform_real_distribution<double> coord(0.0, 50.0);
  switch (kind(rng)) {
    case 0: return Command::takeoff();
    case 1: return Command::land();
    case 2: return Command::hover(meters(rng));
    case 3: return Command::move(static_cast<Direction>(rng() % 6), meters(rng));
    case 4: return Command::rotate(deg(rng));
    case 5: return Command::capture(rng() % 2 ? "kitchen" : "");
    case 6: return rng() % 2 ? Command::go_to(Vec3{coord(rng), coord(rng), coord(rng)})
                             : Command::go_to("bedroom1");
    default: return Command::invoke("avoidance", {{"target", "kitchen"}, {"x", "1.5"}});
  }
}
}  // namespace

TEST_CASE("render/parse round trip") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 2000; ++i) {
    Command c = random_command(rng);
    REQUIRE_FALSE(command_violation(c));
    CHECK(parse_command(render_command(c)) == c);
  }
}

TEST_CASE("validate_mlv verdicts") {
  MlvConstraints c;
  MachineLanguageVector ok{{Command::takeoff(), Command::hover(2), Command::land()}};
  CHECK(validate_mlv(ok, c).accepted());
  MachineLanguageVector eight;
  for (int i = 0; i < 8; ++i) eight.commands.push_back(Command::hover(1));
  CHECK(validate_mlv(eight, c).rule == MlvRule::too_long);
  MachineLanguageVector two{{Command::takeoff(), Command::land()}};
  CHECK(validate_mlv(two, c).rule == MlvRule::too_short);
  MachineLanguageVector bad{{Command::takeoff(), Command::move(Direction::up, 0), Command::land()}};
  auto v = validate_mlv(bad, c);
  CHECK(v.rule == MlvRule::invalid_command);
  CHECK(v.index == 1);
}

TEST_CASE("segment_plan partitions") {
  MlvConstraints c;
  std::vector<Command> cmds;
  for (int i = 0; i < 14; ++i) cmds.push_back(Command::move(Direction::forward, i + 1));
  auto segs = segment_plan(cmds, c);
  REQUIRE(segs.size() == 2);
  CHECK(segs[0].size() == 7);
  CHECK(segs[1].size() == 7);

  cmds.resize(8);
  segs = segment_plan(cmds, c);
  REQUIRE(segs.size() == 2);
  CHECK(segs[1].size() == 3);
  CHECK(segs[1].padding == 2);
  CHECK(segs[1].commands[1] == Command::hover(1));

  cmds.resize(3);
  CHECK(segment_plan(cmds, c).size() == 1);
  CHECK_THROWS_AS(segment_plan(std::span<const Command>{}, c), Error);
}

TEST_CASE("segmentation soundness property") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    std::size_t n = 1 + rng() % 20;
    std::vector<Command> cmds;
    for (std::size_t i = 0; i < n; ++i) cmds.push_back(random_command(rng));
    MlvConstraints c{1 + rng() % 4, 0};
    c.l_max = c.l_min + rng() % 6;
    auto segs = segment_plan(cmds, c);
    std::vector<Command> joined;
    for (const auto& s : segs) {
      CHECK(validate_mlv(s, c).accepted());
      auto body = strip_padding(s);
      joined.insert(joined.end(), body.begin(), body.end());
    }
    CHECK(joined == cmds);
  }
}

TEST_CASE("mlv text and json round trip") {
  MachineLanguageVector m{{Command::takeoff(), Command::move(Direction::up, 1.5), Command::land()}};
  CHECK(parse_mlv(render_mlv(m)) == m);
  CHECK(mlv_from_json(to_json(m)) == m);
}

TEST_CASE("labels") {
  CHECK(to_string(TaskLabel{Complexity::complex, Autonomy::tool_assisted}) == "CT");
  CHECK(parse_label("SI") == TaskLabel{});
  CHECK_FALSE(parse_label("S"));
  CHECK_FALSE(parse_label("XT"));
}
