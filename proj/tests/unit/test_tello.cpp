#include <doctest.h>

#include <deque>
#include <fstream>
#include <sstream>

#include "aerotask/error.hpp"
#include "aerotask/tello.hpp"

using namespace aerotask;
using namespace aerotask::tello;

namespace {

Errc error_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::EmptyInput;
}

std::string hex_of(std::string_view s) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  for (unsigned char c : s) {
    if (!out.empty()) out += ' ';
    out += digits[c >> 4];
    out += digits[c & 15];
  }
  return out;
}

MachineLanguageVector mlv_of(std::initializer_list<Command> cmds) { return {cmds, 0}; }

LinkSession opened(ScriptedTransport& t, LinkConfig cfg = {}) {
  LinkSession s(t, cfg, [](double) {});
  s.open();
  return s;
}

}  // namespace

TEST_CASE("encode matches the golden fixture byte for byte") {
  std::ifstream in(std::string(AEROTASK_TEST_DIR) + "/golden/tello_encode.txt");
  REQUIRE(in);
  int rows = 0;
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> f;
    std::istringstream fields(line);
    for (std::string s; std::getline(fields, s, '\t');) f.push_back(s);
    REQUIRE(f.size() == 3);
    const auto frame = encode(parse_command(f[0]));
    CHECK_MESSAGE(frame.payload == f[1], f[0]);
    CHECK_MESSAGE(hex_of(frame.payload) == f[2], f[0]);
    CHECK(frame.payload.size() <= kMaxPayload);
    ++rows;
  }
  CHECK(rows == 51);
}

TEST_CASE("encode rejects what the vehicle cannot express") {
  CHECK(error_of([] { encode(Command::move(Direction::forward, 6)); }) ==
        Errc::UnrepresentableCommand);
  CHECK(error_of([] { encode(Command::move(Direction::up, 0.1)); }) ==
        Errc::UnrepresentableCommand);
  CHECK(error_of([] { encode(Command::rotate(0.2)); }) == Errc::UnrepresentableCommand);
  CHECK(error_of([] { encode(Command::go_to("kitchen")); }) == Errc::UnrepresentableCommand);
  CHECK(error_of([] { encode(Command::invoke("avoidance")); }) == Errc::UnrepresentableCommand);
  CHECK(error_of([] { encode(Command::capture()); }) == Errc::UnrepresentableCommand);
  CHECK(host_side(Command::capture("kitchen")));
  CHECK_FALSE(host_side(Command::takeoff()));
}

TEST_CASE("responses decode verbatim") {
  CHECK(decode_response("ok") == Response{true, "ok"});
  CHECK(decode_response("ok\r\n") == Response{true, "ok"});
  CHECK(decode_response("error") == Response{false, "error"});
  CHECK(decode_response("out of range") == Response{false, "out of range"});
  CHECK(decode_response("") == Response{false, ""});
}

TEST_CASE("state frames keep every field") {
  const auto f = parse_state("pitch:0;roll:-1;yaw:45;h:80;bat:87;mystery:x;flag;\r\n");
  REQUIRE(f.fields.size() == 7);
  CHECK(f.battery() == 87.0);
  CHECK(f.height_cm() == 80.0);
  CHECK(f.yaw() == 45.0);
  CHECK(f.get("mystery") == "x");
  CHECK(f.get("flag") == "");
  CHECK_FALSE(f.number("mystery"));
  CHECK(f.fields[5].first == "mystery");
}

TEST_CASE("link config defaults") {
  LinkConfig c;
  CHECK(c.ack_timeout == std::chrono::seconds(7));
  CHECK(c.chain_bound == 7);
  CHECK(c.command_port == 8889);
  CHECK(c.state_port == 8890);
  c.chain_bound = 0;
  CHECK_FALSE(c.valid());
}

TEST_CASE("handshake") {
  ScriptedTransport ok;
  LinkSession s(ok, {}, [](double) {});
  CHECK_FALSE(s.is_open());
  s.open();
  CHECK(s.is_open());
  CHECK(ok.sent() == std::vector<std::string>{"command"});

  ScriptedTransport silent([](const std::string&, std::size_t) { return std::nullopt; });
  LinkSession dead(silent, {}, [](double) {});
  CHECK(error_of([&] { dead.open(); }) == Errc::HandshakeFailed);

  ScriptedTransport refuses([](const std::string&, std::size_t) {
    return std::optional<std::string>("error");
  });
  LinkSession no(refuses, {}, [](double) {});
  CHECK(error_of([&] { no.open(); }) == Errc::HandshakeFailed);
}

TEST_CASE("stop-and-wait delivery") {
  ScriptedTransport t;
  double waited = 0;
  LinkSession timed(t, {}, [&](double sec) { waited += sec; });
  timed.open();
  const auto r = timed.send_mlv(
      mlv_of({Command::takeoff(), Command::hover(2), Command::capture("x"), Command::land()}));
  CHECK(r.ok);
  CHECK_FALSE(r.failsafe_sent);
  REQUIRE(r.outcomes.size() == 4);
  for (const auto& o : r.outcomes) CHECK(o.status == AckStatus::ok);
  CHECK(r.outcomes[2].payload.empty());
  CHECK(waited == 2.0);
  // The capture never leaves the host.
  CHECK(t.sent() == std::vector<std::string>{"command", "takeoff", "stop", "land"});
}

TEST_CASE("a dropped acknowledgement aborts the rest and lands once") {
  ScriptedTransport t([](const std::string& p, std::size_t i) -> std::optional<std::string> {
    if (i == 2) return std::nullopt;  // second MLV command
    (void)p;
    return "ok";
  });
  auto s = opened(t);
  const auto r = s.send_mlv(
      mlv_of({Command::takeoff(), Command::move(Direction::forward, 1), Command::land()}));
  CHECK_FALSE(r.ok);
  CHECK(r.failsafe_sent);
  CHECK(r.outcomes[0].status == AckStatus::ok);
  CHECK(r.outcomes[1].status == AckStatus::timeout);
  CHECK(r.outcomes[2].status == AckStatus::aborted);
  CHECK(t.count("land") == 1);
  s.failsafe();  // the executor's own failsafe call is absorbed
  CHECK(t.count("land") == 1);
  CHECK(s.failsafe_count() == 1);
}

TEST_CASE("an error reply triggers the failsafe") {
  ScriptedTransport t([](const std::string& p, std::size_t) -> std::optional<std::string> {
    return p == "up 50" ? "out of range" : "ok";
  });
  auto s = opened(t);
  const auto r =
      s.send_mlv(mlv_of({Command::takeoff(), Command::move(Direction::up, 0.5), Command::land()}));
  CHECK(r.outcomes[1].status == AckStatus::error);
  CHECK(r.outcomes[1].text == "out of range");
  CHECK(t.count("land") == 1);
}

TEST_CASE("preconditions are checked before any datagram") {
  ScriptedTransport t;
  LinkSession closed(t, {}, [](double) {});
  CHECK(error_of([&] { closed.send_mlv(mlv_of({Command::takeoff(), Command::hover(1),
                                               Command::land()})); }) ==
        Errc::PreconditionViolation);
  CHECK(t.sent().empty());

  auto s = opened(t);
  MachineLanguageVector eight;
  for (int i = 0; i < 8; ++i) eight.commands.push_back(Command::hover(1));
  CHECK(error_of([&] { s.send_mlv(eight); }) == Errc::PreconditionViolation);
  CHECK(error_of([&] {
          s.send_mlv(mlv_of({Command::takeoff(), Command::move(Direction::forward, 8),
                             Command::land()}));
        }) == Errc::UnrepresentableCommand);
  CHECK(t.sent() == std::vector<std::string>{"command"});

  LinkConfig tight;
  tight.chain_bound = 3;
  ScriptedTransport t2;
  auto s2 = opened(t2, tight);
  MachineLanguageVector four{{Command::takeoff(), Command::hover(1), Command::hover(1),
                              Command::land()}, 0};
  CHECK(error_of([&] { s2.send_mlv(four); }) == Errc::PreconditionViolation);
}

TEST_CASE("late acknowledgements do not answer later commands") {
  // The vehicle repeats its takeoff acknowledgement and then ignores the move.
  class Echoing : public Transport {
   public:
    void send(std::string_view p) override {
      sent.emplace_back(p);
      if (p == "takeoff") queue.insert(queue.end(), {"ok", "ok"});
      else if (p != "forward 100") queue.push_back("ok");
    }
    std::optional<std::string> receive(std::chrono::milliseconds) override {
      if (queue.empty()) return std::nullopt;
      auto r = queue.front();
      queue.pop_front();
      return r;
    }
    std::vector<std::string> sent;
    std::deque<std::string> queue;
  } t;
  LinkSession s(t, {}, [](double) {});
  s.open();
  const auto r = s.send_mlv(
      mlv_of({Command::takeoff(), Command::move(Direction::forward, 1), Command::land()}));
  CHECK_FALSE(r.ok);
  CHECK(r.outcomes[1].status == AckStatus::timeout);
}

TEST_CASE("lossy link: one failsafe per abnormal run") {
  // Drops every fifth acknowledgement; each run either completes or lands once.
  const std::size_t drop_every = 5;
  ScriptedTransport t([=](const std::string&, std::size_t i) -> std::optional<std::string> {
    if (i % drop_every == drop_every - 1) return std::nullopt;
    return "ok";
  });
  auto s = opened(t);
  const auto mlv = mlv_of({Command::takeoff(), Command::move(Direction::forward, 2),
                           Command::rotate(90), Command::land()});
  std::size_t abnormal = 0;
  for (int run = 0; run < 40; ++run) {
    const auto before = t.count("land");
    const auto r = s.send_mlv(mlv);
    const auto lands = t.count("land") - before;
    if (r.ok) {
      CHECK(lands == 1);  // the mission's own landing
    } else {
      ++abnormal;
      CHECK(r.failsafe_sent);
      // A lost acknowledgement on the mission landing itself still sent that land.
      const bool mission_land_sent = r.outcomes.back().status != AckStatus::aborted;
      CHECK(lands - (mission_land_sent ? 1u : 0u) == 1u);
    }
  }
  CHECK(abnormal > 0);
  CHECK(s.failsafe_count() == abnormal);
}

TEST_CASE("tello sink dead-reckons acknowledged motion") {
  ScriptedTransport t;
  auto s = opened(t);
  TelloSink sink(s, Pose{{1, 1, 0}, 0});
  CHECK(sink.ready());
  const auto out = sink.dispatch(mlv_of({Command::takeoff(), Command::move(Direction::forward, 2),
                                         Command::rotate(90), Command::move(Direction::forward, 1),
                                         Command::capture("x")}));
  CHECK(out.ok);
  CHECK(out.acks.size() == 5);
  CHECK(sink.pose().position.x == doctest::Approx(3.0));
  CHECK(sink.pose().position.y == doctest::Approx(2.0));
  CHECK(sink.pose().yaw_deg == doctest::Approx(90.0));
  REQUIRE(out.photos.size() == 1);
  CHECK_FALSE(out.photos[0].achieved);
}

TEST_CASE("tello sink reports a timeout as a failed segment") {
  ScriptedTransport t([](const std::string& p, std::size_t) -> std::optional<std::string> {
    if (p == "forward 200") return std::nullopt;
    return "ok";
  });
  auto s = opened(t);
  TelloSink sink(s, Pose{});
  const auto out = sink.dispatch(
      mlv_of({Command::takeoff(), Command::move(Direction::forward, 2), Command::land()}));
  CHECK_FALSE(out.ok);
  CHECK(out.cause.rfind("LinkTimeout", 0) == 0);
  CHECK_FALSE(out.acks[1].ok);
  sink.failsafe();
  CHECK(t.count("land") == 1);
  CHECK(sink.pose().position.z == 0.0);
}

TEST_CASE("long moves split into representable legs") {
  const auto legs = split_long_moves({Command::takeoff(), Command::move(Direction::left, 12.5),
                                      Command::move(Direction::up, 5)});
  REQUIRE(legs.size() == 5);
  double sum = 0;
  for (std::size_t i = 1; i < 4; ++i) {
    const auto* m = legs[i].as<Move>();
    REQUIRE(m);
    CHECK(m->direction == Direction::left);
    CHECK_NOTHROW(encode(legs[i]));
    sum += m->meters;
  }
  CHECK(sum == doctest::Approx(12.5));
  CHECK(legs[4] == Command::move(Direction::up, 5));
}

TEST_CASE("udp transport round trip on loopback") {
  UdpTransport vehicle("", 0, 0);
  UdpTransport host("127.0.0.1", vehicle.bound_port(), 0);
  UdpTransport reply_to_host("127.0.0.1", host.bound_port(), 0);
  host.send("command");
  const auto got = vehicle.receive(std::chrono::milliseconds(1000));
  REQUIRE(got);
  CHECK(*got == "command");
  reply_to_host.send("ok");
  CHECK(host.receive(std::chrono::milliseconds(1000)) == std::optional<std::string>("ok"));
  CHECK_FALSE(host.receive(std::chrono::milliseconds(10)));
}

TEST_CASE("telemetry listener delivers parsed frames") {
  UdpTransport state("", 0, 0);
  UdpTransport drone("127.0.0.1", state.bound_port(), 0);
  Channel<StateFrame> frames;
  {
    TelemetryListener listener(state, frames);
    drone.send("bat:90;h:10;");
    drone.send("bat:89;h:20;");
    auto a = frames.pop(std::chrono::milliseconds(2000));
    auto b = frames.pop(std::chrono::milliseconds(2000));
    REQUIRE(a);
    REQUIRE(b);
    CHECK(a->battery() == 90.0);
    CHECK(b->height_cm() == 20.0);
  }
}
