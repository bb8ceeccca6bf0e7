#include <doctest.h>

#include <algorithm>
#include <random>

#include "aerotask/classifier.hpp"
#include "aerotask/error.hpp"

using namespace aerotask;

namespace {

Errc error_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::EmptyInput;
}

// Brute-force corridor oracle: dense samples along the polyline.
std::vector<Vec3> sample_polyline(const std::vector<Vec3>& poly, int per_segment) {
  std::vector<Vec3> out{poly.front()};
  for (std::size_t i = 1; i < poly.size(); ++i) {
    for (int k = 1; k <= per_segment; ++k) {
      out.push_back(poly[i - 1] + (poly[i] - poly[i - 1]) * (double(k) / per_segment));
    }
  }
  return out;
}

}  // namespace

TEST_CASE("features of a plain takeoff-and-move") {
  WorldModel empty;
  auto f = extract_features({"take off and move forward 5 meters", "empty"}, empty);
  CHECK(f == TaskFeatures{0, 0, 2});
}

TEST_CASE("features against a hand-built fixture") {
  auto w = load_world(
      "start 2.5 2.5 0\n"
      "monitor alpha 10.5 2.5 1.5\n"
      "monitor bravo 10.5 12.5 1.5\n"
      "monitor charlie 20 20 1.5\n"
      "danger pit 9.8 6 0 11.2 7 1\n"
      "danger vent 30 30 0 32 32 2\n");
  TaskRequest req{"take off, go to alpha then go to bravo and land", "fixture"};
  auto f = extract_features(req, w);
  CHECK(f == TaskFeatures{2, 1, 4});

  auto samples = sample_polyline(task_corridor(req.instruction, w), 4000);
  int d = 0;
  for (const auto& danger : w.dangers) {
    bool hit = std::any_of(samples.begin(), samples.end(), [&](Vec3 p) {
      return distance_point_box(p, danger.box) <= kCorridorRadius;
    });
    d += hit;
  }
  CHECK(d == f.d);
  int p = 0;
  for (const auto& m : w.monitors) {
    bool hit = std::any_of(samples.begin(), samples.end(),
                           [&](Vec3 q) { return distance(q, m.position) <= kCorridorRadius + 1e-3; });
    p += hit;
  }
  CHECK(p == f.p);
}

TEST_CASE("feature extraction errors") {
  auto w = load_world("room kitchen 10 0 0 19 9 3\n");
  CHECK(error_of([&] { extract_features({"go to the garage", "w"}, w); }) ==
        Errc::UnresolvableTarget);
  CHECK(error_of([&] { extract_features({"search for a specific location", "w"}, w); }) ==
        Errc::AutonomousInstruction);
}

TEST_CASE("complexity score and threshold") {
  ComplexityConfig cfg;
  auto s = complexity_score({2, 1, 4}, cfg);
  CHECK(s.state == 3);
  CHECK(s.motion == 4);
  CHECK(s.total == 3.5);
  CHECK(complexity_score({0, 0, 0}, cfg).total == 0);
  CHECK(classify_complexity({0, 0, cfg.theta}, cfg) == Complexity::simple);
  CHECK(classify_complexity({0, 0, 0}, cfg) == Complexity::simple);
  CHECK(classify_complexity({0, 0, cfg.theta + 1e-9}, cfg) == Complexity::complex);

  ComplexityConfig doubled = cfg;
  doubled.gamma_p = doubled.gamma_d = doubled.gamma_a = 2;
  CHECK(complexity_score({1, 2, 3}, doubled).total == 2 * complexity_score({1, 2, 3}, cfg).total);
}

TEST_CASE("monotonicity and scale invariance properties") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> feat(0, 20);
  std::uniform_real_distribution<double> coef(0.0, 3.0);
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  for (int i = 0; i < 10000; ++i) {
    ComplexityConfig cfg{coef(rng), coef(rng), coef(rng), coef(rng), coef(rng), 0.1 + coef(rng)};
    TaskFeatures f{feat(rng), feat(rng), feat(rng)};
    TaskFeatures g = f;
    (i % 3 == 0 ? g.p : i % 3 == 1 ? g.d : g.l) += 1 + feat(rng);
    auto sf = complexity_score(f, cfg);
    auto sg = complexity_score(g, cfg);
    REQUIRE(sg.total >= sf.total);
    if (classify_complexity(sf, cfg) == Complexity::complex) {
      REQUIRE(classify_complexity(sg, cfg) == Complexity::complex);
    }
  }
}

TEST_CASE("independence against a subset oracle") {
  KnowledgeBase kb{{"move", "forward"}, {"take", "picture", "time"}};
  CHECK(classify_independence({}, kb) == Autonomy::independent);
  CHECK(classify_independence({"avoid", "obstacle", "time"}, kb) == Autonomy::tool_assisted);

  const std::vector<std::string> universe{"move", "forward", "take", "picture", "avoid", "time"};
  std::set<std::string> total = kb.system;
  total.insert(kb.internet.begin(), kb.internet.end());
  for (unsigned mask = 0; mask < 64; ++mask) {
    std::set<std::string> k;
    for (unsigned b = 0; b < 6; ++b) {
      if (mask & (1u << b)) k.insert(universe[b]);
    }
    bool subset = std::includes(total.begin(), total.end(), k.begin(), k.end());
    CHECK((classify_independence(k, kb) == Autonomy::independent) == subset);
    KnowledgeBase more = kb;
    more.system.insert("avoid");
    if (classify_independence(k, kb) == Autonomy::independent) {
      CHECK(classify_independence(k, more) == Autonomy::independent);
    }
  }
}

TEST_CASE("knowledge base file and scene words") {
  auto kb = load_knowledge_base("# comment\nsystem: takeoff land\ninternet: Pictures time\n"
                                "internet: move\n");
  CHECK(kb.system == std::set<std::string>{"takeoff", "land"});
  CHECK(kb.internet == std::set<std::string>{"picture", "time", "move"});
  auto w = load_world("room living_room2 0 0 0 5 5 3\nphoto red_chair 1 1 1\n");
  auto scene = kb.with_scene(w);
  CHECK(scene.knows("living"));
  CHECK(scene.knows("room"));
  CHECK(scene.knows("chair"));
  CHECK_THROWS_AS(load_knowledge_base("bogus: a\n"), Error);
}

TEST_CASE("calibration") {
  std::vector<CalibrationExample> toy;
  for (int l = 0; l <= 9; ++l) toy.push_back({{0, 0, l}, l >= 5 ? Complexity::complex : Complexity::simple});
  auto cfg = calibrate(toy, ComplexityConfig{});
  CHECK(misclassifications(toy, cfg) == 0);
  CHECK(cfg.alpha == 0.5);

  // Brute force: no lexicographically smaller lattice point also scores zero.
  auto lat = CalibrationLattice::standard();
  bool smaller_found = false;
  for (double gp : lat.gamma)
    for (double gd : lat.gamma)
      for (double ga : lat.gamma)
        for (double th : lat.theta) {
          ComplexityConfig c{0.5, 0.5, gp, gd, ga, th};
          if (std::tie(gp, gd, ga, th) < std::tie(cfg.gamma_p, cfg.gamma_d, cfg.gamma_a, cfg.theta) &&
              misclassifications(toy, c) == 0) {
            smaller_found = true;
          }
        }
  CHECK_FALSE(smaller_found);

  std::vector<CalibrationExample> simple_only{{{1, 1, 1}, Complexity::simple}};
  CHECK(error_of([&] { calibrate(simple_only, {}); }) == Errc::DegenerateLabels);

  auto parsed = load_calibration_set("# p d l label\n1 0 2 simple\n4 1 4 complex\n");
  REQUIRE(parsed.size() == 2);
  CHECK(parsed[1].features == TaskFeatures{4, 1, 4});
  CHECK(parsed[1].gold == Complexity::complex);
  CHECK_THROWS_AS(load_calibration_set("1 2 simple\n"), Error);
}
