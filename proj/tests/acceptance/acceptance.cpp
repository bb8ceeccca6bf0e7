// One PASS/FAIL line per acceptance gate; exit status 1 when any gate fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "aerotask/avoidance.hpp"
#include "aerotask/bench.hpp"
#include "aerotask/classifier.hpp"
#include "aerotask/energy.hpp"
#include "aerotask/error.hpp"
#include "aerotask/execution.hpp"
#include "aerotask/pipeline.hpp"
#include "aerotask/simulator.hpp"
#include "aerotask/tello.hpp"
#include "support/oracles.hpp"

using namespace aerotask;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail << "first failure: " << what << "; ";
    pass = pass && ok;
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

const Workspace& ws() {
  static const Workspace w = Workspace::load();
  return w;
}

// ---------------------------------------------------------------------------

void table2_cells(Verdict& v) {
  struct Cell {
    const char* instruction;
    const char* label;
  };
  const Cell cells[] = {
      {"Move forward 5 meters and take a picture", "SI"},
      {"Move forward 5 meters and avoid obstacles in time", "ST"},
      {"Move forward 5 meters then take pictures for kitchen and two bedrooms", "CI"},
      {"Move forward 5 meters then take pictures for the kitchen and two bedrooms and avoid "
       "obstacles in time",
       "CT"},
  };
  const auto t0 = Clock::now();
  const auto workspace = Workspace::load();
  ReferenceBackend backend;
  const auto cfg = workspace.default_config();
  for (const auto& c : cells) {
    const auto cls = classify_request({c.instruction, "apartment"}, workspace, backend, cfg, {});
    v.require(to_string(cls.label) == c.label && to_string(cls.computed) == c.label,
              std::string(c.instruction) + " -> " + std::string(to_string(cls.label)));
  }
  const double dt = seconds_since(t0);
  v.require(dt < 1.0, "took " + std::to_string(dt) + " s");
  v.detail << "4/4 cells, " << dt << " s including workspace load";
}

// ---------------------------------------------------------------------------

Command airborne_command(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> meters(0.2, 1.0);
  switch (rng() % 5) {
    case 0: return Command::hover(1 + double(rng() % 3));
    case 1: return Command::rotate(double(int(rng() % 181) - 90));
    case 2: return Command::move(rng() % 2 ? Direction::up : Direction::down, meters(rng) / 4);
    case 3: return Command::move(static_cast<Direction>(rng() % 4), meters(rng));
    default: return Command::capture();
  }
}

// Records the length of every vector it is handed.
class RecordingSink : public CommandSink {
 public:
  explicit RecordingSink(SimSession& s) : inner_(s) {}
  bool ready() const override { return true; }
  SegmentOutcome dispatch(const MachineLanguageVector& mlv) override {
    sizes.push_back(mlv.commands.size());
    return inner_.dispatch(mlv);
  }
  Pose pose() const override { return inner_.pose(); }
  void failsafe() override { inner_.failsafe(); }
  std::vector<std::size_t> sizes;

 private:
  SimulatorSink inner_;
};

void mlv_bounds(Verdict& v) {
  const MlvConstraints c;
  std::mt19937_64 rng(1001);
  std::size_t segments = 0, raw_rejected = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = 1 + rng() % 20;
    std::vector<Command> cmds;
    if (rng() % 5) cmds.push_back(Command::takeoff());
    while (cmds.size() < n) cmds.push_back(airborne_command(rng));

    // Planned lists: every dispatched segment is within bounds.
    SimSession sim(WorldModel{});
    RecordingSink sink(sim);
    ExecuteOptions opts;
    opts.constraints = c;
    const auto rep = execute(cmds, {}, sink, opts);
    v.require(!sink.sizes.empty(), "case " + std::to_string(i) + " dispatched nothing");
    for (auto s : sink.sizes) {
      v.require(s >= c.l_min && s <= c.l_max, "segment of length " + std::to_string(s));
    }
    segments += sink.sizes.size();
    if (rep.success) {
      std::vector<Command> joined;
      for (const auto& seg : rep.segments) {
        const auto body = strip_padding(seg.mlv);
        joined.insert(joined.end(), body.begin(), body.end());
      }
      v.require(joined == cmds, "segments do not reassemble case " + std::to_string(i));
    }

    // The same list as a single raw vector: out-of-bounds lengths are failed, never flown.
    SimSession raw_sim(WorldModel{});
    RecordingSink raw_sink(raw_sim);
    const auto raw = dispatch_raw({cmds, 0}, raw_sink, c);
    const bool in_bounds = n >= c.l_min && n <= c.l_max;
    if (!in_bounds) {
      ++raw_rejected;
      v.require(!raw.success && raw_sink.sizes.empty(),
                "raw vector of length " + std::to_string(n) + " was not failed");
    } else {
      v.require(raw_sink.sizes.size() == 1, "raw vector of length " + std::to_string(n) + " not sent");
    }
  }
  SimSession sim(WorldModel{});
  RecordingSink sink(sim);
  const MachineLanguageVector minimal{{Command::takeoff(), Command::hover(1), Command::land()}, 0};
  v.require(validate_mlv(minimal, c).accepted(), "[takeoff, hover, land] rejected");
  v.require(dispatch_raw(minimal, sink, c).success, "[takeoff, hover, land] failed in flight");
  v.detail << "1000 cases, " << segments << " segments in [" << c.l_min << "," << c.l_max << "], "
           << raw_rejected << " out-of-bounds raw vectors failed";
}

// ---------------------------------------------------------------------------

void complexity_properties(Verdict& v) {
  std::mt19937_64 rng(2024);
  // Eighths and small integers keep every product exact, so ties C = theta occur and
  // are compared without rounding.
  auto coef = [&] { return double(rng() % 25) / 8.0; };
  auto feat = [&] { return int(rng() % 21); };
  auto scale = [&] { return double(1 + rng() % 64) / 8.0; };
  auto verdict = [](const TaskFeatures& f, const ComplexityConfig& c) {
    return classify_complexity(complexity_score(f, c), c);
  };
  const int draws = 10000;
  int ties = 0;
  for (int i = 0; i < draws; ++i) {
    ComplexityConfig cfg{coef(), coef(), coef(), coef(), coef(), 0.125 + coef()};
    const TaskFeatures f{feat(), feat(), feat()};
    // A quarter of the draws sit exactly on the threshold.
    if (i % 4 == 0 && complexity_score(f, cfg).total > 0) cfg.theta = complexity_score(f, cfg).total;
    const auto base = verdict(f, cfg);
    ties += complexity_score(f, cfg).total == cfg.theta;

    // Monotonicity in each feature.
    for (int k = 0; k < 3; ++k) {
      TaskFeatures g = f;
      (k == 0 ? g.p : k == 1 ? g.d : g.l) += 1 + feat();
      v.require(complexity_score(g, cfg).total >= complexity_score(f, cfg).total,
                "score decreased");
      v.require(!(base == Complexity::complex && verdict(g, cfg) == Complexity::simple),
                "complex flipped to simple");
    }

    // The score is linear in (alpha, beta) and separately in the gammas, so the
    // threshold carries the product of the two factors.
    const double a = scale(), b = scale();
    ComplexityConfig s = cfg;
    s.alpha *= a;
    s.beta *= a;
    s.gamma_p *= b;
    s.gamma_d *= b;
    s.gamma_a *= b;
    s.theta *= a * b;
    v.require(verdict(f, s) == base, "verdict changed under scaling");
  }

  // The same factor on all six coefficients scales the score quadratically and
  // the threshold linearly; this fixed case shows the verdict is not invariant.
  const ComplexityConfig d;
  ComplexityConfig d2{2 * d.alpha, 2 * d.beta, 2 * d.gamma_p, 2 * d.gamma_d, 2 * d.gamma_a,
                      2 * d.theta};
  const TaskFeatures six{0, 0, 6};
  const bool literal_holds = verdict(six, d) == verdict(six, d2);
  v.detail << draws << " draws x 3 features monotone, " << draws
           << " scalings (alpha,beta by a; gammas by b; theta by ab) invariant, " << ties
           << " exact ties; six-way uniform scaling by 2 on (0,0,6) "
           << (literal_holds ? "keeps" : "flips") << " the verdict";
}

// ---------------------------------------------------------------------------

void independence(Verdict& v) {
  // Membership by linear scan over a flat copy of both sets.
  auto oracle = [](const std::set<std::string>& k, const KnowledgeBase& kb) {
    std::vector<std::string> total(kb.system.begin(), kb.system.end());
    total.insert(total.end(), kb.internet.begin(), kb.internet.end());
    for (const auto& w : k) {
      if (std::find(total.begin(), total.end(), w) == total.end()) return Autonomy::tool_assisted;
    }
    return Autonomy::independent;
  };
  const auto ds = load_bundled_dataset(ws());
  std::size_t checked = 0;
  std::set<std::string> seen;
  for (const auto& rec : ds.records) {
    const auto kb = ws().knowledge().with_scene(ws().world(rec.world));
    const auto k = extract_keywords(rec.instruction);
    seen.insert(k.begin(), k.end());
    v.require(classify_independence(k, kb) == oracle(k, kb), rec.id);
    ++checked;
  }

  std::vector<std::string> universe(seen.begin(), seen.end());
  for (const char* w : {"zebra", "sonar", "lidar", "orbit", "avoid", "obstacle", "time"}) {
    universe.push_back(w);
  }
  std::mt19937_64 rng(77);
  const auto kb = ws().knowledge().with_scene(ws().world("apartment"));
  std::size_t tool = 0;
  for (int i = 0; i < 1000; ++i) {
    std::set<std::string> k;
    const std::size_t n = rng() % 8;
    while (k.size() < n) k.insert(universe[rng() % universe.size()]);
    const auto got = classify_independence(k, kb);
    tool += got == Autonomy::tool_assisted;
    v.require(got == oracle(k, kb), "fuzz case " + std::to_string(i));
  }
  v.detail << checked << " bundled instructions, 1000 fuzzed sets (" << tool << " tool-assisted)";
}

// ---------------------------------------------------------------------------

void planner_optimality(Verdict& v) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(5150);
  int solvable = 0, unreachable = 0;
  std::size_t largest = 0;
  int drawn = 0;
  auto random_grid = [&](double density) {
    // Every eighth grid is full size.
    const bool full = ++drawn % 8 == 0;
    auto side = [&] { return full ? 20 : 1 + int(rng() % 20); };
    OccupancyGrid g(side(), side(), side());
    std::bernoulli_distribution block(density);
    for (int z = 0; z < g.nz(); ++z)
      for (int y = 0; y < g.ny(); ++y)
        for (int x = 0; x < g.nx(); ++x) g.set_occupied({x, y, z}, block(rng));
    return g;
  };
  auto random_cell = [&](const OccupancyGrid& g) {
    return Cell{int(rng() % g.nx()), int(rng() % g.ny()), int(rng() % g.nz())};
  };
  while (solvable < 200) {
    auto g = random_grid(0.1 + 0.25 * double(rng() % 100) / 100.0);
    const Cell s = random_cell(g), t = random_cell(g);
    g.set_occupied(s, false);
    g.set_occupied(t, false);
    const int want = oracle::bfs_length(g, s, t);
    if (want < 0) continue;
    ++solvable;
    largest = std::max(largest, std::size_t(g.nx()) * g.ny() * g.nz());
    try {
      const auto p = plan_path(g, g.center(s), g.center(t));
      v.require(int(p.cells.size()) == want, "path length " + std::to_string(p.cells.size()) +
                                                 " vs oracle " + std::to_string(want));
      for (std::size_t i = 1; i < p.cells.size(); ++i) {
        const auto a = p.cells[i - 1], b = p.cells[i];
        v.require(std::abs(a.x - b.x) + std::abs(a.y - b.y) + std::abs(a.z - b.z) == 1,
                  "non-adjacent step");
      }
      for (const auto& c : p.cells) v.require(!g.occupied(c), "path through an obstacle");
    } catch (const Error& e) {
      v.require(false, std::string("solvable grid threw ") + e.what());
    }
  }
  // Unreachable fixtures: a full wall separates start and goal.
  while (unreachable < 50) {
    auto g = random_grid(0.15);
    if (g.nx() < 3) continue;
    const int wall = 1 + int(rng() % (g.nx() - 2));
    for (int z = 0; z < g.nz(); ++z)
      for (int y = 0; y < g.ny(); ++y) g.set_occupied({wall, y, z});
    Cell s = random_cell(g), t = random_cell(g);
    s.x = int(rng() % wall);
    t.x = wall + 1 + int(rng() % (g.nx() - wall - 1));
    g.set_occupied(s, false);
    g.set_occupied(t, false);
    v.require(oracle::bfs_length(g, s, t) < 0, "fixture is reachable");
    ++unreachable;
    Errc code = Errc::EmptyInput;
    try {
      plan_path(g, g.center(s), g.center(t));
    } catch (const Error& e) {
      code = e.code();
    }
    v.require(code == Errc::Unreachable, "walled grid did not report Unreachable");
  }
  const double dt = seconds_since(t0);
  v.require(dt < 30.0, "took " + std::to_string(dt) + " s");
  v.detail << solvable << " solvable grids (largest " << largest << " cells), " << unreachable
           << " walled fixtures, " << dt << " s";
}

// ---------------------------------------------------------------------------

void energy_math(Verdict& v) {
  const PowerModel model;
  // Constant hover on a dyadic clock: every partial sum is exact.
  const double level = 0.5, dt = 1.0 / 64;
  const std::size_t n = 4096;
  MotorOutputs out;
  out.dt = dt;
  for (auto& m : out.levels) m.assign(n, level);
  const auto power = total_power(out, model);
  const double p = 4 * motor_power(level, model);
  const double e = integrate_energy(power, dt);
  v.require(e == p * (double(n) * dt), "hover energy " + std::to_string(e));

  // Linear ramp 0 -> p_max over T against the closed form p_max * T / 2.
  const double p_max = 400.0, rdt = 0.02, T = 10.0;
  std::vector<double> ramp;
  for (int k = 0; k < int(std::lround(T / rdt)); ++k) ramp.push_back(p_max * (k * rdt) / T);
  const double ramp_err = std::abs(integrate_energy(ramp, rdt) - p_max * T / 2);
  v.require(ramp_err <= rdt * p_max, "ramp error " + std::to_string(ramp_err));

  // SPR scale laws on random streams.
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> speed(-3, 3), watts(10, 200), factor(0.01, 100);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t len = 200 + rng() % 800;
    std::vector<Vec3> vel(len);
    std::vector<double> pw(len);
    for (std::size_t i = 0; i < len; ++i) {
      vel[i] = {speed(rng), speed(rng), speed(rng) / 3};
      pw[i] = watts(rng);
    }
    const double a = factor(rng), b = factor(rng);
    std::vector<double> pa(pw);
    for (auto& x : pa) x *= a;
    std::vector<Vec3> vb(vel);
    for (auto& x : vb) x = x * b;
    const auto base = spr_windows(vel, pw, 1.0, 0.02);
    const auto by_power = spr_windows(vel, pa, 1.0, 0.02);
    const auto by_speed = spr_windows(vb, pw, 1.0, 0.02);
    v.require(!base.empty() && base.size() == by_power.size() && base.size() == by_speed.size(),
              "window counts differ");
    for (std::size_t w = 0; w < base.size(); ++w) {
      const double rp = std::abs(by_power[w].spr * a - base[w].spr) / base[w].spr;
      const double rs = std::abs(by_speed[w].spr / b - base[w].spr) / base[w].spr;
      worst = std::max({worst, rp, rs});
    }
  }
  v.require(worst <= 1e-12, "SPR relative error " + std::to_string(worst));
  v.detail << "hover E = P*T exactly (" << e << " J), ramp error " << ramp_err << " J <= "
           << rdt * p_max << ", SPR scale laws worst relative error " << worst;
}

// ---------------------------------------------------------------------------

void bench_gold(Verdict& v) {
  const auto t0 = Clock::now();
  const auto ds = load_bundled_dataset(ws());
  BenchOptions opts;
  opts.config = ws().default_config();
  const auto ira1 = run_ira(ds, ws(), opts);
  const auto ira2 = run_ira(ds, ws(), opts);
  const auto esr1 = run_esr(ds, ws(), opts);
  const auto esr2 = run_esr(ds, ws(), opts);
  const auto uec1 = run_uec(ds, ws(), opts);
  const auto uec2 = run_uec(ds, ws(), opts);
  const double dt = seconds_since(t0);

  v.require(ira1.ira && ira1.ira->overall.value() == 1.0, "IRA below 1");
  v.require(esr1.esr && esr1.esr->per_label.count("SI") &&
                esr1.esr->per_label.at("SI").value() == 1.0,
            "SI ESR below 1");
  for (const auto* fmt : {"json", "csv"}) {
    v.require(emit_report(ira1, fmt) == emit_report(ira2, fmt), std::string("IRA ") + fmt + " differs");
    v.require(emit_report(esr1, fmt) == emit_report(esr2, fmt), std::string("ESR ") + fmt + " differs");
    v.require(emit_report(uec1, fmt) == emit_report(uec2, fmt), std::string("UEC ") + fmt + " differs");
  }
  v.require(dt < 300.0, "bench took " + std::to_string(dt) + " s");
  v.detail << ds.records.size() << " tasks, IRA " << ira1.ira->overall.value() << ", SI ESR "
           << esr1.esr->per_label.at("SI").value() << ", overall ESR "
           << esr1.esr->overall.value() << ", reports byte-identical, 2 full passes in " << dt
           << " s";
}

// ---------------------------------------------------------------------------

void tool_ablation(Verdict& v) {
  const auto ds =
      load_dataset_file(std::filesystem::path(AEROTASK_DATA_DIR) / "st_ablation.tsv", &ws());
  v.require(ds.records.size() == 20, "fixture has " + std::to_string(ds.records.size()) + " records");
  BenchOptions opts;
  opts.config = ws().default_config();
  const auto rep = run_tool_ablation(ds, ws(), opts);
  const auto& ab = *rep.ablation;
  v.require(ab.enabled.value() > ab.prohibited.value(), "enabled ESR does not exceed prohibited");
  std::size_t blocked = 0;
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const auto& rec = ds.records[i];
    const bool b = oracle::corridor_blocked(ws().world(rec.world), rec.instruction);
    blocked += b;
    v.require(ab.rows[i].id == rec.id, "row order");
    v.require(ab.rows[i].prohibited == !b, rec.id + " prohibited outcome disagrees with the oracle");
  }
  v.detail << "enabled " << ab.enabled.hits << "/" << ab.enabled.total << ", prohibited "
           << ab.prohibited.hits << "/" << ab.prohibited.total << ", oracle marks " << blocked
           << " corridors blocked";
}

// ---------------------------------------------------------------------------

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

void tello_link(Verdict& v) {
  using namespace aerotask::tello;
  std::ifstream in(std::string(AEROTASK_TEST_DIR) + "/golden/tello_encode.txt");
  v.require(bool(in), "golden fixture missing");
  int rows = 0;
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> f;
    std::istringstream fields(line);
    for (std::string s; std::getline(fields, s, '\t');) f.push_back(s);
    if (f.size() != 3) {
      v.require(false, "bad fixture row: " + line);
      continue;
    }
    try {
      const auto frame = encode(parse_command(f[0]));
      v.require(frame.payload == f[1] && hex_of(frame.payload) == f[2], f[0]);
    } catch (const Error& e) {
      v.require(false, f[0] + ": " + e.what());
    }
    ++rows;
  }
  v.require(rows > 0, "empty fixture");

  // A fake endpoint that loses about one acknowledgement in twelve.
  std::mt19937_64 rng(12);
  ScriptedTransport t([&](const std::string&, std::size_t) -> std::optional<std::string> {
    if (rng() % 12 == 0) return std::nullopt;
    return "ok";
  });
  LinkSession s(t, {}, [](double) {});
  s.open();
  const MachineLanguageVector mlv{{Command::takeoff(), Command::move(Direction::forward, 2),
                                   Command::rotate(90), Command::land()},
                                  0};
  std::size_t abnormal = 0;
  for (int run = 0; run < 100; ++run) {
    const auto before = t.count("land");
    const auto r = s.send_mlv(mlv);
    const auto lands = t.count("land") - before;
    if (r.ok) {
      v.require(lands == 1 && !r.failsafe_sent, "normal run landed " + std::to_string(lands) + " times");
      continue;
    }
    ++abnormal;
    const bool mission_land_sent = r.outcomes.back().status != AckStatus::aborted;
    v.require(r.failsafe_sent && lands - (mission_land_sent ? 1 : 0) == 1,
              "abnormal run " + std::to_string(run) + " sent " + std::to_string(lands) + " lands");
  }
  v.require(abnormal > 0 && abnormal < 100, "lossy runs were not mixed");
  v.require(s.failsafe_count() == abnormal, "failsafe count");
  v.detail << rows << " golden frames byte-identical, " << abnormal
           << "/100 lossy runs each with exactly one failsafe landing";
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<void(Verdict&)>> gates[] = {
      {"table2-cells", table2_cells},
      {"mlv-bounds", mlv_bounds},
      {"complexity-properties", complexity_properties},
      {"independence-oracle", independence},
      {"planner-optimality", planner_optimality},
      {"energy-math", energy_math},
      {"bench-determinism-gold", bench_gold},
      {"tool-ablation", tool_ablation},
      {"tello-codec-link", tello_link},
  };
  int failed = 0;
  for (const auto& [name, fn] : gates) {
    Verdict v;
    try {
      fn(v);
    } catch (const std::exception& e) {
      v.require(false, std::string("exception: ") + e.what());
    }
    std::cout << (v.pass ? "PASS " : "FAIL ") << name << ": " << v.detail.str() << std::endl;
    failed += !v.pass;
  }
  return failed == 0 ? 0 : 1;
}
