#include "aerotask/classifier.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "aerotask/error.hpp"
#include "aerotask/lexicon.hpp"

namespace aerotask {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::MalformedDocument, "cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void add_words(std::set<std::string>& out, std::string_view text) {
  std::string spaced(text);
  for (char& c : spaced) {
    if (c == '_' || std::isdigit(static_cast<unsigned char>(c))) c = ' ';
  }
  for (auto& k : lexicon::extract_keywords(spaced)) out.insert(k);
}

}  // namespace

bool ComplexityConfig::valid() const {
  return alpha >= 0 && beta >= 0 && gamma_p >= 0 && gamma_d >= 0 && gamma_a >= 0 && theta > 0;
}

std::vector<Vec3> task_corridor(std::string_view instruction, const WorldModel& world) {
  auto actions = lexicon::resolve_actions(lexicon::parse_instruction(instruction), world);
  Vec3 pos = world.start.position;
  pos.z += kCorridorAltitude;
  double yaw = world.start.yaw_deg;
  std::vector<Vec3> corridor{pos};
  for (const auto& a : actions) {
    switch (a.kind) {
      case lexicon::ActionKind::move:
        pos = pos + body_axis(yaw, a.direction) * a.amount;
        corridor.push_back(pos);
        break;
      case lexicon::ActionKind::rotate:
        yaw += a.amount;
        break;
      default:
        if (a.target) {
          Vec3 next = *world.waypoint(*a.target);
          next.z = pos.z;
          pos = next;
          corridor.push_back(pos);
        }
        break;
    }
  }
  return corridor;
}

TaskFeatures extract_features(const TaskRequest& req, const WorldModel& world) {
  if (req.instruction.empty()) throw Error(Errc::EmptyInput, "empty instruction");
  auto parsed = lexicon::parse_instruction(req.instruction);
  auto actions = lexicon::resolve_actions(parsed, world);
  auto corridor = task_corridor(req.instruction, world);

  auto near_corridor_point = [&](Vec3 p) {
    if (corridor.size() == 1) return distance(p, corridor[0]) <= kCorridorRadius;
    for (std::size_t i = 1; i < corridor.size(); ++i) {
      if (distance_point_segment(p, corridor[i - 1], corridor[i]) <= kCorridorRadius) return true;
    }
    return false;
  };
  auto near_corridor_box = [&](const Box& b) {
    if (corridor.size() == 1) return distance_point_box(corridor[0], b) <= kCorridorRadius;
    for (std::size_t i = 1; i < corridor.size(); ++i) {
      if (distance_segment_box(corridor[i - 1], corridor[i], b) <= kCorridorRadius) return true;
    }
    return false;
  };

  std::set<std::string> monitors;
  for (const auto& a : actions) {
    if (a.target && world.monitor(*a.target)) monitors.insert(*a.target);
  }
  for (const auto& m : world.monitors) {
    if (near_corridor_point(m.position)) monitors.insert(m.name);
  }
  TaskFeatures f;
  f.p = static_cast<int>(monitors.size());
  for (const auto& danger : world.dangers) {
    if (near_corridor_box(danger.box)) ++f.d;
  }
  f.l = static_cast<int>(actions.size());
  return f;
}

ComplexityScore complexity_score(const TaskFeatures& f, const ComplexityConfig& cfg) {
  ComplexityScore s;
  s.state = cfg.gamma_p * f.p + cfg.gamma_d * f.d;
  s.motion = cfg.gamma_a * f.l;
  s.total = cfg.alpha * s.state + cfg.beta * s.motion;
  return s;
}

Complexity classify_complexity(const ComplexityScore& s, const ComplexityConfig& cfg) {
  return s.total <= cfg.theta ? Complexity::simple : Complexity::complex;
}

KnowledgeBase KnowledgeBase::with_scene(const WorldModel& world) const {
  KnowledgeBase kb = *this;
  for (const auto& r : world.rooms) add_words(kb.system, r.name);
  for (const auto& list : {&world.obstacles, &world.dangers}) {
    for (const auto& b : *list) add_words(kb.system, b.name);
  }
  for (const auto& list : {&world.monitors, &world.photo_targets}) {
    for (const auto& p : *list) add_words(kb.system, p.name);
  }
  kb.system.insert(std::string(kHomeWaypoint));
  return kb;
}

KnowledgeBase load_knowledge_base(std::string_view document) {
  KnowledgeBase kb;
  std::istringstream in{std::string(document)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    auto colon = line.find(':');
    std::istringstream probe(line);
    std::string first;
    if (!(probe >> first)) continue;
    if (colon == std::string::npos) {
      throw Error(Errc::MalformedDocument,
                  "line " + std::to_string(line_no) + ": expected 'system:' or 'internet:'");
    }
    std::istringstream name_in(line.substr(0, colon));
    std::string name;
    name_in >> name;
    std::set<std::string>* target = name == "system"     ? &kb.system
                                    : name == "internet" ? &kb.internet
                                                         : nullptr;
    if (!target) {
      throw Error(Errc::MalformedDocument,
                  "line " + std::to_string(line_no) + ": unknown list '" + name + "'");
    }
    std::istringstream words(line.substr(colon + 1));
    for (std::string w; words >> w;) {
      for (char& c : w) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      target->insert(lexicon::lemmatize(w));
    }
  }
  return kb;
}

KnowledgeBase load_knowledge_base_file(const std::filesystem::path& path) {
  return load_knowledge_base(read_file(path));
}

std::set<std::string> extract_keywords(std::string_view instruction) {
  return lexicon::extract_keywords(instruction);
}

std::vector<std::string> unknown_keywords(const std::set<std::string>& keywords,
                                          const KnowledgeBase& kb) {
  std::vector<std::string> out;
  for (const auto& k : keywords) {
    if (!kb.knows(k)) out.push_back(k);
  }
  return out;
}

Autonomy classify_independence(const std::set<std::string>& keywords, const KnowledgeBase& kb) {
  for (const auto& k : keywords) {
    if (!kb.knows(k)) return Autonomy::tool_assisted;
  }
  return Autonomy::independent;
}

CalibrationLattice CalibrationLattice::standard() {
  CalibrationLattice lat;
  for (int i = 1; i <= 8; ++i) lat.gamma.push_back(0.25 * i);
  for (int i = 1; i <= 32; ++i) lat.theta.push_back(0.25 * i);
  return lat;
}

std::size_t misclassifications(const std::vector<CalibrationExample>& examples,
                               const ComplexityConfig& cfg) {
  std::size_t errors = 0;
  for (const auto& ex : examples) {
    if (classify_complexity(complexity_score(ex.features, cfg), cfg) != ex.gold) ++errors;
  }
  return errors;
}

ComplexityConfig calibrate(const std::vector<CalibrationExample>& examples,
                           const ComplexityConfig& base, const CalibrationLattice& lattice) {
  bool has_simple = false;
  bool has_complex = false;
  for (const auto& ex : examples) {
    (ex.gold == Complexity::simple ? has_simple : has_complex) = true;
  }
  if (!has_simple || !has_complex) {
    throw Error(Errc::DegenerateLabels, "calibration needs both simple and complex examples");
  }
  auto gammas = lattice.gamma;
  auto thetas = lattice.theta;
  std::sort(gammas.begin(), gammas.end());
  std::sort(thetas.begin(), thetas.end());

  ComplexityConfig best = base;
  std::size_t best_errors = examples.size() + 1;
  ComplexityConfig cfg = base;
  for (double gp : gammas) {
    cfg.gamma_p = gp;
    for (double gd : gammas) {
      cfg.gamma_d = gd;
      for (double ga : gammas) {
        cfg.gamma_a = ga;
        for (double th : thetas) {
          cfg.theta = th;
          std::size_t e = misclassifications(examples, cfg);
          // Strict improvement only: the first config visited wins ties.
          if (e < best_errors) {
            best_errors = e;
            best = cfg;
          }
        }
      }
    }
  }
  return best;
}

std::vector<CalibrationExample> load_calibration_set(std::string_view document) {
  std::vector<CalibrationExample> out;
  std::istringstream in{std::string(document)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream words(line);
    std::vector<std::string> tok;
    for (std::string w; words >> w;) tok.push_back(w);
    if (tok.empty()) continue;
    auto fail = [&](const std::string& why) {
      return Error(Errc::MalformedDocument, "line " + std::to_string(line_no) + ": " + why);
    };
    if (tok.size() != 4) throw fail("expected 'p d l label'");
    CalibrationExample ex;
    int* fields[] = {&ex.features.p, &ex.features.d, &ex.features.l};
    for (int i = 0; i < 3; ++i) {
      auto [ptr, ec] = std::from_chars(tok[i].data(), tok[i].data() + tok[i].size(), *fields[i]);
      if (ec != std::errc{} || ptr != tok[i].data() + tok[i].size() || *fields[i] < 0) {
        throw fail("'" + tok[i] + "' is not a non-negative integer");
      }
    }
    if (tok[3] == "simple") {
      ex.gold = Complexity::simple;
    } else if (tok[3] == "complex") {
      ex.gold = Complexity::complex;
    } else {
      throw fail("label must be simple or complex");
    }
    out.push_back(ex);
  }
  return out;
}

std::vector<CalibrationExample> load_calibration_file(const std::filesystem::path& path) {
  return load_calibration_set(read_file(path));
}

}  // namespace aerotask
