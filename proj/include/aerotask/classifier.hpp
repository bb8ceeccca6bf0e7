#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "aerotask/core.hpp"
#include "aerotask/world.hpp"

namespace aerotask {

struct TaskFeatures {
  int p = 0;  // monitoring points named or near the corridor
  int d = 0;  // danger regions touching the corridor
  int l = 0;  // atomic actions

  friend bool operator==(const TaskFeatures&, const TaskFeatures&) = default;
};

struct ComplexityConfig {
  double alpha = 0.5;
  double beta = 0.5;
  double gamma_p = 1.0;
  double gamma_d = 1.0;
  double gamma_a = 1.0;
  double theta = 4.0;

  bool valid() const;
  friend bool operator==(const ComplexityConfig&, const ComplexityConfig&) = default;
};

struct ComplexityScore {
  double state = 0.0;   // S_c
  double motion = 0.0;  // M_c
  double total = 0.0;   // C_task
};

/// Half-width of the corridor used for monitor and danger counting, meters.
inline constexpr double kCorridorRadius = 1.0;
/// Cruise altitude assumed for corridor geometry, meters.
inline constexpr double kCorridorAltitude = 1.5;

/// Polyline the task flies through, starting above the world start position.
/// Throws UnresolvableTarget / AutonomousInstruction like extract_features.
std::vector<Vec3> task_corridor(std::string_view instruction, const WorldModel& world);

TaskFeatures extract_features(const TaskRequest& req, const WorldModel& world);
ComplexityScore complexity_score(const TaskFeatures& f, const ComplexityConfig& cfg);
Complexity classify_complexity(const ComplexityScore& s, const ComplexityConfig& cfg);

// ---------------------------------------------------------------------------

struct KnowledgeBase {
  std::set<std::string> system;
  std::set<std::string> internet;

  bool knows(const std::string& keyword) const {
    return system.contains(keyword) || internet.contains(keyword);
  }
  /// Copy with the world's room types and entity names added to the system list.
  KnowledgeBase with_scene(const WorldModel& world) const;
};

/// "system:" / "internet:" lines followed by whitespace-separated tokens;
/// a list may continue across several lines with the same prefix.
KnowledgeBase load_knowledge_base(std::string_view document);
KnowledgeBase load_knowledge_base_file(const std::filesystem::path& path);

std::set<std::string> extract_keywords(std::string_view instruction);
Autonomy classify_independence(const std::set<std::string>& keywords, const KnowledgeBase& kb);
/// Keywords the knowledge base does not cover, in sorted order.
std::vector<std::string> unknown_keywords(const std::set<std::string>& keywords,
                                          const KnowledgeBase& kb);

// ---------------------------------------------------------------------------

struct CalibrationExample {
  TaskFeatures features;
  Complexity gold = Complexity::simple;
};

/// Candidate values searched by calibrate().
struct CalibrationLattice {
  std::vector<double> gamma;  // shared by gamma_p, gamma_d, gamma_a
  std::vector<double> theta;

  /// gamma in {0.25, 0.5, ..., 2}, theta in {0.25, 0.5, ..., 8}.
  static CalibrationLattice standard();
};

std::size_t misclassifications(const std::vector<CalibrationExample>& examples,
                               const ComplexityConfig& cfg);

/// Exhaustive grid search with alpha/beta fixed; ties go to the lexicographically
/// smallest (gamma_p, gamma_d, gamma_a, theta).
ComplexityConfig calibrate(const std::vector<CalibrationExample>& examples,
                           const ComplexityConfig& base,
                           const CalibrationLattice& lattice = CalibrationLattice::standard());

/// One record per line: "p d l simple|complex"; '#' starts a comment.
std::vector<CalibrationExample> load_calibration_set(std::string_view document);
std::vector<CalibrationExample> load_calibration_file(const std::filesystem::path& path);

}  // namespace aerotask
