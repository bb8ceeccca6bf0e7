#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aerotask/pipeline.hpp"

namespace aerotask {

enum class CriterionKind { visit, photo, no_collision, segments_valid, landed };

struct Criterion {
  CriterionKind kind = CriterionKind::no_collision;
  std::string target;  // visit/photo; empty photo target means any photo
  friend bool operator==(const Criterion&, const Criterion&) = default;
};

/// "visit:kitchen;photo:kitchen;photo;no_collision;segments_valid;landed"
std::vector<Criterion> parse_criteria(std::string_view text);
std::string render_criteria(const std::vector<Criterion>& criteria);

struct TaskRecord {
  std::string id;
  TaskLabel label;
  std::string world;
  Phrasing phrasing = Phrasing::explicit_;
  std::string instruction;
  std::vector<Criterion> criteria;

  TaskRequest request() const { return {instruction, world, phrasing}; }
};

struct Dataset {
  std::vector<TaskRecord> records;
  std::map<std::string, std::size_t> per_label() const;
  /// Records carrying `label`, order kept.
  Dataset subset(const TaskLabel& label) const;
};

inline constexpr std::size_t kBundledTaskCount = 160;
inline constexpr std::size_t kBundledPerLabel = 40;

/// Tab-separated: id, label, world, phrasing, instruction, criteria. '#' lines
/// are comments. With a workspace, world ids are checked (UnknownWorld).
Dataset load_dataset(std::string_view document, const Workspace* ws = nullptr);
Dataset load_dataset_file(const std::filesystem::path& path, const Workspace* ws = nullptr);
/// tasks.tsv from the workspace; enforces 160 records, 40 per label (CountMismatch).
Dataset load_bundled_dataset(const Workspace& ws);

/// Independent zero-temperature backend per worker thread.
using BackendFactory = std::function<std::unique_ptr<Backend>()>;

struct BenchOptions {
  PipelineConfig config;
  BackendFactory backend;
  FailureMemory memory;   // starting memory for every record
  unsigned threads = 0;   // 0: hardware concurrency
};

struct Fraction {
  std::size_t hits = 0;
  std::size_t total = 0;
  double value() const { return total == 0 ? 0.0 : static_cast<double>(hits) / total; }
};

struct RecordResult {
  std::string id;
  std::string gold;
  std::string predicted;  // empty when classification failed
  bool success = false;
  std::string failure;
  double flight_time = 0.0;
  double energy = 0.0;
};

struct IraSection {
  Fraction overall;
  std::map<std::string, Fraction> per_label;
  std::map<std::string, std::map<std::string, std::size_t>> confusion;  // gold -> predicted -> n
};

struct EsrSection {
  Fraction overall;
  std::map<std::string, Fraction> per_label;
};

struct UecRow {
  std::string id;
  std::string label;
  double flight_time = 0.0;
  double energy = 0.0;
};

struct UecMean {
  std::size_t n = 0;
  double flight_time = 0.0;
  double energy = 0.0;
};

struct UecSection {
  std::vector<UecRow> rows;  // successful runs only
  std::map<std::string, UecMean> per_label;
  std::vector<std::pair<std::string, std::string>> excluded;  // id, cause
};

struct AblationRow {
  std::string id;
  bool enabled = false;
  bool prohibited = false;
};

struct AblationSection {
  Fraction enabled;
  Fraction prohibited;
  std::vector<AblationRow> rows;
};

struct MetricsReport {
  std::string prompt_style;
  std::string backend_id;
  std::string config_digest;
  std::size_t records = 0;
  std::optional<IraSection> ira;
  std::optional<EsrSection> esr;
  std::optional<UecSection> uec;
  std::optional<AblationSection> ablation;
  std::vector<RecordResult> results;
};

/// FNV-1a over a canonical rendering of everything that affects results.
std::string config_digest(const PipelineConfig& cfg, std::string_view backend_id);

/// Completion checks of one record against a finished run.
bool criteria_met(const TaskRecord& record, const TaskOutcome& outcome, const WorldModel& world,
                  std::string* why = nullptr);

/// Throws PreconditionViolation on an empty dataset.
MetricsReport run_ira(const Dataset& ds, const Workspace& ws, const BenchOptions& opts);
/// Throws WorldLoadFailure when a record's world is missing.
MetricsReport run_esr(const Dataset& ds, const Workspace& ws, const BenchOptions& opts);
MetricsReport run_uec(const Dataset& ds, const Workspace& ws, const BenchOptions& opts);
/// Every record must be ST (PreconditionViolation otherwise).
MetricsReport run_tool_ablation(const Dataset& ds, const Workspace& ws, const BenchOptions& opts);

enum class ReportFormat { json, csv };
std::optional<ReportFormat> parse_report_format(std::string_view tag);
/// Throws UnsupportedFormat for unknown tags.
std::string emit_report(const MetricsReport& report, std::string_view format);
std::string emit_report(const MetricsReport& report, ReportFormat format);

}  // namespace aerotask
