#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "aerotask/bench.hpp"
#include "aerotask/energy.hpp"
#include "aerotask/error.hpp"
#include "support/oracles.hpp"

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

const Workspace& ws() {
  static const Workspace w = Workspace::load();
  return w;
}

BenchOptions reference_options() {
  BenchOptions o;
  o.config = ws().default_config();
  o.threads = 2;
  return o;
}

// Answers every classify prompt with SI and defers the rest to the reference.
std::unique_ptr<Backend> always_si() {
  auto ref = std::make_shared<ReferenceBackend>();
  return std::make_unique<ScriptedBackend>("always-si", [ref](const std::string& prompt) {
    if (prompt.find("kind: classify") != std::string::npos) return std::string("label: SI\n");
    return ref->complete(prompt);
  });
}

Dataset ablation_fixture() {
  return load_dataset_file(std::filesystem::path(AEROTASK_DATA_DIR) / "st_ablation.tsv", &ws());
}

}  // namespace

TEST_CASE("criteria round-trip") {
  const std::string text = "visit:kitchen;photo:kitchen;photo;no_collision;segments_valid;landed";
  const auto c = parse_criteria(text);
  REQUIRE(c.size() == 6);
  CHECK(c[2].kind == CriterionKind::photo);
  CHECK(c[2].target.empty());
  CHECK(render_criteria(c) == text);
  CHECK(error_of([] { parse_criteria("fly:kitchen"); }) == Errc::MalformedDocument);
}

TEST_CASE("dataset loading errors") {
  const std::string good = "a1\tSI\tapartment\texplicit\ttake off\tlanded\n";
  CHECK(load_dataset(good, &ws()).records.size() == 1);
  CHECK(load_dataset("", &ws()).records.empty());
  CHECK(error_of([&] { load_dataset("a1\tXX\tapartment\texplicit\ttake off\tlanded\n", &ws()); }) ==
        Errc::BadLabel);
  CHECK(error_of([&] { load_dataset("a1\tSI\tmoon\texplicit\ttake off\tlanded\n", &ws()); }) ==
        Errc::UnknownWorld);
  CHECK(error_of([&] { load_dataset("a1\tSI\tapartment\n", &ws()); }) == Errc::MalformedDocument);
}

TEST_CASE("bundled dataset counts") {
  const auto ds = load_bundled_dataset(ws());
  CHECK(ds.records.size() == kBundledTaskCount);
  for (const auto& entry : ds.per_label()) CHECK_MESSAGE(entry.second == kBundledPerLabel, entry.first);

  const auto dir = std::filesystem::temp_directory_path() / "aerotask_short_ws";
  std::filesystem::create_directories(dir / "worlds");
  std::filesystem::copy_file(ws().root() / "worlds" / "apartment.world",
                             dir / "worlds" / "apartment.world",
                             std::filesystem::copy_options::overwrite_existing);
  std::filesystem::copy_file(ws().root() / "knowledge.txt", dir / "knowledge.txt",
                             std::filesystem::copy_options::overwrite_existing);
  {
    std::ofstream out(dir / "tasks.tsv");
    out << "a1\tSI\tapartment\texplicit\ttake off\tlanded\n";
  }
  const auto short_ws = Workspace::load(dir);
  CHECK(error_of([&] { load_bundled_dataset(short_ws); }) == Errc::CountMismatch);
  std::filesystem::remove_all(dir);
}

TEST_CASE("ira with an always-simple-independent backend") {
  auto opts = reference_options();
  opts.backend = always_si;
  const auto rep = run_ira(load_bundled_dataset(ws()), ws(), opts);
  REQUIRE(rep.ira);
  CHECK(rep.ira->overall.hits == 40);
  CHECK(rep.ira->overall.value() == doctest::Approx(0.25));
  CHECK(rep.ira->per_label.at("SI").value() == 1.0);
  CHECK(rep.ira->per_label.at("CT").value() == 0.0);
  CHECK(rep.ira->confusion.at("CT").at("SI") == 40);
  CHECK(rep.backend_id == "always-si");
}

TEST_CASE("empty dataset is rejected") {
  CHECK(error_of([] { run_ira({}, ws(), reference_options()); }) == Errc::PreconditionViolation);
  CHECK(error_of([] { run_esr({}, ws(), reference_options()); }) == Errc::PreconditionViolation);
}

TEST_CASE("missing world fails the esr run") {
  Dataset ds = load_dataset("a1\tSI\tnowhere\texplicit\ttake off\tlanded\n");
  CHECK(error_of([&] { run_esr(ds, ws(), reference_options()); }) == Errc::WorldLoadFailure);
}

TEST_CASE("reports are deterministic and round-trip") {
  const auto ds = load_bundled_dataset(ws()).subset(*parse_label("SI"));
  auto opts = reference_options();
  const auto a = run_esr(ds, ws(), opts);
  opts.threads = 1;
  const auto b = run_esr(ds, ws(), opts);
  CHECK(emit_report(a, "json") == emit_report(b, "json"));
  CHECK(emit_report(a, "csv") == emit_report(b, "csv"));
  CHECK(a.esr->overall.value() == 1.0);

  const auto j = nlohmann::json::parse(emit_report(a, "json"));
  CHECK(j["meta"]["config_digest"] == a.config_digest);
  CHECK(j["esr"]["overall"]["hits"] == a.esr->overall.hits);
  CHECK(j["records"].size() == ds.records.size());

  const auto csv = emit_report(a, ReportFormat::csv);
  CHECK(csv.rfind("section,key,label,field,value\n", 0) == 0);
  CHECK(csv.find("esr,overall,,hits," + std::to_string(a.esr->overall.hits) + "\n") !=
        std::string::npos);
  CHECK(error_of([&] { emit_report(a, "xml"); }) == Errc::UnsupportedFormat);
}

TEST_CASE("config digest tracks every setting") {
  const auto base = ws().default_config();
  auto other = base;
  other.constraints.l_max = 6;
  CHECK(config_digest(base, "reference") == config_digest(base, "reference"));
  CHECK(config_digest(base, "reference") != config_digest(other, "reference"));
  CHECK(config_digest(base, "reference") != config_digest(base, "remote"));
}

TEST_CASE("uec of a hover task") {
  const auto ds =
      load_dataset("h1\tSI\tapartment\texplicit\ttake off and hover for 4 seconds\tlanded\n", &ws());
  auto opts = reference_options();
  const auto rep = run_uec(ds, ws(), opts);
  REQUIRE(rep.uec);
  REQUIRE(rep.uec->rows.size() == 1);
  const auto& row = rep.uec->rows[0];

  ReferenceBackend backend;
  FailureMemory mem;
  const auto out = run_task(ds.records[0].request(), ws(), backend, opts.config, mem);
  REQUIRE(out.ok());
  const auto e = energy_report(out.trajectory, opts.config.sim.dt);
  CHECK(row.energy == e.energy);
  CHECK(row.flight_time == out.flight_time);
  // Four motors at hover level for at least the commanded hold.
  const double hover_power = 4 * PowerModel{}.c * std::pow(opts.config.sim.hover_level, 3);
  CHECK(row.energy >= hover_power * 4.0);
  CHECK(rep.uec->per_label.at("SI").n == 1);
  CHECK(rep.uec->per_label.at("SI").energy == row.energy);
}

TEST_CASE("ablation needs simple tool-assisted records") {
  const auto ds = load_dataset("a1\tSI\tapartment\texplicit\ttake off\tlanded\n", &ws());
  CHECK(error_of([&] { run_tool_ablation(ds, ws(), reference_options()); }) ==
        Errc::PreconditionViolation);
}

TEST_CASE("ablation fixture: prohibited tools fail exactly the blocked corridors") {
  const auto ds = ablation_fixture();
  REQUIRE(ds.records.size() == 20);
  const auto rep = run_tool_ablation(ds, ws(), reference_options());
  REQUIRE(rep.ablation);
  CHECK(rep.ablation->enabled.value() > rep.ablation->prohibited.value());
  std::size_t blocked = 0;
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const auto& rec = ds.records[i];
    const auto& row = rep.ablation->rows[i];
    const bool b = oracle::corridor_blocked(ws().world(rec.world), rec.instruction);
    blocked += b;
    CHECK_MESSAGE(row.enabled, rec.id);
    CHECK_MESSAGE(row.prohibited == !b, rec.id);
  }
  CHECK(blocked > 0);
  CHECK(blocked < ds.records.size());
}

TEST_CASE("ablation without blocked corridors shows no gap") {
  auto ds = ablation_fixture();
  std::erase_if(ds.records, [](const TaskRecord& r) {
    return oracle::corridor_blocked(ws().world(r.world), r.instruction);
  });
  REQUIRE_FALSE(ds.records.empty());
  const auto rep = run_tool_ablation(ds, ws(), reference_options());
  CHECK(rep.ablation->enabled.hits == rep.ablation->prohibited.hits);
}
