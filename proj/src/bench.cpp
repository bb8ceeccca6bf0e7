#include "aerotask/bench.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "aerotask/energy.hpp"
#include "aerotask/error.hpp"

namespace aerotask {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos
                                                                   : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) fn(i);
  };
  if (threads <= 1) {
    worker();
    return;
  }
  std::vector<std::jthread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
}

std::unique_ptr<Backend> make_backend(const BenchOptions& opts) {
  if (opts.backend) return opts.backend();
  return std::make_unique<ReferenceBackend>();
}

struct RunResult {
  TaskOutcome outcome;
  bool success = false;
  std::string why;
  double energy = 0.0;
  double flight_time = 0.0;
};

std::vector<RunResult> run_records(const Dataset& ds, const Workspace& ws, const BenchOptions& opts,
                                   const PipelineConfig& cfg) {
  for (const auto& r : ds.records) {
    if (!ws.has_world(r.world)) {
      throw Error(Errc::WorldLoadFailure, "record " + r.id + ": world '" + r.world + "' not loaded");
    }
  }
  std::vector<RunResult> out(ds.records.size());
  parallel_for(ds.records.size(), opts.threads, [&](std::size_t i) {
    const auto& rec = ds.records[i];
    auto backend = make_backend(opts);
    FailureMemory mem = opts.memory;
    RunResult r;
    r.outcome = run_task(rec.request(), ws, *backend, cfg, mem);
    if (r.outcome.ok()) {
      r.success = criteria_met(rec, r.outcome, ws.world(rec.world), &r.why);
    } else {
      r.why = r.outcome.failure;
    }
    if (!r.outcome.trajectory.empty()) {
      const auto e = energy_report(r.outcome.trajectory, cfg.sim.dt);
      r.energy = e.energy;
      r.flight_time = r.outcome.flight_time;
    }
    out[i] = std::move(r);
  });
  return out;
}

MetricsReport base_report(const Dataset& ds, const BenchOptions& opts) {
  if (ds.records.empty()) throw Error(Errc::PreconditionViolation, "dataset is empty");
  MetricsReport rep;
  rep.prompt_style = std::string(to_string(opts.config.style));
  rep.backend_id = make_backend(opts)->id();
  rep.config_digest = config_digest(opts.config, rep.backend_id);
  rep.records = ds.records.size();
  return rep;
}

EsrSection esr_of(const Dataset& ds, const std::vector<RunResult>& runs) {
  EsrSection esr;
  for (const auto& [label, n] : ds.per_label()) esr.per_label[label].total = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const std::string label = to_string(ds.records[i].label);
    ++esr.overall.total;
    ++esr.per_label[label].total;
    if (runs[i].success) {
      ++esr.overall.hits;
      ++esr.per_label[label].hits;
    }
  }
  return esr;
}

std::vector<RecordResult> results_of(const Dataset& ds, const std::vector<RunResult>& runs) {
  std::vector<RecordResult> out;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    RecordResult r;
    r.id = ds.records[i].id;
    r.gold = to_string(ds.records[i].label);
    if (runs[i].outcome.classification) r.predicted = to_string(runs[i].outcome.classification->label);
    r.success = runs[i].success;
    r.failure = runs[i].success ? "" : runs[i].why;
    r.flight_time = runs[i].flight_time;
    r.energy = runs[i].energy;
    out.push_back(std::move(r));
  }
  return out;
}

nlohmann::json fraction_json(const Fraction& f) {
  return {{"hits", f.hits}, {"total", f.total}, {"value", f.value()}};
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<Criterion> parse_criteria(std::string_view text) {
  std::vector<Criterion> out;
  for (const auto& raw : split(text, ';')) {
    const std::string item = trim(raw);
    if (item.empty()) continue;
    const auto colon = item.find(':');
    const std::string key = colon == std::string::npos ? item : item.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : trim(item.substr(colon + 1));
    Criterion c;
    if (key == "visit" && !arg.empty()) {
      c = {CriterionKind::visit, arg};
    } else if (key == "photo") {
      c = {CriterionKind::photo, arg};
    } else if (key == "no_collision" && arg.empty()) {
      c.kind = CriterionKind::no_collision;
    } else if (key == "segments_valid" && arg.empty()) {
      c.kind = CriterionKind::segments_valid;
    } else if (key == "landed" && arg.empty()) {
      c.kind = CriterionKind::landed;
    } else {
      throw Error(Errc::MalformedDocument, "unknown completion criterion '" + item + "'");
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::string render_criteria(const std::vector<Criterion>& criteria) {
  std::string out;
  for (const auto& c : criteria) {
    if (!out.empty()) out += ';';
    switch (c.kind) {
      case CriterionKind::visit: out += "visit:" + c.target; break;
      case CriterionKind::photo: out += c.target.empty() ? "photo" : "photo:" + c.target; break;
      case CriterionKind::no_collision: out += "no_collision"; break;
      case CriterionKind::segments_valid: out += "segments_valid"; break;
      case CriterionKind::landed: out += "landed"; break;
    }
  }
  return out;
}

std::map<std::string, std::size_t> Dataset::per_label() const {
  std::map<std::string, std::size_t> out;
  for (const auto& r : records) ++out[to_string(r.label)];
  return out;
}

Dataset Dataset::subset(const TaskLabel& label) const {
  Dataset out;
  for (const auto& r : records) {
    if (r.label == label) out.records.push_back(r);
  }
  return out;
}

Dataset load_dataset(std::string_view document, const Workspace* ws) {
  Dataset ds;
  std::istringstream in{std::string(document)};
  std::size_t line_no = 0;
  std::set<std::string> ids;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || trim(line).front() == '#') continue;
    const auto f = split(line, '\t');
    const std::string where = "line " + std::to_string(line_no);
    if (f.size() != 6) {
      throw Error(Errc::MalformedDocument, where + ": expected 6 tab-separated fields");
    }
    TaskRecord r;
    r.id = trim(f[0]);
    if (r.id.empty() || !ids.insert(r.id).second) {
      throw Error(Errc::MalformedDocument, where + ": missing or duplicate id '" + r.id + "'");
    }
    auto label = parse_label(trim(f[1]));
    if (!label) throw Error(Errc::BadLabel, where + ": label '" + trim(f[1]) + "' is not SI/ST/CI/CT");
    r.label = *label;
    r.world = trim(f[2]);
    if (ws && !ws->has_world(r.world)) {
      throw Error(Errc::UnknownWorld, where + ": world '" + r.world + "'");
    }
    const std::string phrasing = trim(f[3]);
    if (phrasing == "explicit") {
      r.phrasing = Phrasing::explicit_;
    } else if (phrasing == "implicit") {
      r.phrasing = Phrasing::implicit;
    } else {
      throw Error(Errc::MalformedDocument, where + ": phrasing '" + phrasing + "'");
    }
    r.instruction = trim(f[4]);
    if (r.instruction.empty()) throw Error(Errc::MalformedDocument, where + ": empty instruction");
    r.criteria = parse_criteria(f[5]);
    if (r.criteria.empty()) throw Error(Errc::MalformedDocument, where + ": no completion criteria");
    ds.records.push_back(std::move(r));
  }
  return ds;
}

Dataset load_dataset_file(const std::filesystem::path& path, const Workspace* ws) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::MalformedDocument, "cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return load_dataset(buf.str(), ws);
}

Dataset load_bundled_dataset(const Workspace& ws) {
  Dataset ds = load_dataset_file(ws.root() / "tasks.tsv", &ws);
  if (ds.records.size() != kBundledTaskCount) {
    throw Error(Errc::CountMismatch, "bundled dataset has " + std::to_string(ds.records.size()) +
                                         " records, expected " + std::to_string(kBundledTaskCount));
  }
  for (const char* code : {"SI", "ST", "CI", "CT"}) {
    const auto n = ds.per_label()[code];
    if (n != kBundledPerLabel) {
      throw Error(Errc::CountMismatch, std::string(code) + " has " + std::to_string(n) + " records");
    }
  }
  return ds;
}

std::string config_digest(const PipelineConfig& cfg, std::string_view backend_id) {
  const auto& c = cfg.complexity;
  const auto& s = cfg.sim;
  std::string canon;
  auto put = [&](std::string_view key, const std::string& value) {
    canon += key;
    canon += '=';
    canon += value;
    canon += ';';
  };
  put("backend", std::string(backend_id));
  put("style", std::string(to_string(cfg.style)));
  put("alpha", format_number(c.alpha));
  put("beta", format_number(c.beta));
  put("gamma_p", format_number(c.gamma_p));
  put("gamma_d", format_number(c.gamma_d));
  put("gamma_a", format_number(c.gamma_a));
  put("theta", format_number(c.theta));
  put("l_min", std::to_string(cfg.constraints.l_min));
  put("l_max", std::to_string(cfg.constraints.l_max));
  put("dt", format_number(s.dt));
  put("cruise", format_number(s.cruise_speed));
  put("accel", format_number(s.acceleration));
  put("yaw_rate", format_number(s.yaw_rate));
  put("takeoff_alt", format_number(s.takeoff_altitude));
  put("capture_s", format_number(s.capture_seconds));
  put("hover_level", format_number(s.hover_level));
  put("increment", format_number(s.maneuver_increment));
  put("photo_radius", format_number(s.photo_radius));
  put("tools", cfg.tools_enabled ? "on" : "off");
  put("eip_retries", std::to_string(cfg.eip_retries));
  put("lexicon", std::string(lexicon::kVersion));
  return fnv1a_hex(canon);
}

bool criteria_met(const TaskRecord& record, const TaskOutcome& outcome, const WorldModel& world,
                  std::string* why) {
  auto fail = [&](std::string msg) {
    if (why) *why = std::move(msg);
    return false;
  };
  for (const auto& c : record.criteria) {
    switch (c.kind) {
      case CriterionKind::visit: {
        const NamedBox* room = world.room(c.target);
        auto anchor = world.waypoint(c.target);
        if (!room && !anchor) return fail("visit:" + c.target + " names nothing in the world");
        const bool seen = std::any_of(
            outcome.trajectory.begin(), outcome.trajectory.end(), [&](const TelemetryPoint& p) {
              if (room) return room->box.contains(p.position);
              const double dx = p.position.x - anchor->x;
              const double dy = p.position.y - anchor->y;
              return dx * dx + dy * dy <= 1.0;
            });
        if (!seen) return fail("never visited " + c.target);
        break;
      }
      case CriterionKind::photo: {
        const bool got = std::any_of(outcome.photos.begin(), outcome.photos.end(), [&](const PhotoEvent& p) {
          return p.achieved && (c.target.empty() || p.target == c.target);
        });
        if (!got) return fail(c.target.empty() ? "no photo taken" : "no photo of " + c.target);
        break;
      }
      case CriterionKind::no_collision:
        if (outcome.collided) return fail("collision");
        break;
      case CriterionKind::segments_valid:
        if (outcome.report.segments.empty()) return fail("nothing dispatched");
        for (const auto& s : outcome.report.segments) {
          if (!s.ok || !validate_mlv(s.mlv, {}).accepted()) {
            return fail("segment " + std::to_string(s.index) + " not valid");
          }
        }
        break;
      case CriterionKind::landed:
        if (outcome.airborne_at_end) return fail("still airborne");
        break;
    }
  }
  return true;
}

MetricsReport run_ira(const Dataset& ds, const Workspace& ws, const BenchOptions& opts) {
  MetricsReport rep = base_report(ds, opts);
  std::vector<std::string> predicted(ds.records.size());
  std::vector<std::string> failures(ds.records.size());
  parallel_for(ds.records.size(), opts.threads, [&](std::size_t i) {
    auto backend = make_backend(opts);
    try {
      predicted[i] = to_string(classify_request(ds.records[i].request(), ws, *backend, opts.config,
                                                opts.memory)
                                   .label);
    } catch (const Error& e) {
      failures[i] = e.what();
    }
  });
  IraSection ira;
  for (const auto& [label, n] : ds.per_label()) ira.per_label[label].total = 0;
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const std::string gold = to_string(ds.records[i].label);
    const std::string got = predicted[i].empty() ? "none" : predicted[i];
    ++ira.overall.total;
    ++ira.per_label[gold].total;
    ++ira.confusion[gold][got];
    const bool hit = got == gold;
    if (hit) {
      ++ira.overall.hits;
      ++ira.per_label[gold].hits;
    }
    RecordResult r;
    r.id = ds.records[i].id;
    r.gold = gold;
    r.predicted = predicted[i];
    r.success = hit;
    r.failure = failures[i];
    rep.results.push_back(std::move(r));
  }
  rep.ira = std::move(ira);
  return rep;
}

MetricsReport run_esr(const Dataset& ds, const Workspace& ws, const BenchOptions& opts) {
  MetricsReport rep = base_report(ds, opts);
  const auto runs = run_records(ds, ws, opts, opts.config);
  rep.esr = esr_of(ds, runs);
  rep.results = results_of(ds, runs);
  return rep;
}

MetricsReport run_uec(const Dataset& ds, const Workspace& ws, const BenchOptions& opts) {
  MetricsReport rep = base_report(ds, opts);
  const auto runs = run_records(ds, ws, opts, opts.config);
  UecSection uec;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& rec = ds.records[i];
    if (!runs[i].success) {
      uec.excluded.emplace_back(rec.id, runs[i].why);
      continue;
    }
    const std::string label = to_string(rec.label);
    uec.rows.push_back({rec.id, label, runs[i].flight_time, runs[i].energy});
    auto& m = uec.per_label[label];
    ++m.n;
    m.flight_time += runs[i].flight_time;
    m.energy += runs[i].energy;
  }
  for (auto& [label, m] : uec.per_label) {
    m.flight_time /= static_cast<double>(m.n);
    m.energy /= static_cast<double>(m.n);
  }
  rep.esr = esr_of(ds, runs);
  rep.uec = std::move(uec);
  rep.results = results_of(ds, runs);
  return rep;
}

MetricsReport run_tool_ablation(const Dataset& ds, const Workspace& ws, const BenchOptions& opts) {
  const TaskLabel st{Complexity::simple, Autonomy::tool_assisted};
  for (const auto& r : ds.records) {
    if (!(r.label == st)) {
      throw Error(Errc::PreconditionViolation, "record " + r.id + " is not ST");
    }
  }
  MetricsReport rep = base_report(ds, opts);
  PipelineConfig on = opts.config;
  on.tools_enabled = true;
  PipelineConfig off = opts.config;
  off.tools_enabled = false;
  const auto with = run_records(ds, ws, opts, on);
  const auto without = run_records(ds, ws, opts, off);
  AblationSection ab;
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    ab.rows.push_back({ds.records[i].id, with[i].success, without[i].success});
    ++ab.enabled.total;
    ++ab.prohibited.total;
    if (with[i].success) ++ab.enabled.hits;
    if (without[i].success) ++ab.prohibited.hits;
  }
  rep.ablation = std::move(ab);
  rep.results = results_of(ds, with);
  return rep;
}

std::optional<ReportFormat> parse_report_format(std::string_view tag) {
  if (tag == "json") return ReportFormat::json;
  if (tag == "csv") return ReportFormat::csv;
  return std::nullopt;
}

std::string emit_report(const MetricsReport& report, std::string_view format) {
  auto f = parse_report_format(format);
  if (!f) throw Error(Errc::UnsupportedFormat, "report format '" + std::string(format) + "'");
  return emit_report(report, *f);
}

std::string emit_report(const MetricsReport& rep, ReportFormat format) {
  if (format == ReportFormat::json) {
    nlohmann::json j;
    j["meta"] = {{"prompt_style", rep.prompt_style},
                 {"backend", rep.backend_id},
                 {"config_digest", rep.config_digest},
                 {"records", rep.records}};
    if (rep.ira) {
      auto& s = j["ira"];
      s["overall"] = fraction_json(rep.ira->overall);
      for (const auto& [l, f] : rep.ira->per_label) s["per_label"][l] = fraction_json(f);
      s["confusion"] = rep.ira->confusion;
    }
    if (rep.esr) {
      auto& s = j["esr"];
      s["overall"] = fraction_json(rep.esr->overall);
      for (const auto& [l, f] : rep.esr->per_label) s["per_label"][l] = fraction_json(f);
    }
    if (rep.uec) {
      auto& s = j["uec"];
      s["rows"] = nlohmann::json::array();
      for (const auto& r : rep.uec->rows) {
        s["rows"].push_back({{"id", r.id}, {"label", r.label}, {"flight_time", r.flight_time},
                             {"energy", r.energy}});
      }
      for (const auto& [l, m] : rep.uec->per_label) {
        s["per_label"][l] = {{"n", m.n}, {"flight_time", m.flight_time}, {"energy", m.energy}};
      }
      s["excluded"] = nlohmann::json::array();
      for (const auto& [id, why] : rep.uec->excluded) s["excluded"].push_back({{"id", id}, {"cause", why}});
    }
    if (rep.ablation) {
      auto& s = j["ablation"];
      s["enabled"] = fraction_json(rep.ablation->enabled);
      s["prohibited"] = fraction_json(rep.ablation->prohibited);
      s["rows"] = nlohmann::json::array();
      for (const auto& r : rep.ablation->rows) {
        s["rows"].push_back({{"id", r.id}, {"enabled", r.enabled}, {"prohibited", r.prohibited}});
      }
    }
    j["records"] = nlohmann::json::array();
    for (const auto& r : rep.results) {
      j["records"].push_back({{"id", r.id},
                              {"gold", r.gold},
                              {"predicted", r.predicted},
                              {"success", r.success},
                              {"failure", r.failure},
                              {"flight_time", r.flight_time},
                              {"energy", r.energy}});
    }
    return j.dump(2) + "\n";
  }

  // Long format: section,key,label,field,value
  std::string out = "section,key,label,field,value\n";
  auto row = [&](std::string_view section, std::string_view key, std::string_view label,
                 std::string_view field, const std::string& value) {
    std::string clean = value;
    std::replace(clean.begin(), clean.end(), ',', ';');
    std::replace(clean.begin(), clean.end(), '\n', ' ');
    out += std::string(section) + "," + std::string(key) + "," + std::string(label) + "," +
           std::string(field) + "," + clean + "\n";
  };
  auto frac = [&](std::string_view section, std::string_view key, std::string_view label,
                  const Fraction& f) {
    row(section, key, label, "hits", std::to_string(f.hits));
    row(section, key, label, "total", std::to_string(f.total));
    row(section, key, label, "value", format_number(f.value()));
  };
  row("meta", "prompt_style", "", "", rep.prompt_style);
  row("meta", "backend", "", "", rep.backend_id);
  row("meta", "config_digest", "", "", rep.config_digest);
  row("meta", "records", "", "", std::to_string(rep.records));
  if (rep.ira) {
    frac("ira", "overall", "", rep.ira->overall);
    for (const auto& [l, f] : rep.ira->per_label) frac("ira", "per_label", l, f);
    for (const auto& [gold, row_counts] : rep.ira->confusion) {
      for (const auto& [pred, n] : row_counts) row("ira", "confusion", gold, pred, std::to_string(n));
    }
  }
  if (rep.esr) {
    frac("esr", "overall", "", rep.esr->overall);
    for (const auto& [l, f] : rep.esr->per_label) frac("esr", "per_label", l, f);
  }
  if (rep.uec) {
    for (const auto& r : rep.uec->rows) {
      row("uec", r.id, r.label, "flight_time", format_number(r.flight_time));
      row("uec", r.id, r.label, "energy", format_number(r.energy));
    }
    for (const auto& [l, m] : rep.uec->per_label) {
      row("uec", "mean", l, "n", std::to_string(m.n));
      row("uec", "mean", l, "flight_time", format_number(m.flight_time));
      row("uec", "mean", l, "energy", format_number(m.energy));
    }
    for (const auto& [id, why] : rep.uec->excluded) row("uec", "excluded", id, "cause", why);
  }
  if (rep.ablation) {
    frac("ablation", "enabled", "", rep.ablation->enabled);
    frac("ablation", "prohibited", "", rep.ablation->prohibited);
    for (const auto& r : rep.ablation->rows) {
      row("ablation", r.id, "", "enabled", r.enabled ? "1" : "0");
      row("ablation", r.id, "", "prohibited", r.prohibited ? "1" : "0");
    }
  }
  for (const auto& r : rep.results) {
    row("record", r.id, r.gold, "predicted", r.predicted);
    row("record", r.id, r.gold, "success", r.success ? "1" : "0");
    if (!r.failure.empty()) row("record", r.id, r.gold, "failure", r.failure);
  }
  return out;
}

}  // namespace aerotask
