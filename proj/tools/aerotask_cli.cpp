#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "aerotask/bench.hpp"
#include "aerotask/energy.hpp"
#include "aerotask/error.hpp"
#include "aerotask/pipeline.hpp"

#ifdef AEROTASK_WITH_NET
#include "aerotask/net/remote_backend.hpp"
#include "aerotask/net/server.hpp"
#endif

using namespace aerotask;

namespace {

struct Common {
  std::string data_dir = AEROTASK_DATA_DIR;
  std::string config;
  std::string style;
  std::string backend = "reference";
  std::string memory;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--data-dir", c.data_dir, "directory with worlds/, knowledge.txt, tasks.tsv");
  cmd->add_option("--config", c.config, "JSON pipeline config");
  cmd->add_option("--style", c.style, "prompt style: RP, CP or EIP");
  cmd->add_option("--backend", c.backend, "reference or remote");
  cmd->add_option("--memory", c.memory, "failure memory file (JSON lines)");
}

PipelineConfig config_of(const Common& c, const Workspace& ws) {
  PipelineConfig cfg = ws.default_config();
  if (!c.config.empty()) cfg = load_pipeline_config(c.config, cfg);
  if (!c.style.empty()) {
    auto s = parse_prompt_style(c.style);
    if (!s) throw Error(Errc::BadParameter, "unknown prompt style '" + c.style + "'");
    cfg.style = *s;
  }
  return cfg;
}

BackendFactory backend_of(const Common& c) {
  if (c.backend == "reference") return [] { return std::make_unique<ReferenceBackend>(); };
#ifdef AEROTASK_WITH_NET
  if (c.backend == "remote") {
    const auto rc = net::RemoteConfig::from_env();
    return [rc] { return std::make_unique<net::RemoteBackend>(rc); };
  }
#endif
  throw Error(Errc::UnknownBackend, "unknown backend '" + c.backend + "'");
}

void write_out(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error(Errc::MalformedDocument, "cannot write " + path);
  out << text;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::MalformedDocument, "cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Task classification, planning and execution for indoor UAV missions"};
  app.require_subcommand(1);

  Common common;
  std::string dataset, format = "json", output;
  unsigned threads = 0;

  auto add_bench = [&](const char* name, const char* help) {
    auto* cmd = app.add_subcommand(name, help);
    add_common(cmd, common);
    cmd->add_option("--dataset", dataset, "task file (default: bundled tasks.tsv)");
    cmd->add_option("--format", format, "json or csv");
    cmd->add_option("-o,--output", output, "report path (default stdout)");
    cmd->add_option("--threads", threads, "worker threads (0 = all cores)");
    return cmd;
  };
  auto* ira = add_bench("run-ira", "intent recognition accuracy");
  auto* esr = add_bench("run-esr", "execution success rate");
  auto* uec = add_bench("run-uec", "flight time and energy per task");
  auto* ablation = add_bench("ablation", "ST records with tools enabled vs prohibited (default: st_ablation.tsv)");
  std::string label_filter;
  for (auto* cmd : {ira, esr, uec}) cmd->add_option("--label", label_filter, "only SI/ST/CI/CT records");

  auto* cal = app.add_subcommand("calibrate", "fit complexity weights on a calibration set");
  std::string cal_file;
  cal->add_option("--data-dir", common.data_dir);
  cal->add_option("file", cal_file, "calibration set (default: calibration.txt)");

  auto* classify = app.add_subcommand("classify", "label one instruction");
  auto* run = app.add_subcommand("run", "classify, plan and fly one instruction in the simulator");
  std::string world = "apartment", instruction;
  bool implicit = false;
  std::string trace_csv;
  for (auto* cmd : {classify, run}) {
    add_common(cmd, common);
    cmd->add_option("--world", world, "world id");
    cmd->add_flag("--implicit", implicit, "instruction is an implicit request");
    cmd->add_option("instruction", instruction)->required();
  }
  run->add_option("--trace", trace_csv, "write telemetry CSV here");
  bool no_tools = false;
  run->add_flag("--no-tools", no_tools, "prohibit tool calls");

  auto* energy = app.add_subcommand("energy", "energy and SPR segments of a flight log");
  std::string log_file;
  double window = 2.0;
  energy->add_option("log", log_file, "CSV flight log")->required();
  energy->add_option("--window", window, "SPR window seconds");

#ifdef AEROTASK_WITH_NET
  auto* serve = app.add_subcommand("serve", "HTTP gateway with server-sent events");
  std::string serve_config;
  net::ServerConfig flags;
  serve->add_option("--config", serve_config, "JSON server config");
  auto* host_opt = serve->add_option("--host", flags.host);
  auto* port_opt = serve->add_option("--port", flags.port);
  auto* data_opt = serve->add_option("--data-dir", flags.data_dir);
  auto* transcripts_opt = serve->add_option("--transcripts", flags.transcript_dir);
#endif

  CLI11_PARSE(app, argc, argv);

  try {
    if (cal->parsed()) {
      const auto path = cal_file.empty() ? std::filesystem::path(common.data_dir) / "calibration.txt"
                                         : std::filesystem::path(cal_file);
      const auto set = load_calibration_file(path);
      const auto c = calibrate(set, ComplexityConfig{});
      std::cout << "examples " << set.size() << "\n"
                << "misclassified " << misclassifications(set, c) << "\n"
                << "alpha " << format_number(c.alpha) << "\nbeta " << format_number(c.beta)
                << "\ngamma_p " << format_number(c.gamma_p) << "\ngamma_d "
                << format_number(c.gamma_d) << "\ngamma_a " << format_number(c.gamma_a)
                << "\ntheta " << format_number(c.theta) << "\n";
      return 0;
    }
    if (energy->parsed()) {
      const auto log = parse_flight_log(read_file(log_file));
      const auto rep = energy_report(log.samples, log.dt);
      std::cout << "flight_time " << format_number(rep.flight_time) << "\nenergy "
                << format_number(rep.energy) << "\n";
      const auto windows = spr_windows(log.samples, rep.power, window, log.dt);
      for (const auto& seg : classify_efficiency(windows)) {
        std::cout << "windows " << seg.first << "-" << seg.last << " "
                  << to_string(seg.efficiency) << "\n";
      }
      return 0;
    }
#ifdef AEROTASK_WITH_NET
    if (serve->parsed()) {
      // Defaults, then the config file, then the environment, then flags.
      net::ServerConfig server_cfg;
      if (!serve_config.empty()) server_cfg = net::load_server_config(serve_config, server_cfg);
      server_cfg = net::apply_env_overrides(server_cfg);
      if (host_opt->count()) server_cfg.host = flags.host;
      if (port_opt->count()) server_cfg.port = flags.port;
      if (data_opt->count()) server_cfg.data_dir = flags.data_dir;
      if (transcripts_opt->count()) server_cfg.transcript_dir = flags.transcript_dir;
      return net::run_server(server_cfg);
    }
#endif

    const Workspace ws = Workspace::load(common.data_dir);
    PipelineConfig cfg = config_of(common, ws);
    FailureMemory memory;
    if (!common.memory.empty()) memory = FailureMemory::load(common.memory);

    if (classify->parsed() || run->parsed()) {
      auto backend = backend_of(common)();
      const TaskRequest req{instruction, world, implicit ? Phrasing::implicit : Phrasing::explicit_};
      if (classify->parsed()) {
        const auto c = classify_request(req, ws, *backend, cfg, memory);
        std::cout << "instruction " << c.instruction << "\n"
                  << "features p=" << c.features.p << " d=" << c.features.d
                  << " l=" << c.features.l << "\n"
                  << "score " << format_number(c.score.total) << " theta "
                  << format_number(cfg.complexity.theta) << "\n"
                  << "unknown";
        for (const auto& k : c.unknown) std::cout << ' ' << k;
        std::cout << "\nlabel " << to_string(c.label) << "\n";
        return 0;
      }
      cfg.tools_enabled = !no_tools;
      const auto out = run_task(req, ws, *backend, cfg, memory);
      if (out.classification) std::cout << "label " << to_string(out.classification->label) << "\n";
      if (out.plan) std::cout << render_plan(*out.plan);
      for (const auto& s : out.report.segments) {
        std::cout << "segment " << s.index << (s.ok ? " ok" : " failed") << "\n" << render_mlv(s.mlv);
      }
      std::cout << "flight_time " << format_number(out.flight_time) << "\n"
                << (out.ok() ? "success" : "failure: " + out.failure) << "\n";
      if (!trace_csv.empty()) write_out(export_samples_csv(out.trajectory), trace_csv);
      if (!common.memory.empty()) memory.save(common.memory);
      return out.ok() ? 0 : 1;
    }

    Dataset ds;
    if (!dataset.empty()) {
      ds = load_dataset_file(dataset, &ws);
    } else if (ablation->parsed()) {
      ds = load_dataset_file(ws.root() / "st_ablation.tsv", &ws);
    } else {
      ds = load_bundled_dataset(ws);
    }
    if (!label_filter.empty()) {
      auto l = parse_label(label_filter);
      if (!l) throw Error(Errc::BadLabel, "label '" + label_filter + "'");
      ds = ds.subset(*l);
    }
    BenchOptions opts{cfg, backend_of(common), memory, threads};
    MetricsReport rep;
    if (ira->parsed()) rep = run_ira(ds, ws, opts);
    if (esr->parsed()) rep = run_esr(ds, ws, opts);
    if (uec->parsed()) rep = run_uec(ds, ws, opts);
    if (ablation->parsed()) rep = run_tool_ablation(ds, ws, opts);
    write_out(emit_report(rep, format), output);
    return 0;
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
}
