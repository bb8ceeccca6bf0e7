#include "aerotask/energy.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

#include "aerotask/error.hpp"

namespace aerotask {

MotorOutputs motor_outputs(const std::vector<TelemetryPoint>& samples, double dt) {
  MotorOutputs out;
  out.dt = dt;
  for (auto& stream : out.levels) stream.reserve(samples.size());
  for (const auto& s : samples) {
    for (int i = 0; i < 4; ++i) out.levels[i].push_back(s.motors[i]);
  }
  return out;
}

double motor_power(double level, const PowerModel& model) {
  if (!(level >= 0.0 && level <= 1.0)) {
    throw Error(Errc::LevelOutOfRange, "motor level " + std::to_string(level) + " outside [0, 1]");
  }
  return model.c * level * level * level;
}

std::vector<double> total_power(const MotorOutputs& outputs, const PowerModel& model) {
  const std::size_t n = outputs.levels[0].size();
  for (const auto& stream : outputs.levels) {
    if (stream.size() != n) throw Error(Errc::MisalignedStreams, "motor streams differ in length");
  }
  std::vector<double> p(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    for (const auto& stream : outputs.levels) p[k] += motor_power(stream[k], model);
  }
  return p;
}

double integrate_energy(std::span<const double> power, double dt) {
  if (!(dt > 0)) throw Error(Errc::BadParameter, "dt must be positive");
  double e = 0.0;
  for (double p : power) e += p * dt;
  return e;
}

EnergyReport energy_report(const std::vector<TelemetryPoint>& samples, double dt,
                           const PowerModel& model) {
  EnergyReport r;
  r.power = total_power(motor_outputs(samples, dt), model);
  r.energy = integrate_energy(r.power, dt);
  r.flight_time = static_cast<double>(samples.size()) * dt;
  return r;
}

std::vector<SprWindow> spr_windows(std::span<const Vec3> velocities, std::span<const double> power,
                                   double window, double dt) {
  if (velocities.size() != power.size()) {
    throw Error(Errc::MisalignedStreams, "trajectory and power streams differ in length");
  }
  if (!(dt > 0) || !(window > 0)) throw Error(Errc::BadParameter, "window and dt must be positive");
  const double ratio = window / dt;
  const auto per = static_cast<std::size_t>(std::llround(ratio));
  if (per == 0 || std::abs(ratio - static_cast<double>(per)) > 1e-9 * ratio) {
    throw Error(Errc::BadParameter, "window must be a whole number of samples");
  }
  std::vector<SprWindow> out;
  for (std::size_t k = 0; (k + 1) * per <= power.size(); ++k) {
    SprWindow w;
    w.index = k;
    w.t_start = static_cast<double>(k * per) * dt;
    w.t_end = static_cast<double>((k + 1) * per) * dt;
    Vec3 sum;
    for (std::size_t i = k * per; i < (k + 1) * per; ++i) sum = sum + velocities[i];
    w.mean_speed = norm(sum * (1.0 / static_cast<double>(per)));
    w.energy = integrate_energy(power.subspan(k * per, per), dt);
    if (!(w.energy > 0)) {
      throw Error(Errc::ZeroPowerWindow, "window " + std::to_string(k) + " has no energy");
    }
    w.spr = w.mean_speed / w.energy;
    out.push_back(w);
  }
  return out;
}

std::vector<SprWindow> spr_windows(const std::vector<TelemetryPoint>& samples,
                                   std::span<const double> power, double window, double dt) {
  std::vector<Vec3> v;
  v.reserve(samples.size());
  for (const auto& s : samples) v.push_back(s.velocity);
  return spr_windows(v, power, window, dt);
}

std::string_view to_string(Efficiency e) { return e == Efficiency::high ? "high" : "low"; }

double median(std::vector<double> values) {
  if (values.empty()) throw Error(Errc::EmptyInput, "median of nothing");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2;
}

std::vector<EfficiencySegment> classify_efficiency(const std::vector<SprWindow>& windows) {
  if (windows.empty()) throw Error(Errc::EmptyInput, "no windows to classify");
  std::vector<double> sprs;
  for (const auto& w : windows) sprs.push_back(w.spr);
  const double m = median(sprs);

  std::vector<Efficiency> cls;
  std::vector<double> dist;
  for (double s : sprs) {
    cls.push_back(s >= m ? Efficiency::high : Efficiency::low);
    dist.push_back(std::abs(s - m));
  }
  // Shade: share of same-class windows at most as far from the median.
  std::vector<double> shade(sprs.size());
  for (std::size_t i = 0; i < sprs.size(); ++i) {
    std::size_t within = 0, total = 0;
    for (std::size_t j = 0; j < sprs.size(); ++j) {
      if (cls[j] != cls[i]) continue;
      ++total;
      if (dist[j] <= dist[i]) ++within;
    }
    shade[i] = static_cast<double>(within) / static_cast<double>(total);
  }

  std::vector<EfficiencySegment> out;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (out.empty() || out.back().efficiency != cls[i]) {
      EfficiencySegment seg;
      seg.first = windows[i].index;
      seg.efficiency = cls[i];
      out.push_back(seg);
    }
    out.back().last = windows[i].index;
    out.back().shades.push_back(shade[i]);
  }
  for (auto& seg : out) {
    double sum = 0.0;
    for (double s : seg.shades) sum += s;
    seg.shade = sum / static_cast<double>(seg.shades.size());
  }
  return out;
}

FlightLog parse_flight_log(std::string_view csv) {
  std::istringstream in{std::string(csv)};
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream cells(s);
    while (std::getline(cells, cell, ',')) {
      cell.erase(0, cell.find_first_not_of(" \t\r"));
      cell.erase(cell.find_last_not_of(" \t\r") + 1);
      out.push_back(cell);
    }
    return out;
  };
  if (!std::getline(in, line)) return {};
  const auto header = split(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* need : {"t", "n1", "n2", "n3", "n4", "x", "y", "z"}) {
    if (!col.contains(need)) {
      throw Error(Errc::MalformedDocument, std::string("flight log lacks column '") + need + "'");
    }
  }
  const bool has_velocity = col.contains("vx") && col.contains("vy") && col.contains("vz");

  FlightLog log;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split(line);
    auto num = [&](const char* name) {
      const std::size_t i = col.at(name);
      double v = 0.0;
      if (i >= cells.size()) {
        throw Error(Errc::MalformedDocument, "line " + std::to_string(line_no) + ": short row");
      }
      const std::string& c = cells[i];
      auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
      if (ec != std::errc{} || ptr != c.data() + c.size()) {
        throw Error(Errc::MalformedDocument,
                    "line " + std::to_string(line_no) + ": bad number '" + c + "'");
      }
      return v;
    };
    TelemetryPoint s;
    s.t = num("t");
    s.position = {num("x"), num("y"), num("z")};
    s.motors = {num("n1"), num("n2"), num("n3"), num("n4")};
    if (col.contains("yaw")) s.yaw_deg = num("yaw");
    if (has_velocity) s.velocity = {num("vx"), num("vy"), num("vz")};
    log.samples.push_back(s);
  }
  const auto& ss = log.samples;
  if (ss.size() >= 2) {
    log.dt = ss[1].t - ss[0].t;
    for (std::size_t i = 1; i < ss.size(); ++i) {
      if (std::abs((ss[i].t - ss[i - 1].t) - log.dt) > 1e-6) {
        throw Error(Errc::MisalignedStreams, "flight log sample spacing is not constant");
      }
    }
  }
  if (!has_velocity && log.dt > 0) {
    for (std::size_t i = 1; i < log.samples.size(); ++i) {
      log.samples[i].velocity =
          (log.samples[i].position - log.samples[i - 1].position) * (1.0 / log.dt);
    }
  }
  return log;
}

}  // namespace aerotask
