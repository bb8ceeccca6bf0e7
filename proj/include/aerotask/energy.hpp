#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aerotask/sink.hpp"

namespace aerotask {

struct PowerModel {
  double c = 100.0;  // watts per motor at full level
};

/// Four aligned per-motor level streams sampled every `dt` seconds.
struct MotorOutputs {
  double dt = 0.02;
  std::array<std::vector<double>, 4> levels;
};

MotorOutputs motor_outputs(const std::vector<TelemetryPoint>& samples, double dt);

double motor_power(double level, const PowerModel& model);
std::vector<double> total_power(const MotorOutputs& outputs, const PowerModel& model);
/// Left Riemann sum.
double integrate_energy(std::span<const double> power, double dt);

struct EnergyReport {
  std::vector<double> power;  // P_total per sample
  double energy = 0.0;        // joules
  double flight_time = 0.0;   // seconds
};

EnergyReport energy_report(const std::vector<TelemetryPoint>& samples, double dt,
                           const PowerModel& model = {});

struct SprWindow {
  std::size_t index = 0;
  double t_start = 0.0;
  double t_end = 0.0;
  double mean_speed = 0.0;  // m/s
  double energy = 0.0;      // J
  double spr = 0.0;         // (m/s)/J
};

/// Consecutive non-overlapping windows; a trailing partial window is dropped.
/// `velocities` hold the mean velocity over each sample interval.
std::vector<SprWindow> spr_windows(std::span<const Vec3> velocities, std::span<const double> power,
                                   double window, double dt);
std::vector<SprWindow> spr_windows(const std::vector<TelemetryPoint>& samples,
                                   std::span<const double> power, double window, double dt);

enum class Efficiency { high, low };
std::string_view to_string(Efficiency e);

struct EfficiencySegment {
  std::size_t first = 0;  // window indices, inclusive
  std::size_t last = 0;
  Efficiency efficiency = Efficiency::high;
  std::vector<double> shades;  // per window, in (0, 1]
  double shade = 0.0;          // mean of shades
};

double median(std::vector<double> values);
std::vector<EfficiencySegment> classify_efficiency(const std::vector<SprWindow>& windows);

/// A flight log: time, four motor levels and position per sample. Accepts the
/// simulator export and the "t,n1,n2,n3,n4,x,y,z" external layout.
struct FlightLog {
  double dt = 0.0;
  std::vector<TelemetryPoint> samples;
};

FlightLog parse_flight_log(std::string_view csv);

}  // namespace aerotask
