#pragma once

#include <vector>

#include "fracpme/field.hpp"
#include "fracpme/params.hpp"

namespace fracpme {

// Per-snapshot energy bookkeeping. With mu = 0 the functional falls back to
// its mu -> 0 limit u^(3-m)/((2-m)(3-m)) where that is finite (m < 3,
// m != 2); otherwise fmu_integral and identity_residual are 0.
struct EnergyReport {
  double t = 0.0;
  double mass = 0.0;
  double linf = 0.0;
  double fmu_integral = 0.0;
  double visc_dissip_accum = 0.0;
  double gradH_dissip_accum = 0.0;
  double identity_residual = 0.0;
  double u3m_integral = 0.0;
};

struct StepRecord {
  double t = 0.0;  // time after the step
  double dt = 0.0;
  double mass = 0.0;
  double linf = 0.0;
};

struct Snapshot {
  double t = 0.0;
  Field u;
};

struct Trajectory {
  ModelParams params;
  std::vector<Snapshot> snapshots;
  std::vector<EnergyReport> diagnostics;
  std::vector<StepRecord> steps;
  long step_count = 0;
  long rejected_steps = 0;

  const Field& initial() const { return snapshots.front().u; }
  const Field& final() const { return snapshots.back().u; }
  double final_time() const { return snapshots.back().t; }
};

}  // namespace fracpme
