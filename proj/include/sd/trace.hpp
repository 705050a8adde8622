#pragma once

#include <iosfwd>
#include <limits>
#include <vector>

namespace sd {

/// One recorded state of a descent. Row `step` describes the particles at
/// iteration `step`, before they are moved.
struct TraceRow {
  static constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

  long step = 0;
  double t = 0.0;  ///< step * epsilon
  double mmd2 = 0.0;
  double rksd2 = kNaN;
  double first_variation = kNaN;  ///< -2 (mmd2 - lambda * rksd2)
  double wall_ms = 0.0;           ///< Elapsed time since the run started; 0 unless timing is on.
  // Neural descent only.
  double lambda_alm = kNaN;
  double omega_hat = kNaN;
  double ehat = kNaN;
};

struct DescentTrace {
  std::vector<TraceRow> rows;
  bool neural = false;
};

/// Header step,t,mmd2,rksd2,first_variation,wall_ms, plus lambda_alm,omega_hat,ehat
/// for neural traces.
void write_trace_csv(std::ostream& out, const DescentTrace& trace);

}  // namespace sd
