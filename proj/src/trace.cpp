#include "sd/trace.hpp"

#include <ostream>

#include "sd/io.hpp"

namespace sd {

void write_trace_csv(std::ostream& out, const DescentTrace& trace) {
  out << "step,t,mmd2,rksd2,first_variation,wall_ms";
  if (trace.neural) out << ",lambda_alm,omega_hat,ehat";
  out << '\n';
  for (const TraceRow& row : trace.rows) {
    out << row.step << ',' << format_double(row.t) << ',' << format_double(row.mmd2) << ','
        << format_double(row.rksd2) << ',' << format_double(row.first_variation) << ','
        << format_double(row.wall_ms);
    if (trace.neural) {
      out << ',' << format_double(row.lambda_alm) << ',' << format_double(row.omega_hat) << ','
          << format_double(row.ehat);
    }
    out << '\n';
  }
}

}  // namespace sd
