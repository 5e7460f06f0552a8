#pragma once

// CSV encoding of run traces and particle snapshots.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cbo/harness.hpp"

namespace cbo {

/// Header line "k,t,beta,theta,violation,tolerance,passed,consensus_0,...,V".
std::string trace_csv_header(std::size_t dim);

/// One row per iteration record; V is left empty when the variance is unknown.
/// Doubles are written in shortest round-trip form so they read back exactly.
void write_trace_csv(std::ostream& out, const RunTrace& trace, std::size_t dim);

/// Parses what write_trace_csv produced. Throws std::runtime_error on a
/// malformed header or row.
std::vector<IterationRecord> read_trace_csv(std::istream& in);

/// "x_0,...,x_{d-1}" followed by one row per particle.
void write_snapshot_csv(std::ostream& out, const Snapshot& snapshot);

}  // namespace cbo
