#include "cbo/trace_io.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace cbo {

namespace {

// Shortest text that reads back to the same double.
struct Num {
  double value;
};

std::ostream& operator<<(std::ostream& out, Num n) {
  char buf[32];
  const auto result = std::to_chars(buf, buf + sizeof buf, n.value);
  return out.write(buf, result.ptr - buf);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream stream(line);
  while (std::getline(stream, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_double(const std::string& text, std::size_t line_no) {
  double value = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || end != text.data() + text.size()) {
    throw std::runtime_error("trace csv line " + std::to_string(line_no) + ": bad number '" + text + "'");
  }
  return value;
}

}  // namespace

std::string trace_csv_header(std::size_t dim) {
  std::string header = "k,t,beta,theta,violation,tolerance,passed";
  for (std::size_t j = 0; j < dim; ++j) header += ",consensus_" + std::to_string(j);
  header += ",V";
  return header;
}

void write_trace_csv(std::ostream& out, const RunTrace& trace, std::size_t dim) {
  out << trace_csv_header(dim) << '\n';
  for (const IterationRecord& r : trace.records) {
    out << r.k << ',' << Num{r.t} << ',' << Num{r.beta} << ',' << Num{r.theta} << ',' << Num{r.violation} << ','
        << Num{r.tolerance} << ',' << (r.passed ? 1 : 0);
    for (Eigen::Index j = 0; j < r.consensus.size(); ++j) out << ',' << Num{r.consensus[j]};
    out << ',';
    if (r.variance) out << Num{*r.variance};
    out << '\n';
  }
}

std::vector<IterationRecord> read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("trace csv: missing header");
  const std::vector<std::string> header = split(line);
  if (header.size() < 9 || header.back() != "V") throw std::runtime_error("trace csv: unexpected header");
  const std::size_t dim = header.size() - 8;
  if (line != trace_csv_header(dim)) throw std::runtime_error("trace csv: unexpected header");

  std::vector<IterationRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> f = split(line);
    if (f.size() != header.size()) {
      throw std::runtime_error("trace csv line " + std::to_string(line_no) + ": expected " +
                               std::to_string(header.size()) + " fields");
    }
    IterationRecord r;
    r.k = static_cast<std::size_t>(parse_double(f[0], line_no));
    r.t = parse_double(f[1], line_no);
    r.beta = parse_double(f[2], line_no);
    r.theta = parse_double(f[3], line_no);
    r.violation = parse_double(f[4], line_no);
    r.tolerance = parse_double(f[5], line_no);
    if (f[6] != "0" && f[6] != "1") {
      throw std::runtime_error("trace csv line " + std::to_string(line_no) + ": 'passed' must be 0 or 1");
    }
    r.passed = f[6] == "1";
    r.consensus.resize(static_cast<Eigen::Index>(dim));
    for (std::size_t j = 0; j < dim; ++j) r.consensus[static_cast<Eigen::Index>(j)] = parse_double(f[7 + j], line_no);
    if (!f.back().empty()) r.variance = parse_double(f.back(), line_no);
    records.push_back(std::move(r));
  }
  return records;
}

void write_snapshot_csv(std::ostream& out, const Snapshot& snapshot) {
  const std::size_t d = snapshot.ensemble.dim();
  for (std::size_t j = 0; j < d; ++j) out << (j ? "," : "") << "x_" << j;
  out << '\n';
  for (std::size_t i = 0; i < snapshot.ensemble.size(); ++i) {
    const auto x = snapshot.ensemble.particle(i);
    for (std::size_t j = 0; j < d; ++j) out << (j ? "," : "") << Num{x[j]};
    out << '\n';
  }
}

}  // namespace cbo
