#pragma once

#include <cstddef>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "expnet/discretize.hpp"
#include "expnet/estimator.hpp"
#include "expnet/metrics.hpp"
#include "expnet/network.hpp"
#include "expnet/types.hpp"

namespace expnet {

/// Malformed input file; `line` is 1-based, 0 when unknown.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t line)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// File could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest decimal that round-trips to the same double; "nan"/"inf" never
/// appear in outputs (callers map non-finite values to empty fields).
std::string format_double(double v);

// Edge-list text format: a header line "n <n>" followed by one "i j" line
// per directed edge, 1-based. Blank lines and lines starting with '#' are
// ignored when reading.
void write_edge_list(std::ostream& os, const Network& net);
Network read_edge_list(std::istream& is);

Network load_network(const std::string& path);
void save_network(const std::string& path, const Network& net);

nlohmann::json to_json(const FitResult& r);
FitResult fit_result_from_json(const nlohmann::json& j);

/// Ground-truth sidecar written next to a sampled network.
struct Truth {
  NodeParams params;
  GlobalParams globals;
};

nlohmann::json to_json(const Truth& t);
Truth truth_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ErrorReport& r);

nlohmann::json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace expnet
