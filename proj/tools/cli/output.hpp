// SPDX-License-Identifier: Apache-2.0
//
// Tables, run manifests and exit-code plumbing for the command-line tool.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "mgbound/mgbound.h"

namespace mgcli {

enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2, kDomain = 3, kViolation = 4 };

struct CliError {
  int code;
  std::string message;
};

/// Throws CliError carrying the library's last error when status != MGB_OK.
void check(mgb_status status);

using Cell = std::variant<double, std::int64_t, std::uint64_t, std::string, bool>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row);
};

/// %.17g, with nan/inf spelled as strtod accepts them.
std::string format_double(double v);

std::string to_csv(const Table& t);
nlohmann::ordered_json to_json_rows(const Table& t);

struct Manifest {
  std::string command;
  nlohmann::ordered_json parameters = nlohmann::ordered_json::object();
  std::uint64_t seed = 0;
  std::string started_at;
  std::string finished_at;
  std::vector<std::string> outputs;

  nlohmann::ordered_json to_json() const;
};

/// ISO-8601 UTC; SOURCE_DATE_EPOCH wins when set.
std::string timestamp_now();

struct OutputOptions {
  std::string format = "csv";
  std::string out;       ///< empty = stdout
  std::string manifest;  ///< sidecar path for CSV; default <out>.manifest.json
};

/// Writes the table (and summary, JSON only) plus the manifest as configured.
void emit(const OutputOptions& o, Manifest& m, const Table& t,
          const nlohmann::ordered_json& summary = nlohmann::ordered_json::object());

}  // namespace mgcli
