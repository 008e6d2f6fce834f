// SPDX-License-Identifier: Apache-2.0
#include "output.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>

namespace mgcli {

void check(mgb_status status) {
  if (status == MGB_OK) return;
  int code = kFailure;
  switch (status) {
    case MGB_ERR_DOMAIN: code = kDomain; break;
    case MGB_ERR_CONFIG:
    case MGB_ERR_UNSUPPORTED: code = kUsage; break;
    default: code = kFailure; break;
  }
  throw CliError{code, mgb_last_error()};
}

void Table::add(std::vector<Cell> row) {
  if (row.size() != columns.size()) throw CliError{kFailure, "internal: row width mismatch"};
  rows.push_back(std::move(row));
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

std::string cell_text(const Cell& c) {
  struct V {
    std::string operator()(double d) const { return format_double(d); }
    std::string operator()(std::int64_t i) const { return std::to_string(i); }
    std::string operator()(std::uint64_t u) const { return std::to_string(u); }
    std::string operator()(const std::string& s) const { return csv_field(s); }
    std::string operator()(bool b) const { return b ? "1" : "0"; }
  };
  return std::visit(V{}, c);
}

nlohmann::ordered_json cell_json(const Cell& c) {
  struct V {
    nlohmann::ordered_json operator()(double d) const {
      return std::isfinite(d) ? nlohmann::ordered_json(d) : nlohmann::ordered_json(nullptr);
    }
    nlohmann::ordered_json operator()(std::int64_t i) const { return i; }
    nlohmann::ordered_json operator()(std::uint64_t u) const { return u; }
    nlohmann::ordered_json operator()(const std::string& s) const { return s; }
    nlohmann::ordered_json operator()(bool b) const { return b; }
  };
  return std::visit(V{}, c);
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw CliError{kFailure, "cannot open '" + path + "' for writing"};
  f << text;
  if (!f) throw CliError{kFailure, "failed writing '" + path + "'"};
}

}  // namespace

std::string to_csv(const Table& t) {
  std::string s;
  for (std::size_t i = 0; i < t.columns.size(); ++i) s += (i ? "," : "") + t.columns[i];
  s += '\n';
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) s += (i ? "," : "") + cell_text(r[i]);
    s += '\n';
  }
  return s;
}

nlohmann::ordered_json to_json_rows(const Table& t) {
  auto rows = nlohmann::ordered_json::array();
  for (const auto& r : t.rows) {
    nlohmann::ordered_json o = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < r.size(); ++i) o[t.columns[i]] = cell_json(r[i]);
    rows.push_back(std::move(o));
  }
  return rows;
}

nlohmann::ordered_json Manifest::to_json() const {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["parameters"] = parameters;
  j["seed"] = seed;
  j["toolkit_version"] = mgb_version();
  j["started_at"] = started_at;
  j["finished_at"] = finished_at;
  j["outputs"] = outputs;
  return j;
}

std::string timestamp_now() {
  std::time_t t = std::time(nullptr);
  if (const char* sde = std::getenv("SOURCE_DATE_EPOCH"); sde && *sde) {
    char* end = nullptr;
    const long long v = std::strtoll(sde, &end, 10);
    if (end && *end == '\0') t = static_cast<std::time_t>(v);
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void emit(const OutputOptions& o, Manifest& m, const Table& t, const nlohmann::ordered_json& summary) {
  const bool json = o.format == "json";
  const bool to_stdout = o.out.empty() || o.out == "-";
  std::string sidecar = o.manifest;
  if (!json && sidecar.empty() && !to_stdout) sidecar = o.out + ".manifest.json";
  m.outputs.clear();
  m.outputs.push_back(to_stdout ? "-" : o.out);
  if (!json && !sidecar.empty()) m.outputs.push_back(sidecar);
  m.finished_at = timestamp_now();

  std::string body;
  if (json) {
    nlohmann::ordered_json doc;
    doc["manifest"] = m.to_json();
    if (!summary.empty()) doc["summary"] = summary;
    doc["columns"] = t.columns;
    doc["rows"] = to_json_rows(t);
    body = doc.dump(2) + "\n";
  } else {
    body = to_csv(t);
  }
  if (to_stdout) {
    std::cout << body << std::flush;
  } else {
    write_file(o.out, body);
  }
  if (!json && sidecar.empty() && !summary.empty()) std::cerr << "summary: " << summary.dump() << "\n";
  if (!json && !sidecar.empty()) {
    nlohmann::ordered_json doc = m.to_json();
    if (!summary.empty()) doc["summary"] = summary;
    write_file(sidecar, doc.dump(2) + "\n");
  }
}

}  // namespace mgcli
