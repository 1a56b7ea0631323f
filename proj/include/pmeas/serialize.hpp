// serialize.hpp
// JSON and CSV emission for reports. Doubles are printed with 17 significant
// digits so every value round-trips bit-exactly; objects keep insertion
// order, so identical inputs yield byte-identical output.
#pragma once

#include <cstdint>
#include <cstdio>
#include <string>

#include "json.hpp"
#include "pmeas/protocols.hpp"
#include "pmeas/qcore.hpp"

namespace pmeas {

using ojson = nlohmann::ordered_json;

namespace serialize {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

inline void append_escaped(std::string& out, const std::string& s) {
  out += '"';
  for (const char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  out += '"';
}

inline void dump_value(const ojson& j, std::string& out) {
  switch (j.type()) {
    case ojson::value_t::null: out += "null"; break;
    case ojson::value_t::boolean: out += j.get<bool>() ? "true" : "false"; break;
    case ojson::value_t::number_integer:
      out += std::to_string(j.get<std::int64_t>());
      break;
    case ojson::value_t::number_unsigned:
      out += std::to_string(j.get<std::uint64_t>());
      break;
    case ojson::value_t::number_float: out += format_double(j.get<double>()); break;
    case ojson::value_t::string: append_escaped(out, j.get<std::string>()); break;
    case ojson::value_t::array: {
      out += '[';
      bool first = true;
      for (const ojson& item : j) {
        if (!first) out += ',';
        first = false;
        dump_value(item, out);
      }
      out += ']';
      break;
    }
    case ojson::value_t::object: {
      out += '{';
      bool first = true;
      for (const auto& item : j.items()) {
        if (!first) out += ',';
        first = false;
        append_escaped(out, item.key());
        out += ':';
        dump_value(item.value(), out);
      }
      out += '}';
      break;
    }
    default: out += "null"; break;
  }
}

inline std::string dump_json(const ojson& j) {
  std::string out;
  dump_value(j, out);
  return out;
}

inline ojson state_to_json(const StateVector& s) {
  ojson amps = ojson::array();
  for (const Amplitude& a : s.amplitudes()) amps.push_back({a.real(), a.imag()});
  ojson out;
  out["n_qubits"] = s.n_qubits();
  out["amplitudes"] = std::move(amps);
  return out;
}

inline ojson scenario_report_to_json(const ScenarioReport& report) {
  ojson out;
  out["scenario"] = report.scenario;
  ojson steps = ojson::array();
  for (const StepRecord& step : report.steps) {
    ojson s;
    s["label"] = step.label;
    ojson probs = ojson::object();
    for (const auto& [name, value] : step.probabilities) probs[name] = value;
    s["probabilities"] = std::move(probs);
    s["state"] = state_to_json(step.state);
    steps.push_back(std::move(s));
  }
  out["steps"] = std::move(steps);
  ojson metrics = ojson::object();
  for (const auto& [name, value] : report.metrics) metrics[name] = value;
  out["metrics"] = std::move(metrics);
  ojson tally;
  tally["trajectories"] = report.tally.trajectories;
  tally["seed"] = report.tally.seed;
  ojson patterns = ojson::object();
  for (const auto& [pattern, stat] : report.tally.patterns) {
    ojson entry;
    entry["probability"] = stat.probability;
    entry["count"] = stat.count;
    patterns[pattern] = std::move(entry);
  }
  tally["patterns"] = std::move(patterns);
  tally["survivors"] = report.tally.survivors;
  tally["survival_rate"] = report.tally.survival_rate;
  out["tally"] = std::move(tally);
  return out;
}

// Flattens the numeric and boolean leaves of a payload into name,value rows
// (nested keys joined with '.'); strings and states stay JSON-only.
inline void flatten_csv(const ojson& j, const std::string& prefix, std::string& out) {
  switch (j.type()) {
    case ojson::value_t::object:
      for (const auto& item : j.items())
        flatten_csv(item.value(), prefix.empty() ? item.key() : prefix + "." + item.key(),
                    out);
      break;
    case ojson::value_t::array: {
      std::size_t i = 0;
      for (const ojson& item : j) flatten_csv(item, prefix + "." + std::to_string(i++), out);
      break;
    }
    case ojson::value_t::number_float:
      out += prefix + "," + format_double(j.get<double>()) + "\n";
      break;
    case ojson::value_t::number_integer:
      out += prefix + "," + std::to_string(j.get<std::int64_t>()) + "\n";
      break;
    case ojson::value_t::number_unsigned:
      out += prefix + "," + std::to_string(j.get<std::uint64_t>()) + "\n";
      break;
    case ojson::value_t::boolean:
      out += prefix + std::string(",") + (j.get<bool>() ? "true" : "false") + "\n";
      break;
    default: break;
  }
}

inline std::string payload_csv(const ojson& payload) {
  std::string out = "name,value\n";
  flatten_csv(payload, "", out);
  return out;
}

// Flat numeric table: states are carried by the JSON rendering only.
inline std::string scenario_report_csv(const ScenarioReport& report) {
  std::string out = "kind,name,value\n";
  for (const auto& [name, value] : report.metrics)
    out += "metric," + name + "," + format_double(value) + "\n";
  for (const auto& [pattern, stat] : report.tally.patterns) {
    out += "pattern_probability," + pattern + "," + format_double(stat.probability) + "\n";
    out += "pattern_count," + pattern + "," + std::to_string(stat.count) + "\n";
  }
  out += "tally,trajectories," + std::to_string(report.tally.trajectories) + "\n";
  out += "tally,survivors," + std::to_string(report.tally.survivors) + "\n";
  out += "tally,survival_rate," + format_double(report.tally.survival_rate) + "\n";
  return out;
}

}  // namespace serialize

}  // namespace pmeas
