// cli.hpp
// Command-line front end: validated run specifications, subcommand dispatch,
// and the report envelope. All randomness flows from the resolved seed; a
// run with the same RunSpec reproduces the payload byte for byte (the
// envelope timestamp is outside the reproducibility scope).
#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "pmeas/entanglement.hpp"
#include "pmeas/hiddenvar.hpp"
#include "pmeas/povm.hpp"
#include "pmeas/protocols.hpp"
#include "pmeas/qcore.hpp"
#include "pmeas/serialize.hpp"
#include "pmeas/tomography.hpp"

namespace pmeas::cli {

inline constexpr const char* kVersion = "0.1.0";

struct SweepSpec {
  std::string param = "p";
  double start = 0.0;
  double end = 0.9;
  int steps = 10;
};

struct RunSpec {
  std::string subcommand;
  double p = 0.5;
  double q = 0.0;
  double p2 = 0.5;  // teleportation's second strength
  double theta = std::numbers::pi / 2;
  double phi = 0.0;
  std::string ordering = "alice-first";
  std::string bob_measures = "none";  // none | 0 | 1
  std::uint64_t trajectories = 0;
  std::optional<std::uint64_t> seed_flag;  // set when --seed was given
  std::uint64_t seed = 0;                  // resolved by validate
  std::string seed_source = "default";     // flag | env | default
  std::string format = "json";
  std::string out_path;  // empty = standard output
  SweepSpec sweep;
};

// Fills defaults, resolves the seed (flag wins over PMEAS_SEED, which wins
// over the default 0), and returns every violation at once.
inline std::vector<std::string> validate(RunSpec& spec) {
  std::vector<std::string> errors;
  const auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };

  static const char* kSubcommands[] = {"epr", "teleport", "swap",       "tomography",
                                       "hv",  "chsh-sweep", "identities"};
  bool known = false;
  for (const char* sc : kSubcommands)
    if (spec.subcommand == sc) known = true;
  if (!known) errors.push_back("unknown subcommand '" + spec.subcommand + "'");

  if (spec.seed_flag) {
    spec.seed = *spec.seed_flag;
    spec.seed_source = "flag";
  } else if (const char* env = std::getenv("PMEAS_SEED")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end && *end == '\0') {
      spec.seed = v;
      spec.seed_source = "env";
    } else {
      errors.push_back("PMEAS_SEED is not an unsigned integer");
    }
  } else {
    spec.seed = 0;
    spec.seed_source = "default";
  }

  if (spec.subcommand == "epr" || spec.subcommand == "teleport") {
    if (!(spec.p >= 0.0 && spec.p < 1.0)) errors.push_back("--p out of [0,1)");
  } else if (spec.subcommand == "swap") {
    if (!in01(spec.p)) errors.push_back("--p out of [0,1]");
  } else if (spec.subcommand == "tomography" || spec.subcommand == "hv") {
    if (!(spec.p > 0.0 && spec.p <= 1.0)) errors.push_back("--p out of (0,1]");
  } else if (spec.subcommand == "identities") {
    if (!in01(spec.p)) errors.push_back("--p out of [0,1]");
  }
  if (!in01(spec.q)) errors.push_back("--q out of [0,1]");
  if (spec.subcommand == "teleport" && !(spec.p2 >= 0.0 && spec.p2 < 1.0))
    errors.push_back("--p2 out of [0,1)");
  if (spec.theta < 0.0 || spec.theta > std::numbers::pi)
    errors.push_back("--theta out of [0,pi]");
  if (spec.phi <= -std::numbers::pi || spec.phi > std::numbers::pi)
    errors.push_back("--phi out of (-pi,pi]");
  if (spec.ordering != "alice-first" && spec.ordering != "bob-first")
    errors.push_back("--ordering must be alice-first or bob-first");
  if (spec.bob_measures != "none" && spec.bob_measures != "0" && spec.bob_measures != "1")
    errors.push_back("--bob-measures must be none, 0 or 1");
  if (spec.format != "json" && spec.format != "csv")
    errors.push_back("--format must be json or csv");
  if (spec.subcommand == "chsh-sweep") {
    if (spec.sweep.param != "p") errors.push_back("--param must be p");
    if (spec.sweep.steps < 1) errors.push_back("--steps must be >= 1");
    if (!in01(spec.sweep.start) || !in01(spec.sweep.end) ||
        spec.sweep.start > spec.sweep.end)
      errors.push_back("--start/--end must satisfy 0 <= start <= end <= 1");
  }
  return errors;
}

struct RunResult {
  int exit_code = 0;
  std::string output;       // envelope, JSON or CSV
  std::string human_lines;  // per-identity pass/fail lines, empty otherwise
};

namespace detail {

inline ojson spec_to_json(const RunSpec& spec) {
  ojson j;
  j["subcommand"] = spec.subcommand;
  j["p"] = spec.p;
  j["q"] = spec.q;
  j["p2"] = spec.p2;
  j["theta"] = spec.theta;
  j["phi"] = spec.phi;
  j["ordering"] = spec.ordering;
  j["bob_measures"] = spec.bob_measures;
  j["trajectories"] = spec.trajectories;
  j["seed"] = spec.seed;
  j["seed_source"] = spec.seed_source;
  j["format"] = spec.format;
  if (spec.subcommand == "chsh-sweep") {
    ojson sweep;
    sweep["param"] = spec.sweep.param;
    sweep["start"] = spec.sweep.start;
    sweep["end"] = spec.sweep.end;
    sweep["steps"] = spec.sweep.steps;
    j["sweep"] = std::move(sweep);
  }
  return j;
}

inline std::string timestamp_utc() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline ScenarioConfig scenario_config(const RunSpec& spec) {
  ScenarioConfig cfg;
  if (spec.subcommand == "epr") cfg.scenario = Scenario::Epr;
  if (spec.subcommand == "teleport") cfg.scenario = Scenario::Teleport;
  if (spec.subcommand == "swap") cfg.scenario = Scenario::Swap;
  cfg.p = spec.p;
  cfg.p_tilde = spec.p2;
  cfg.theta = spec.theta;
  cfg.phi = spec.phi;
  cfg.ordering = spec.ordering == "bob-first" ? Ordering::BobFirst : Ordering::AliceFirst;
  if (spec.bob_measures == "0") cfg.bob_measures = 0;
  if (spec.bob_measures == "1") cfg.bob_measures = 1;
  cfg.trajectories = spec.trajectories;
  cfg.seed = spec.seed;
  return cfg;
}

struct SweepRow {
  double p;
  double concurrence;
  double chsh;
};

inline std::vector<SweepRow> chsh_sweep_rows(const SweepSpec& sweep) {
  std::vector<SweepRow> rows;
  for (int i = 0; i < sweep.steps; ++i) {
    const double t = sweep.steps == 1
                         ? 0.0
                         : static_cast<double>(i) / static_cast<double>(sweep.steps - 1);
    const double p = sweep.start + t * (sweep.end - sweep.start);
    StateVector s = bell_state(BellLabel::PhiPlus);
    if (p > 0.0)
      s = apply_branch(s, PartialMeasurement{p, 0.0, 0, std::nullopt}, Outcome::m)
              .post_state;
    rows.push_back({p, concurrence(s), chsh_value(s)});
  }
  return rows;
}

inline ojson tomography_payload(const RunSpec& spec) {
  const BlochAngles truth{spec.theta, spec.phi};
  const SettingProbabilities probs = setting_probabilities(truth, spec.p);
  const double theta_hat = estimate_theta(probs.z, spec.p);
  ojson payload;
  payload["p"] = spec.p;
  ojson truth_j;
  truth_j["theta"] = truth.theta;
  truth_j["phi"] = truth.phi;
  payload["true_angles"] = std::move(truth_j);
  ojson probs_j;
  probs_j["z"] = probs.z;
  probs_j["h"] = probs.h;
  probs_j["y"] = probs.y;
  payload["switch_probabilities"] = std::move(probs_j);
  ojson exact;
  exact["theta_hat"] = theta_hat;
  const bool at_pole = std::sin(theta_hat) < 1e-9;
  if (!at_pole) exact["phi_hat"] = estimate_phi(probs.h, probs.y, spec.p, theta_hat);
  exact["at_pole"] = at_pole;
  payload["exact"] = std::move(exact);
  payload["survival_after_10_rounds"] =
      spec.p < 1.0 ? survival_probability(spec.p, 10) : 0.0;
  if (spec.trajectories > 0) {
    Rng rng = Rng::stream(spec.seed, 0);
    const CountTable counts = sample_counts(truth, spec.p, spec.trajectories, rng);
    const EnsembleEstimate est = ensemble_estimate(counts, spec.p);
    ojson sampled;
    sampled["n_per_setting"] = spec.trajectories;
    ojson c;
    c["z_m"] = counts.z.n_m;
    c["z_mbar"] = counts.z.n_mbar;
    c["h_m"] = counts.h.n_m;
    c["h_mbar"] = counts.h.n_mbar;
    c["y_m"] = counts.y.n_m;
    c["y_mbar"] = counts.y.n_mbar;
    sampled["counts"] = std::move(c);
    sampled["theta_hat"] = est.angles.theta;
    sampled["se_theta"] = est.se_theta;
    sampled["phi_hat"] = est.angles.phi;
    sampled["se_phi"] = est.se_phi;
    sampled["clamped_z"] = est.clamped_z;
    sampled["clamped_h"] = est.clamped_h;
    sampled["clamped_y"] = est.clamped_y;
    payload["sampled"] = std::move(sampled);
  }
  return payload;
}

inline ojson hv_payload(const RunSpec& spec) {
  ojson payload;
  payload["p"] = spec.p;
  payload["trials"] = spec.trajectories;
  {
    // Average check: sigma_z on an x-axis preparation has mean 0.
    ojson avg;
    avg["observable"] = "sigma_z";
    avg["preparation"] = "x";
    avg["expected_mean"] = 0.0;
    if (spec.trajectories > 0) {
      Rng rng = Rng::stream(spec.seed, 1);
      const HVAverage stats =
          hv_average_detail({1, 0, 0}, {0.0, {0, 0, 1}}, spec.trajectories, rng);
      avg["mean"] = stats.mean;
      avg["std_error"] = stats.std_error;
    }
    payload["average_check"] = std::move(avg);
  }
  Rng rng = Rng::stream(spec.seed, 0);
  const SelectionReport rep = selection_experiment(spec.p, spec.trajectories, rng);
  ojson sel;
  sel["qm_survival_probability"] = rep.qm_survival_probability;
  sel["qm_sigma_x_plus_probability"] = rep.qm_sigma_x_plus_probability;
  if (spec.trajectories > 0) {
    sel["hv_selected"] = rep.hv_selected;
    sel["hv_selected_fraction"] = rep.hv_selected_fraction;
    sel["hv_sigma_x_plus_frequency"] = rep.hv_sigma_x_plus_frequency;
    sel["divergence"] = rep.divergence;
  }
  payload["selection_experiment"] = std::move(sel);
  return payload;
}

struct IdentityCheck {
  std::string name;
  double max_deviation = 0.0;
  bool pass = false;
};

inline std::vector<IdentityCheck> identity_checks(double extra_p, double extra_q) {
  std::vector<std::pair<double, double>> grid;
  for (double p : {0.0, 0.25, 0.5, 0.75, 1.0})
    for (double q : {0.0, 0.25, 0.5, 0.75, 1.0}) grid.push_back({p, q});
  grid.push_back({extra_p, extra_q});

  std::vector<IdentityCheck> checks;
  {
    IdentityCheck c{"kraus_completeness", 0.0, false};
    for (const auto& [p, q] : grid) {
      const auto [m, mbar] = kraus_pair({p, q, 0, std::nullopt});
      c.max_deviation =
          std::max(c.max_deviation, max_abs_diff(m.adjoint() * m + mbar.adjoint() * mbar,
                                                 OperatorMatrix::identity(2)));
    }
    c.pass = c.max_deviation <= 1e-12;
    checks.push_back(c);
  }
  {
    IdentityCheck cm{"reversal_null_branch", 0.0, false};
    IdentityCheck cb{"reversal_switch_branch", 0.0, false};
    for (double p : {0.1, 0.3, 0.5, 0.7, 0.9})
      for (double q : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        const PartialMeasurement meas{p, q, 0, std::nullopt};
        const auto [m, mbar] = kraus_pair(meas);
        cm.max_deviation = std::max(
            cm.max_deviation,
            max_abs_diff(reversal_kraus(meas, Outcome::m) * m,
                         OperatorMatrix::identity(2).scaled(
                             {std::sqrt((1.0 - p) * (1.0 - q)), 0.0})));
        cb.max_deviation = std::max(
            cb.max_deviation,
            max_abs_diff(reversal_kraus(meas, Outcome::mbar) * mbar,
                         OperatorMatrix::identity(2).scaled({std::sqrt(p * q), 0.0})));
      }
    cm.pass = cm.max_deviation <= 1e-12;
    cb.pass = cb.max_deviation <= 1e-12;
    checks.push_back(cm);
    checks.push_back(cb);
  }
  {
    IdentityCheck c{"dilation_unitarity", 0.0, false};
    for (const auto& [p, q] : grid) {
      const OperatorMatrix u = dilation_unitary({p, q, 0, std::nullopt});
      c.max_deviation = std::max(
          c.max_deviation, max_abs_diff(u.adjoint() * u, OperatorMatrix::identity(4)));
    }
    c.pass = c.max_deviation <= 1e-12;
    checks.push_back(c);
  }
  {
    // The single-strength composition reproduces the two-strength Kraus
    // operators with the strength indices swapped.
    IdentityCheck cm{"composition_null_swapped_order", 0.0, false};
    IdentityCheck cb{"composition_switch_swapped_order", 0.0, false};
    IdentityCheck cz{"composition_cross_term_zero", 0.0, false};
    for (const auto& [p, q] : grid) {
      const CompositionReport rep = compose_identity_check(p, q);
      cm.max_deviation = std::max(cm.max_deviation, rep.m_dev_swapped);
      cb.max_deviation = std::max(cb.max_deviation, rep.mbar_dev_swapped);
      cz.max_deviation = std::max(cz.max_deviation, rep.cross_term_max);
    }
    cm.pass = cm.max_deviation <= 1e-12;
    cb.pass = cb.max_deviation <= 1e-12;
    cz.pass = cz.max_deviation <= 1e-12;
    checks.push_back(cm);
    checks.push_back(cb);
    checks.push_back(cz);
  }
  return checks;
}

}  // namespace detail

inline RunResult run(const RunSpec& spec) {
  RunResult result;
  ojson payload;
  std::string csv;
  bool all_pass = true;
  try {
    if (spec.subcommand == "epr" || spec.subcommand == "teleport" ||
        spec.subcommand == "swap") {
      const ScenarioReport report = run_monte_carlo(detail::scenario_config(spec));
      payload = serialize::scenario_report_to_json(report);
      csv = serialize::scenario_report_csv(report);
    } else if (spec.subcommand == "tomography") {
      payload = detail::tomography_payload(spec);
      csv = serialize::payload_csv(payload);
    } else if (spec.subcommand == "hv") {
      payload = detail::hv_payload(spec);
      csv = serialize::payload_csv(payload);
    } else if (spec.subcommand == "chsh-sweep") {
      const std::vector<detail::SweepRow> rows = detail::chsh_sweep_rows(spec.sweep);
      ojson rows_j = ojson::array();
      csv = "p,concurrence,chsh\n";
      for (const detail::SweepRow& row : rows) {
        ojson r;
        r["p"] = row.p;
        r["concurrence"] = row.concurrence;
        r["chsh"] = row.chsh;
        rows_j.push_back(std::move(r));
        csv += serialize::format_double(row.p) + "," +
               serialize::format_double(row.concurrence) + "," +
               serialize::format_double(row.chsh) + "\n";
      }
      payload["param"] = spec.sweep.param;
      payload["rows"] = std::move(rows_j);
    } else if (spec.subcommand == "identities") {
      const std::vector<detail::IdentityCheck> checks =
          detail::identity_checks(spec.p, spec.q);
      ojson checks_j = ojson::array();
      csv = "identity,max_deviation,pass\n";
      for (const detail::IdentityCheck& check : checks) {
        ojson c;
        c["name"] = check.name;
        c["max_deviation"] = check.max_deviation;
        c["pass"] = check.pass;
        checks_j.push_back(std::move(c));
        csv += check.name + "," + serialize::format_double(check.max_deviation) + "," +
               (check.pass ? "true" : "false") + "\n";
        result.human_lines += "identity " + check.name + ": " +
                              (check.pass ? "PASS" : "FAIL") + " (max deviation " +
                              serialize::format_double(check.max_deviation) + ")\n";
        all_pass = all_pass && check.pass;
      }
      payload["checks"] = std::move(checks_j);
      payload["all_pass"] = all_pass;
    } else {
      result.exit_code = 2;
      result.output = "unknown subcommand\n";
      return result;
    }
  } catch (const std::exception& e) {
    result.exit_code = 1;
    result.output = std::string("internal invariant violated: ") + e.what() + "\n";
    return result;
  }

  if (spec.format == "json") {
    ojson envelope;
    envelope["version"] = kVersion;
    envelope["spec"] = detail::spec_to_json(spec);
    envelope["timestamp"] = detail::timestamp_utc();
    envelope["payload"] = std::move(payload);
    result.output = serialize::dump_json(envelope) + "\n";
  } else {
    std::string header = "# pmeas " + std::string(kVersion) + "\n";
    header += "# spec " + serialize::dump_json(detail::spec_to_json(spec)) + "\n";
    result.output = header + csv;
  }
  result.exit_code = all_pass ? 0 : 1;
  return result;
}

}  // namespace pmeas::cli
