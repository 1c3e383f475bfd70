// teleport-sim: verification runs, outcome enumeration, parameter sweeps and
// the spatially separated scenario for the beam-splitting teleportation
// models. JSON reports carry {config, checks, outcomes}; sweeps emit CSV.
//
// Exit codes: 0 all checks pass, 1 a numerical check failed (the failing
// check is named on stderr), 2 configuration error.

#include <cstdio>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "telsim/random.hpp"
#include "telsim/serialize.hpp"
#include "telsim/teleport.hpp"

using nlohmann::json;
using namespace telsim;

namespace {

constexpr std::uint64_t kSuiteSeed = 0x7e1e5eed;

struct DGrid {
  double min = 0.0;
  double max = 0.0;
  int steps = 0;
  std::string scale = "linear";
};

struct ExperimentConfig {
  std::string command;
  int n = 2;
  std::optional<double> d;
  std::optional<DGrid> grid;
  std::string splitting = "half-half";
  std::string b = "dft";
  std::string state = "basis:0";
  std::string variant = "perfect";
  std::string out;
  std::string format;
  double tol = kProtocolTol;
  std::optional<std::uint64_t> sample;
};

json to_json(const ExperimentConfig& cfg) {
  json j{{"command", cfg.command}, {"n", cfg.n},         {"splitting", cfg.splitting},
         {"b", cfg.b},             {"state", cfg.state}, {"variant", cfg.variant},
         {"format", cfg.format},   {"tol", cfg.tol}};
  if (cfg.d) j["d"] = *cfg.d;
  if (cfg.grid)
    j["d_grid"] = {{"min", cfg.grid->min},
                   {"max", cfg.grid->max},
                   {"steps", cfg.grid->steps},
                   {"scale", cfg.grid->scale}};
  if (!cfg.out.empty()) j["out"] = cfg.out;
  if (cfg.sample) j["sample"] = *cfg.sample;
  return j;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("invalid JSON in " + path + ": " + e.what());
  }
  return j;
}

void apply_config_file(ExperimentConfig& cfg, const json& j) {
  try {
    if (j.contains("n")) cfg.n = j.at("n").get<int>();
    if (j.contains("d")) cfg.d = j.at("d").get<double>();
    if (j.contains("d_grid")) {
      DGrid g;
      const auto& gj = j.at("d_grid");
      g.min = gj.at("min").get<double>();
      g.max = gj.at("max").get<double>();
      g.steps = gj.at("steps").get<int>();
      if (gj.contains("scale")) g.scale = gj.at("scale").get<std::string>();
      cfg.grid = g;
    }
    if (j.contains("splitting")) cfg.splitting = j.at("splitting").get<std::string>();
    if (j.contains("b")) cfg.b = j.at("b").get<std::string>();
    if (j.contains("state")) cfg.state = j.at("state").get<std::string>();
    if (j.contains("variant")) cfg.variant = j.at("variant").get<std::string>();
    if (j.contains("out")) cfg.out = j.at("out").get<std::string>();
    if (j.contains("format")) cfg.format = j.at("format").get<std::string>();
    if (j.contains("tol")) cfg.tol = j.at("tol").get<double>();
    if (j.contains("sample")) cfg.sample = j.at("sample").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config field: ") + e.what());
  }
}

Complex parse_complex_pair(const json& j) {
  if (!j.is_array() || j.size() != 2)
    throw ConfigError("complex entries must be [re, im] pairs");
  return {j[0].get<double>(), j[1].get<double>()};
}

BMatrix load_b_matrix(const ExperimentConfig& cfg) {
  if (cfg.b == "dft") return dft_b_matrix(cfg.n);
  json j = load_json_file(cfg.b);
  if (j.is_object() && j.contains("rows")) j = j.at("rows");
  if (!j.is_array() || static_cast<int>(j.size()) != cfg.n)
    throw ConfigError("b matrix file must hold n rows");
  BMatrix b;
  b.rows.resize(cfg.n, cfg.n);
  for (int i = 0; i < cfg.n; ++i) {
    if (static_cast<int>(j[i].size()) != cfg.n)
      throw ConfigError("b matrix row has wrong length");
    for (int k = 0; k < cfg.n; ++k) b.rows(i, k) = parse_complex_pair(j[i][k]);
  }
  return b;
}

QuditState load_state(const ExperimentConfig& cfg) {
  const std::string& spec = cfg.state;
  if (spec == "uniform") return QuditState::uniform(cfg.n);
  if (spec.rfind("basis:", 0) == 0) {
    int k = 0;
    try {
      k = std::stoi(spec.substr(6));
    } catch (...) {
      throw ConfigError("invalid basis state spec: " + spec);
    }
    if (k < 0 || k >= cfg.n) throw ConfigError("basis state index out of range");
    return QuditState::basis(cfg.n, k);
  }
  if (spec.rfind("random:", 0) == 0) {
    std::uint64_t seed = 0;
    try {
      seed = std::stoull(spec.substr(7));
    } catch (...) {
      throw ConfigError("invalid random state spec: " + spec);
    }
    return rng::random_qudit_state(cfg.n, seed);
  }
  const json j = load_json_file(spec);
  QuditState q;
  try {
    const auto& weights = j.at("weights");
    const auto& amps = j.at("amplitudes");
    if (static_cast<int>(weights.size()) != cfg.n ||
        static_cast<int>(amps.size()) != cfg.n)
      throw ConfigError("state file dimensions do not match n");
    q.weights = Eigen::VectorXd::Zero(cfg.n);
    q.amplitudes = ComplexMatrix::Zero(cfg.n, cfg.n);
    for (int s = 0; s < cfg.n; ++s) {
      q.weights(s) = weights[s].get<double>();
      for (int k = 0; k < cfg.n; ++k) q.amplitudes(s, k) = parse_complex_pair(amps[s][k]);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid state file: ") + e.what());
  }
  return q;
}

Variant parse_variant(const std::string& name) {
  if (name == "perfect") return Variant::Perfect;
  if (name == "coherent") return Variant::Coherent;
  if (name == "coherent+filter") return Variant::CoherentFilter;
  throw ConfigError("unknown variant: " + name);
}

Splitting make_splitting(const ExperimentConfig& cfg) {
  if (cfg.splitting == "half-half") return half_half_splitting(cfg.n);
  if (cfg.splitting == "regions") return projection_splitting(cfg.n);
  throw ConfigError("unknown splitting: " + cfg.splitting);
}

std::vector<double> grid_values(const DGrid& grid) {
  if (grid.steps < 1) throw ConfigError("d grid needs at least one step");
  if (!(grid.min > 0.0)) throw ConfigError("d grid minimum must be positive");
  if (grid.steps == 1) return {grid.min};
  if (!(grid.max > grid.min)) throw ConfigError("d grid maximum must exceed the minimum");
  std::vector<double> values;
  values.reserve(grid.steps);
  if (grid.scale == "log") {
    const double lmin = std::log(grid.min), lmax = std::log(grid.max);
    for (int i = 0; i < grid.steps; ++i)
      values.push_back(std::exp(lmin + (lmax - lmin) * i / (grid.steps - 1)));
  } else if (grid.scale == "linear") {
    for (int i = 0; i < grid.steps; ++i)
      values.push_back(grid.min + (grid.max - grid.min) * i / (grid.steps - 1));
  } else {
    throw ConfigError("unknown d scale: " + grid.scale);
  }
  return values;
}

// ---------------------------------------------------------------------------
// checks

void append_report(ValidationReport& into, const ValidationReport& from) {
  into.checks.insert(into.checks.end(), from.checks.begin(), from.checks.end());
}

FockVector random_span_vector(int modes, int ambient, std::mt19937_64& gen) {
  FockVector v(modes, ambient);
  const int terms = 1 + static_cast<int>(gen() % 3);
  for (int t = 0; t < terms; ++t) {
    std::vector<ModeVector> factors;
    for (int q = 0; q < modes; ++q)
      factors.push_back(rng::random_mode_vector(ambient, gen, 0.8));
    v.add_term(rng::complex_gaussian(gen), std::move(factors));
  }
  return v;
}

// Seeded operator-algebra suite: splitter isometry/adjointness, the
// composed-loop identity, (D, S) adjointness, second-quantization
// composition, kernel Gram positivity.
void run_operator_algebra_checks(const TeleportModel& model, double tol,
                                 ValidationReport& report) {
  std::mt19937_64 gen(kSuiteSeed);
  const int ambient = static_cast<int>(model.splitting().ambient_dim());
  const Splitting& s = model.splitting();

  double iso = 0.0, loop = 0.0, ds = 0.0, nu_adj = 0.0, comp = 0.0;
  for (int trial = 0; trial < 25; ++trial) {
    const FockVector v = random_span_vector(1, ambient, gen);
    iso = std::max(iso, std::abs(norm(beam_split(s, v)) - norm(v)));

    FockVector chain = malliavin_derivative(v);
    chain = second_quantized(s.k1, chain, 0);
    chain = second_quantized(s.k2, chain, 1);
    chain = second_quantized(ComplexMatrix(s.k1.adjoint()), chain, 0);
    chain = second_quantized(ComplexMatrix(s.k2.adjoint()), chain, 1);
    chain = skorohod_integral(chain);
    loop = std::max(loop, norm(chain - v));

    const FockVector w = random_span_vector(2, ambient, gen);
    ds = std::max(ds, std::abs(inner(malliavin_derivative(v), w) -
                               inner(v, skorohod_integral(w))));
    nu_adj = std::max(nu_adj, std::abs(inner(beam_split(s, v), w) -
                                       inner(v, beam_split_adjoint(s, w))));

    const ComplexMatrix t1 = rng::haar_unitary(ambient, gen);
    const ComplexMatrix t2 = rng::haar_unitary(ambient, gen);
    comp = std::max(comp, norm(second_quantized(t1, second_quantized(t2, v)) -
                               second_quantized(ComplexMatrix(t1 * t2), v)));
  }
  report.add("opalg.nu_isometry", iso, tol);
  report.add("opalg.composed_loop_identity", loop, tol);
  report.add("opalg.ds_adjoint", ds, tol);
  report.add("opalg.nu_adjoint", nu_adj, tol);
  report.add("opalg.gamma_composition", comp, tol);

  double psd = 0.0;
  for (int batch = 0; batch < 5; ++batch) {
    const int count = 4 + static_cast<int>(gen() % 9);
    std::vector<ModeVector> vs;
    for (int i = 0; i < count; ++i) vs.push_back(rng::random_mode_vector(ambient, gen));
    ComplexMatrix gram(count, count);
    for (int i = 0; i < count; ++i)
      for (int j = 0; j < count; ++j) gram(i, j) = normalized_kernel(vs[i], vs[j]);
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(
        ComplexMatrix(0.5 * (gram + gram.adjoint())));
    psd = std::max(psd, -solver.eigenvalues().minCoeff() /
                            std::max(1e-300, solver.eigenvalues().maxCoeff()));
  }
  report.add("opalg.kernel_gram_psd", std::max(0.0, psd), tol);
}

struct OutcomeRow {
  int n = 0;
  int m = 0;
  double probability = 0.0;
  double fidelity = 0.0;
  double e1_residual = 0.0;
  bool sampled = false;
  std::optional<ComplexMatrix> recovered;
};

struct VariantRun {
  std::vector<OutcomeRow> rows;
  double total_probability = 0.0;
  double closed_form_total = 0.0;
  double e2_residual = 0.0;
};

double closed_form_total_for(const TeleportModel& model, Variant variant) {
  switch (variant) {
    case Variant::Perfect:
      return 1.0;
    case Variant::CoherentFilter:
      return closed_forms(model.dim(), model.density()).total_prob;
    case Variant::Coherent: {
      // summing the pure-state outcome probabilities over all (n, m) and
      // mixture rows collapses to γ²(1 - e^{-d/2})
      const double g2 = model.gamma_normalizer() * model.gamma_normalizer();
      return g2 * -std::expm1(-0.5 * model.density());
    }
  }
  return 0.0;
}

VariantRun run_variant(const TeleportModel& model, const QuditState& q, Variant variant,
                       bool local_filter, bool want_recovered) {
  VariantRun run;
  const DensityOperator rho = lift_state(model, q);
  for (const auto& outcome : end_to_end(model, q, variant, local_filter)) {
    OutcomeRow row;
    row.n = outcome.n;
    row.m = outcome.m;
    row.probability = outcome.probability;
    row.fidelity = outcome.fidelity_to_input.value_or(0.0);
    const DensityOperator target = model.conjugate_density(rho, outcome.n, outcome.m);
    row.e1_residual = trace_distance(outcome.post_state, target);
    if (want_recovered && outcome.recovered_qudit)
      row.recovered = outcome.recovered_qudit->density();
    run.total_probability += row.probability;
    run.rows.push_back(std::move(row));
  }
  run.closed_form_total = closed_form_total_for(model, variant);
  run.e2_residual = std::abs(run.total_probability - run.closed_form_total);
  return run;
}

void run_variant_checks(const TeleportModel& model, const QuditState& q, Variant variant,
                        bool local_filter, const VariantRun& run, double tol,
                        ValidationReport& report) {
  const int n = model.dim();
  double fidelity_dev = 0.0, e1 = 0.0;
  for (const auto& row : run.rows) {
    fidelity_dev = std::max(fidelity_dev, std::abs(row.fidelity - 1.0));
    e1 = std::max(e1, row.e1_residual);
  }

  if (variant == Variant::Perfect) {
    double prob_dev = 0.0;
    for (const auto& row : run.rows)
      prob_dev = std::max(prob_dev, std::abs(row.probability - 1.0 / (n * n)));
    report.add("perfect.outcome_probability", prob_dev, tol);
    report.add("perfect.probability_sum", std::abs(run.total_probability - 1.0), tol);
    report.add("perfect.channel_conjugation", e1, tol);
    const PerfectnessReport pr = verify_perfectness(model, {q}, Variant::Perfect);
    if (pr.eq39_residual)
      report.add("perfect.entangled_unitary_images", *pr.eq39_residual, tol);
  } else if (variant == Variant::Coherent) {
    // pure-state probability law summed over the mixture rows
    const double x = std::exp(-0.5 * model.density());
    const double g2 = model.gamma_normalizer() * model.gamma_normalizer();
    double prob_dev = 0.0;
    for (const auto& row : run.rows) {
      double expected = 0.0;
      for (int s = 0; s < n; ++s) {
        const Complex bc = model.b_matrix().rows.row(row.n).dot(q.amplitudes.row(s));
        expected += q.weights(s) * g2 / (n * n) *
                    ((1.0 - x) * (1.0 - x) + x * (1.0 - x) * std::norm(bc));
      }
      prob_dev = std::max(prob_dev, std::abs(row.probability - expected));
    }
    report.add("coherent.outcome_probability_closed_form", prob_dev, tol);
    report.add("coherent.total_probability_closed_form", run.e2_residual, tol);
  } else {
    const ClosedForms forms = closed_forms(n, model.density());
    double prob_dev = 0.0;
    for (const auto& row : run.rows)
      prob_dev = std::max(prob_dev, std::abs(row.probability - forms.per_outcome_prob));
    report.add("filter.per_outcome_probability", prob_dev, tol);
    report.add("filter.total_probability", run.e2_residual, tol);
    report.add("filter.channel_conjugation", e1, tol);
  }
  report.add(local_filter ? "endtoend.key_recovery_local" : "endtoend.key_recovery",
             fidelity_dev, tol);
}

void run_locality_checks(const TeleportModel& model, const QuditState& q, double tol,
                         ValidationReport& report) {
  const auto& x1 = *model.splitting().region_x1;
  const auto& x2 = *model.splitting().region_x2;
  const int n = model.dim();

  double alice = 0.0;
  for (int nn = 0; nn < n; ++nn)
    for (int mm = 0; mm < n; ++mm)
      for (const auto& term : model.xi(nn, mm).terms())
        for (const auto& factor : term.factors)
          for (Eigen::Index i = 0; i < factor.size(); ++i)
            if (x2[i]) alice = std::max(alice, std::abs(factor(i)));
  report.add("locality.alice_support", alice, kOperatorTol);

  double bob = 0.0;
  for (int j = 0; j < n; ++j)
    for (const auto& term : model.gamma2(j).terms())
      for (const auto& factor : term.factors)
        for (Eigen::Index i = 0; i < factor.size(); ++i)
          if (x1[i]) bob = std::max(bob, std::abs(factor(i)));
  report.add("locality.bob_support", bob, kOperatorTol);

  // the local filter and the global one agree on every outcome
  const DensityOperator rho = lift_state(model, q);
  double dev = 0.0;
  for (int nn = 0; nn < n; ++nn)
    for (int mm = 0; mm < n; ++mm) {
      const OutcomeResult raw =
          alice_measure(model, rho, model.entangled_coherent(), nn, mm);
      const OutcomeResult local = bob_post_select(model, raw, true);
      const OutcomeResult global = bob_post_select(model, raw, false);
      dev = std::max(dev, std::abs(local.probability - global.probability));
      dev = std::max(dev, trace_distance(local.post_state, global.post_state));
    }
  report.add("locality.filter_equivalence", dev, tol);
}

// ---------------------------------------------------------------------------
// output

json outcome_to_json(const OutcomeRow& row, bool with_sampled) {
  json j{{"n", row.n},
         {"m", row.m},
         {"probability", row.probability},
         {"fidelity", row.fidelity},
         {"e1_residual", row.e1_residual}};
  if (with_sampled) j["sampled"] = row.sampled;
  if (row.recovered) {
    json mat = json::array();
    for (Eigen::Index i = 0; i < row.recovered->rows(); ++i) {
      json r = json::array();
      for (Eigen::Index k = 0; k < row.recovered->cols(); ++k)
        r.push_back(telsim::to_json((*row.recovered)(i, k)));
      mat.push_back(std::move(r));
    }
    j["recovered"] = std::move(mat);
  }
  return j;
}

json checks_to_json(const ValidationReport& report) {
  json arr = json::array();
  for (const auto& c : report.checks)
    arr.push_back({{"name", c.name},
                   {"residual", c.residual},
                   {"tolerance", c.tolerance},
                   {"pass", c.pass}});
  return arr;
}

void write_output(const ExperimentConfig& cfg, const std::string& payload) {
  if (cfg.out.empty()) {
    std::cout << payload;
    return;
  }
  std::ofstream out(cfg.out, std::ios::binary);
  if (!out) throw ConfigError("cannot write output file: " + cfg.out);
  out << payload;
}

int finish_report(const ExperimentConfig& cfg, const ValidationReport& report,
                  const std::vector<OutcomeRow>& rows, bool with_sampled = false) {
  json doc{{"config", to_json(cfg)},
           {"checks", checks_to_json(report)},
           {"outcomes", json::array()}};
  for (const auto& row : rows) doc["outcomes"].push_back(outcome_to_json(row, with_sampled));
  write_output(cfg, doc.dump(2) + "\n");
  if (const CheckResult* failed = report.first_failure()) {
    std::cerr << "check failed: " << failed->name << " (residual " << failed->residual
              << " > tolerance " << failed->tolerance << ")\n";
    return 1;
  }
  return 0;
}

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

// ---------------------------------------------------------------------------
// commands

int run_verify(const ExperimentConfig& cfg, bool spatial) {
  if (!cfg.d) throw ConfigError(cfg.command + " needs a single --d value");
  const BMatrix b = load_b_matrix(cfg);
  const QuditState q = load_state(cfg);
  const TeleportModel model(cfg.n, *cfg.d, make_splitting(cfg), b, cfg.tol);

  ValidationReport report = model.build_report();
  append_report(report, q.validate(cfg.tol));
  run_operator_algebra_checks(model, cfg.tol, report);

  std::vector<OutcomeRow> rows;
  if (spatial) {
    run_locality_checks(model, q, cfg.tol, report);
    // coherent-beam pipeline with the local filter, plus the perfect route
    const VariantRun filtered = run_variant(model, q, Variant::CoherentFilter, true, false);
    run_variant_checks(model, q, Variant::CoherentFilter, true, filtered, cfg.tol, report);
    const VariantRun perfect = run_variant(model, q, Variant::Perfect, false, false);
    run_variant_checks(model, q, Variant::Perfect, false, perfect, cfg.tol, report);
    rows = filtered.rows;
  } else {
    const Variant variant = parse_variant(cfg.variant);
    const VariantRun run = run_variant(model, q, variant, false, false);
    run_variant_checks(model, q, variant, false, run, cfg.tol, report);
    rows = run.rows;
  }
  return finish_report(cfg, report, rows);
}

int run_teleport(const ExperimentConfig& cfg) {
  if (!cfg.d) throw ConfigError("teleport needs a single --d value");
  const BMatrix b = load_b_matrix(cfg);
  const QuditState q = load_state(cfg);
  const Variant variant = parse_variant(cfg.variant);
  const TeleportModel model(cfg.n, *cfg.d, make_splitting(cfg), b, cfg.tol);

  VariantRun run = run_variant(model, q, variant, false, /*want_recovered=*/true);
  if (cfg.sample) {
    // draw one outcome; under filtering the residual mass is a failed
    // post-selection and then no row is marked
    std::mt19937_64 gen(*cfg.sample);
    double u = rng::uniform01(gen);
    for (auto& row : run.rows) {
      if (u < row.probability) {
        row.sampled = true;
        break;
      }
      u -= row.probability;
    }
  }
  ValidationReport report;  // teleport enumerates; nothing to assert
  return finish_report(cfg, report, run.rows, cfg.sample.has_value());
}

int run_sweep(const ExperimentConfig& cfg) {
  DGrid grid;
  if (cfg.grid) {
    grid = *cfg.grid;
  } else if (cfg.d) {
    grid = {*cfg.d, *cfg.d, 1, "linear"};
  } else {
    throw ConfigError("sweep needs --d or a --d-min/--d-max/--d-steps grid");
  }
  const std::vector<double> ds = grid_values(grid);
  const BMatrix b = load_b_matrix(cfg);
  const QuditState q = load_state(cfg);
  const Variant variant = parse_variant(cfg.variant);

  // grid points are independent; evaluate them concurrently and assemble in
  // deterministic d-order after the barrier
  std::vector<std::future<VariantRun>> futures;
  futures.reserve(ds.size());
  for (const double d : ds)
    futures.push_back(std::async(std::launch::async, [&, d]() {
      const TeleportModel model(cfg.n, d, make_splitting(cfg), b, cfg.tol);
      return run_variant(model, q, variant, false, false);
    }));

  std::ostringstream csv;
  json rows_json = json::array();
  csv << "N,d,n,m,probability,total_probability,closed_form_total,fidelity,"
         "e1_residual,e2_residual\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const VariantRun run = futures[i].get();
    double min_fidelity = 1.0, max_e1 = 0.0;
    for (const auto& row : run.rows) {
      min_fidelity = std::min(min_fidelity, row.fidelity);
      max_e1 = std::max(max_e1, row.e1_residual);
    }
    auto emit = [&](int n, int m, double probability, double fidelity, double e1) {
      csv << cfg.n << ',' << format_double(ds[i]) << ',' << n << ',' << m << ','
          << format_double(probability) << ',' << format_double(run.total_probability)
          << ',' << format_double(run.closed_form_total) << ',' << format_double(fidelity)
          << ',' << format_double(e1) << ',' << format_double(run.e2_residual) << '\n';
      rows_json.push_back({{"N", cfg.n},
                           {"d", ds[i]},
                           {"n", n},
                           {"m", m},
                           {"probability", probability},
                           {"total_probability", run.total_probability},
                           {"closed_form_total", run.closed_form_total},
                           {"fidelity", fidelity},
                           {"e1_residual", e1},
                           {"e2_residual", run.e2_residual}});
    };
    for (const auto& row : run.rows)
      emit(row.n, row.m, row.probability, row.fidelity, row.e1_residual);
    emit(-1, -1, run.total_probability, min_fidelity, max_e1);  // per-d summary
  }

  if (cfg.format == "csv") {
    write_output(cfg, csv.str());
  } else {
    const json doc{{"config", to_json(cfg)}, {"rows", rows_json}};
    write_output(cfg, doc.dump(2) + "\n");
  }
  return 0;
}

int dispatch(ExperimentConfig& cfg) {
  if (cfg.command == "spatial") {
    if (cfg.splitting != "regions")
      throw ConfigError("the spatial scenario requires --splitting regions");
    return run_verify(cfg, /*spatial=*/true);
  }
  if (cfg.command == "verify") return run_verify(cfg, false);
  if (cfg.command == "teleport") return run_teleport(cfg);
  if (cfg.command == "sweep") return run_sweep(cfg);
  throw ConfigError("unknown command: " + cfg.command);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Beam-splitting teleportation simulator"};
  app.require_subcommand(1);

  std::string config_path;
  ExperimentConfig flags;
  DGrid grid_flags;
  double d_flag = 0.0;
  std::uint64_t sample_seed = 0;

  auto add_options = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file");
    cmd->add_option("--n", flags.n, "qudit dimension");
    cmd->add_option("--d", d_flag, "beam density (mean particle number)");
    cmd->add_option("--d-min", grid_flags.min, "sweep grid minimum");
    cmd->add_option("--d-max", grid_flags.max, "sweep grid maximum");
    cmd->add_option("--d-steps", grid_flags.steps, "sweep grid steps");
    cmd->add_option("--d-scale", grid_flags.scale, "sweep grid scale (linear|log)");
    cmd->add_option("--splitting", flags.splitting, "half-half|regions");
    cmd->add_option("--b", flags.b, "dft or a JSON matrix file");
    cmd->add_option("--state", flags.state, "basis:K|uniform|random:SEED|FILE");
    cmd->add_option("--variant", flags.variant, "perfect|coherent|coherent+filter");
    cmd->add_option("--out", flags.out, "output path (stdout when omitted)");
    cmd->add_option("--format", flags.format, "csv|json");
    cmd->add_option("--tol", flags.tol, "protocol tolerance override");
    cmd->add_option("--sample", sample_seed, "sample one outcome with this seed");
  };

  CLI::App* verify = app.add_subcommand("verify", "run the invariant suite");
  CLI::App* teleport = app.add_subcommand("teleport", "enumerate teleportation outcomes");
  CLI::App* sweep = app.add_subcommand("sweep", "sweep the density grid");
  CLI::App* spatial = app.add_subcommand("spatial", "spatially separated scenario");
  for (CLI::App* cmd : {verify, teleport, sweep, spatial}) add_options(cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    ExperimentConfig cfg;
    cfg.command = sub->get_name();
    bool splitting_configured = sub->count("--splitting") > 0;
    if (sub->count("--config")) {
      const json file = load_json_file(config_path);
      splitting_configured = splitting_configured || file.contains("splitting");
      apply_config_file(cfg, file);
    }

    if (sub->count("--n")) cfg.n = flags.n;
    if (sub->count("--d")) cfg.d = d_flag;
    if (sub->count("--d-min") || sub->count("--d-max") || sub->count("--d-steps") ||
        sub->count("--d-scale")) {
      DGrid g = cfg.grid.value_or(DGrid{});
      if (sub->count("--d-min")) g.min = grid_flags.min;
      if (sub->count("--d-max")) g.max = grid_flags.max;
      if (sub->count("--d-steps")) g.steps = grid_flags.steps;
      if (sub->count("--d-scale")) g.scale = grid_flags.scale;
      cfg.grid = g;
    }
    if (sub->count("--splitting")) cfg.splitting = flags.splitting;
    if (sub->count("--b")) cfg.b = flags.b;
    if (sub->count("--state")) cfg.state = flags.state;
    if (sub->count("--variant")) cfg.variant = flags.variant;
    if (sub->count("--out")) cfg.out = flags.out;
    if (sub->count("--format")) cfg.format = flags.format;
    if (sub->count("--tol")) cfg.tol = flags.tol;
    if (sub->count("--sample")) cfg.sample = sample_seed;

    if (cfg.command == "spatial" && !splitting_configured) cfg.splitting = "regions";
    if (cfg.format.empty()) cfg.format = cfg.command == "sweep" ? "csv" : "json";
    if (cfg.format != "csv" && cfg.format != "json")
      throw ConfigError("unknown format: " + cfg.format);
    if (cfg.format == "csv" && cfg.command != "sweep")
      throw ConfigError("csv output is only available for sweep");
    if (cfg.grid && cfg.command != "sweep")
      throw ConfigError("a d grid is only available for sweep");
    if (cfg.n < 1) throw ConfigError("n must be at least 1");

    return dispatch(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ModelBuildError& e) {
    std::cerr << "check failed: " << e.check_name << " (" << e.what() << ")\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
