#include "suites.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

#include <phivol/cone.hpp>
#include <phivol/errors.hpp>
#include <phivol/frame.hpp>
#include <phivol/immersion.hpp>
#include <phivol/moduli.hpp>
#include <phivol/numerics.hpp>
#include <phivol/sasakian.hpp>
#include <phivol/stability.hpp>
#include <phivol/variation.hpp>

namespace phivol {

namespace {

struct Workspace {
  ImmersionFamily family;
  DiscretizedImmersion imm;
  std::vector<NodeFrame> frames;
};

Grid grid_for(const ImmersionFamily& fam, const std::vector<int>& sizes) {
  if (static_cast<int>(sizes.size()) == fam.k) return Grid(sizes);
  if (sizes.size() == 1) return Grid(std::vector<int>(fam.k, sizes[0]));
  throw ConfigError("grid has " + std::to_string(sizes.size()) +
                    " size(s) but family " + fam.name + " is " +
                    std::to_string(fam.k) + " dimensional");
}

Workspace make_workspace(const ExperimentConfig& cfg) {
  ImmersionFamily fam = make_family(cfg.family, cfg.params);
  DiscretizedImmersion imm = fam.discretize(grid_for(fam, cfg.grid));
  std::vector<NodeFrame> frames = build_frames(imm);
  return {std::move(fam), std::move(imm), std::move(frames)};
}

// smooth deterministic frame-coefficient field from low order trig modes
Mat trig_coefficients(const Grid& grid, int n, Rng& rng) {
  Mat out = Mat::Zero(n, grid.total());
  for (int j = 0; j < n; ++j)
    for (int m = 0; m <= 2; ++m) {
      Vec amp = rng.uniform_vector(2 * grid.k(), -1.0, 1.0);
      for (int node = 0; node < grid.total(); ++node) {
        Vec t = grid.node_params(node);
        double val = 0.0;
        for (int d = 0; d < grid.k(); ++d)
          val += amp(2 * d) * std::cos(m * t(d)) + amp(2 * d + 1) * std::sin(m * t(d));
        out(j, node) += val;
      }
    }
  return out;
}

Vec trig_scalar(const Grid& grid, Rng& rng) {
  Mat row = trig_coefficients(grid, 1, rng);
  return row.row(0).transpose();
}

double rel_gap(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1.0});
}

// independent density value from the Gram determinant of the adapted frame
double rho_gram_oracle(const SasakianModel& model, const NodeFrame& f) {
  const int n = model.n();
  std::vector<Vec> cols;
  cols.reserve(2 * n + 1);
  for (int i = 0; i < n; ++i) cols.push_back(f.e.col(i));
  cols.push_back(-f.xi);
  for (int i = 0; i < n; ++i) cols.push_back(f.phie.col(i));
  Mat gram(2 * n + 1, 2 * n + 1);
  for (int i = 0; i < 2 * n + 1; ++i)
    for (int j = 0; j < 2 * n + 1; ++j)
      gram(i, j) = model.g(f.p, cols[i], cols[j]);
  return std::pow(std::max(gram.determinant(), 0.0), 0.25);
}

double riemann_volume(const DiscretizedImmersion& imm,
                      const std::vector<NodeFrame>& frames) {
  Vec dens(imm.nodes());
  for (int idx = 0; idx < imm.nodes(); ++idx) dens(idx) = frames[idx].sqrt_gram;
  return imm.grid().cell_weight() * pairwise_sum(dens);
}

// node table with parameters and chart coordinates, enough to re-ingest
Table immersion_table(const DiscretizedImmersion& imm) {
  Table table;
  table.columns.push_back("node");
  for (int d = 0; d < imm.grid().k(); ++d)
    table.columns.push_back("t_" + std::to_string(d));
  for (int c = 0; c < imm.values().rows(); ++c)
    table.columns.push_back("x_" + std::to_string(c));
  for (int idx = 0; idx < imm.nodes(); ++idx) {
    std::vector<double> row;
    row.push_back(static_cast<double>(idx));
    Vec t = imm.grid().node_params(idx);
    for (int d = 0; d < t.size(); ++d) row.push_back(t(d));
    for (int c = 0; c < imm.values().rows(); ++c)
      row.push_back(imm.values()(c, idx));
    table.rows.push_back(std::move(row));
  }
  return table;
}

FormPattern pattern_by_name(const std::string& name) {
  auto componentwise = [](double (*wave)(double)) {
    return [wave](const Vec& t) {
      Vec out(t.size());
      for (int a = 0; a < t.size(); ++a) out(a) = wave(t(a));
      return out;
    };
  };
  if (name == "sin") return componentwise(+[](double t) { return std::sin(t); });
  if (name == "cos") return componentwise(+[](double t) { return std::cos(t); });
  if (name == "sin2")
    return componentwise(+[](double t) { return std::sin(2.0 * t); });
  if (name == "mix")
    return componentwise(
        +[](double t) { return std::sin(2.0 * t) + 0.4 * std::cos(3.0 * t); });
  throw ConfigError("unknown walk pattern '" + name + "'");
}

double immersion_distance(const DiscretizedImmersion& a,
                          const DiscretizedImmersion& b) {
  return (a.values() - b.values()).cwiseAbs().maxCoeff();
}

SuiteReport begin_report(const ExperimentConfig& cfg) {
  SuiteReport report;
  report.operation = cfg.operation;
  report.environment = environment_info();
  return report;
}

void add_check(SuiteReport& report, const ExperimentConfig& cfg,
               const std::string& name, double measured, double default_tol) {
  report.checks.push_back(
      make_check(name, measured, config_tol(cfg, name, default_tol)));
}

SuiteReport run_verify_structure(const ExperimentConfig& cfg) {
  SuiteReport report = begin_report(cfg);
  auto model = make_model(cfg.model, cfg.n);
  Rng rng(cfg.seed);
  for (const StructureCheck& row :
       verify_structure_identities(*model, cfg.samples, rng)) {
    add_check(report, cfg, row.name, row.max_residual, 1e-9);
    report.metrics["residual." + row.name] = row.max_residual;
  }
  report.metrics["points"] = cfg.samples;

  auto fit = eta_einstein_fit(*model, std::min(cfg.samples, 16), rng);
  report.checks.push_back(make_flag_check("eta_einstein_fit_accepted",
                                          fit.has_value()));
  if (fit) {
    report.metrics["eta_einstein_A"] = fit->A;
    report.metrics["eta_einstein_residual"] = fit->max_residual;
    if (auto want = model->eta_einstein_constant())
      add_check(report, cfg, "eta_einstein_gap", std::abs(fit->A - *want), 1e-8);
  }
  return report;
}

SuiteReport run_rho_phi(const ExperimentConfig& cfg) {
  SuiteReport report = begin_report(cfg);
  Workspace w = make_workspace(cfg);
  const SasakianModel& model = w.imm.model();

  double rho_min = std::numeric_limits<double>::infinity();
  double rho_max = 0.0, oracle_gap = 0.0;
  for (const NodeFrame& f : w.frames) {
    rho_min = std::min(rho_min, f.rho);
    rho_max = std::max(rho_max, f.rho);
    oracle_gap = std::max(oracle_gap, std::abs(f.rho - rho_gram_oracle(model, f)));
  }
  add_check(report, cfg, "rho_gram_oracle_gap", oracle_gap, 1e-12);
  add_check(report, cfg, "rho_upper_bound", rho_max - 1.0, 1e-10);
  report.checks.push_back(make_flag_check("rho_positive", rho_min > 0.0));

  const double defect = legendrian_defect(w.imm);
  if (defect < 1e-8) {
    double unit_gap = std::max(rho_max - 1.0, 1.0 - rho_min);
    add_check(report, cfg, "legendrian_unit_rho", unit_gap, 1e-10);
  }

  PhiVolume vol = phi_volume(w.imm, w.frames);
  report.metrics["phi_volume"] = vol.total;
  report.metrics["riemann_volume"] = riemann_volume(w.imm, w.frames);
  report.metrics["legendrian_defect"] = defect;
  report.metrics["rho_min"] = rho_min;
  report.metrics["rho_max"] = rho_max;

  Table profile;
  profile.columns.push_back("node");
  for (int d = 0; d < w.imm.grid().k(); ++d)
    profile.columns.push_back("t_" + std::to_string(d));
  profile.columns.insert(profile.columns.end(), {"rho", "sqrt_gram", "density"});
  Series rho_series;
  for (int idx = 0; idx < w.imm.nodes(); ++idx) {
    std::vector<double> row{static_cast<double>(idx)};
    Vec t = w.imm.grid().node_params(idx);
    for (int d = 0; d < t.size(); ++d) row.push_back(t(d));
    row.insert(row.end(), {w.frames[idx].rho, w.frames[idx].sqrt_gram,
                           vol.node_density(idx)});
    profile.rows.push_back(std::move(row));
    if (w.imm.grid().k() == 1) {
      rho_series.x.push_back(t(0));
      rho_series.y.push_back(w.frames[idx].rho);
    }
  }
  report.tables["rho_profile"] = std::move(profile);
  if (!rho_series.x.empty()) report.series["rho_profile"] = std::move(rho_series);
  return report;
}

SuiteReport run_first_variation(const ExperimentConfig& cfg) {
  SuiteReport report = begin_report(cfg);
  Workspace w = make_workspace(cfg);
  const int n = w.imm.model().n();
  MeanCurvatureData mc = h_phi(w.imm, w.frames);
  Rng rng(cfg.seed);

  double max_rel = 0.0, max_findep = 0.0, max_density_gap = 0.0;
  for (int s = 0; s < cfg.samples; ++s) {
    Mat y = trig_coefficients(w.imm.grid(), n, rng);
    Vec f = trig_scalar(w.imm.grid(), rng);
    Mat z = horizontal_chart(w.imm, w.frames, {y, f});
    Mat z0 = horizontal_chart(w.imm, w.frames, {y, Vec::Zero(w.imm.nodes())});

    const double analytic = first_variation_analytic(w.imm, w.frames, mc, y);
    const double fd = first_variation_fd(w.imm, z);
    max_rel = std::max(max_rel, rel_gap(analytic, fd));

    const double dens = integrate_density(
        w.imm, w.frames, first_variation_density(w.imm, w.frames, z));
    const double dens0 = integrate_density(
        w.imm, w.frames, first_variation_density(w.imm, w.frames, z0));
    max_findep = std::max(max_findep, std::abs(dens - dens0));
    max_density_gap = std::max(max_density_gap, std::abs(dens - analytic));
  }
  add_check(report, cfg, "analytic_vs_fd_max_rel", max_rel, 1e-6);
  add_check(report, cfg, "f_independence", max_findep, 1e-8);
  add_check(report, cfg, "density_total_gap", max_density_gap, 1e-8);
  report.metrics["h_phi_max_norm"] = mc.max_norm;
  report.metrics["samples"] = cfg.samples;
  return report;
}

SuiteReport run_second_variation(const ExperimentConfig& cfg) {
  SuiteReport report = begin_report(cfg);
  Workspace w = make_workspace(cfg);
  const int n = w.imm.model().n();
  Rng rng(cfg.seed);

  double rel_f_zero = 0.0, rel_f_nonzero = 0.0, density_gap = 0.0;
  for (int s = 0; s < cfg.samples; ++s) {
    Mat y = trig_coefficients(w.imm.grid(), n, rng);
    Vec f = trig_scalar(w.imm.grid(), rng);
    Mat y_param = parameter_components(w.frames, y);
    for (int with_f = 0; with_f < 2; ++with_f) {
      Vec fc = with_f ? f : Vec(Vec::Zero(w.imm.nodes()));
      HorizontalField v{y, fc};
      const double analytic = second_variation_analytic(w.imm, w.frames, v);
      const double fd = second_variation_fd_geodesic(w.imm, y_param, fc, 1e-2);
      double& slot = with_f ? rel_f_nonzero : rel_f_zero;
      slot = std::max(slot, rel_gap(analytic, fd));
    }
    if (s == 0) {
      HorizontalField v{y, f};
      Mat z = horizontal_chart(w.imm, w.frames, v);
      Mat zz = geodesic_acceleration(w.imm, w.frames, v);
      Vec base = phi_volume(w.imm, w.frames).node_density;
      Vec pred = second_variation_density(w.imm, w.frames, z, zz);
      Vec fd = density_second_derivative_fd_geodesic(w.imm, y_param, f, 1e-2);
      for (int idx = 0; idx < w.imm.nodes(); ++idx)
        density_gap = std::max(
            density_gap, rel_gap(pred(idx) * base(idx), fd(idx)));
    }
  }
  add_check(report, cfg, "analytic_vs_fd_f_zero_max_rel", rel_f_zero, 1e-4);
  add_check(report, cfg, "analytic_vs_fd_f_nonzero_max_rel", rel_f_nonzero, 1e-4);
  add_check(report, cfg, "pointwise_density_max_rel", density_gap, 1e-4);
  report.metrics["samples"] = cfg.samples;
  return report;
}

SuiteReport run_stability_spectrum(const ExperimentConfig& cfg) {
  SuiteReport report = begin_report(cfg);
  Workspace w = make_workspace(cfg);
  const int n = w.imm.model().n();
  StabilityVerdict verdict = stability_check(w.imm, w.frames);

  report.metrics["a_constant"] = verdict.a_constant;
  report.metrics["lambda_min"] = verdict.lambda_min;
  report.metrics["coclosed_value"] = verdict.coclosed_value;
  report.metrics["coclosed_divergence"] = verdict.coclosed_divergence;
  add_check(report, cfg, "eigen_residual", verdict.eigen_residual, 1e-8);

  if (verdict.a_constant > -2.0 + 1e-9) {
    // above the borderline constant an unstable direction must exist
    report.checks.push_back(
        make_flag_check("unstable_direction_found", verdict.lambda_min < 0.0));
    report.checks.push_back(make_flag_check("coclosed_witness_negative",
                                            verdict.coclosed_value < 0.0));
    add_check(report, cfg, "coclosed_witness_divergence",
              verdict.coclosed_divergence, 1e-8);
  } else {
    // at or below the borderline the form is positive semidefinite and the
    // integrand is nonnegative node by node for any direction
    add_check(report, cfg, "lambda_min_floor", -verdict.lambda_min, 1e-6);
    MeanCurvatureData mc = h_phi(w.imm, w.frames);
    Rng rng(cfg.seed);
    double worst = -std::numeric_limits<double>::infinity();
    for (int s = 0; s < std::max(cfg.samples, 1); ++s) {
      Mat y = trig_coefficients(w.imm.grid(), n, rng);
      Vec integrand =
          second_variation_integrand(w.imm, w.frames, {y, Vec::Zero(w.imm.nodes())}, mc);
      worst = std::max(worst, -integrand.minCoeff());
    }
    add_check(report, cfg, "integrand_nonnegative", worst, 1e-6);
  }
  return report;
}

SuiteReport run_convexity(const ExperimentConfig& cfg) {
  SuiteReport report = begin_report(cfg);
  Workspace w = make_workspace(cfg);
  const int n = w.imm.model().n();
  Rng rng(cfg.seed);

  double min_second = std::numeric_limits<double>::infinity();
  double max_commutator = 0.0;
  Series volume_series;
  for (int s = 0; s < cfg.geodesics; ++s) {
    Mat y = trig_coefficients(w.imm.grid(), n, rng);
    Vec f = trig_scalar(w.imm.grid(), rng);
    Mat y_param = parameter_components(w.frames, y);
    ConvexityReport conv = convexity_check(w.imm, y_param, f, cfg.horizon,
                                           cfg.flow_samples);
    min_second = std::min(min_second, conv.min_second_difference);
    max_commutator = std::max(max_commutator, conv.commutator_residual);
    if (s == 0) {
      volume_series.x = conv.times;
      volume_series.y = conv.volumes;
    }
  }
  add_check(report, cfg, "second_difference_floor", -min_second, 1e-6);
  add_check(report, cfg, "max_commutator_residual", max_commutator, 1e-5);
  report.metrics["min_second_difference"] = min_second;
  report.metrics["geodesics"] = cfg.geodesics;
  report.series["volume_along_flow"] = std::move(volume_series);
  return report;
}

SuiteReport run_angle(const ExperimentConfig& cfg) {
  SuiteReport report = begin_report(cfg);
  Workspace w = make_workspace(cfg);
  ConeStructure cone = make_cone(w.imm.model_ptr());
  AngleField angle = legendrian_angle(cone, w.imm, w.frames);
  CalibrationReport cal = calibration_check(cone, w.imm, w.frames);

  add_check(report, cfg, "psi_density_mismatch", angle.max_mismatch, 1e-8);
  add_check(report, cfg, "angle_gradient_residual",
            angle_gradient_residual(cone, w.imm, w.frames), 1e-5);
  report.metrics["theta_min"] = angle.theta.minCoeff();
  report.metrics["theta_max"] = angle.theta.maxCoeff();

  Table profile;
  profile.columns.push_back("node");
  for (int d = 0; d < w.imm.grid().k(); ++d)
    profile.columns.push_back("t_" + std::to_string(d));
  profile.columns.insert(profile.columns.end(),
                         {"theta", "psi_abs", "rho", "re_psi"});
  Series theta_series;
  for (int idx = 0; idx < w.imm.nodes(); ++idx) {
    std::vector<double> row{static_cast<double>(idx)};
    Vec t = w.imm.grid().node_params(idx);
    for (int d = 0; d < t.size(); ++d) row.push_back(t(d));
    row.insert(row.end(), {angle.theta(idx), angle.psi_abs(idx),
                           angle.rho(idx), cal.re_psi(idx)});
    profile.rows.push_back(std::move(row));
    if (w.imm.grid().k() == 1) {
      theta_series.x.push_back(t(0));
      theta_series.y.push_back(angle.theta(idx));
    }
  }
  report.tables["angle_profile"] = std::move(profile);
  if (!theta_series.x.empty())
    report.series["theta_profile"] = std::move(theta_series);
  return report;
}

SuiteReport run_calibration(const ExperimentConfig& cfg) {
  SuiteReport report = begin_report(cfg);
  Workspace w = make_workspace(cfg);
  ConeStructure cone = make_cone(w.imm.model_ptr());
  CalibrationReport cal = calibration_check(cone, w.imm, w.frames);
  SpecialDefect sd = special_defect(cone, w.imm, w.frames);

  add_check(report, cfg, "first_inequality_violation", cal.max_first_violation,
            1e-10);
  add_check(report, cfg, "second_inequality_violation",
            cal.max_second_violation, 1e-10);
  report.metrics["first_equality"] = cal.first_equality ? 1.0 : 0.0;
  report.metrics["second_equality"] = cal.second_equality ? 1.0 : 0.0;
  report.metrics["special_phase"] = sd.theta;
  report.metrics["special_defect"] = sd.defect;

  // equality must be detected exactly when the family is geometrically sharp
  const double defect = legendrian_defect(w.imm);
  report.metrics["legendrian_defect"] = defect;
  if (defect < 1e-8)
    report.checks.push_back(
        make_flag_check("unit_rho_equality_detected", cal.second_equality));
  if (sd.defect < 1e-8 && std::abs(sd.theta) < 1e-8)
    report.checks.push_back(
        make_flag_check("calibrated_equality_detected", cal.first_equality));
  return report;
}

SuiteReport run_moduli_walk(const ExperimentConfig& cfg) {
  SuiteReport report = begin_report(cfg);
  Workspace w = make_workspace(cfg);
  const NewtonMode mode =
      cfg.mode == "frozen" ? NewtonMode::FrozenBase : NewtonMode::Rebased;
  FormPattern pattern = pattern_by_name(cfg.pattern);
  const double tol = config_tol(cfg, "walk_tol", 1e-10);

  std::vector<WalkStep> walk =
      moduli_walk(w.imm, pattern, cfg.steps, cfg.step_size, tol, mode);

  double max_residual = 0.0, max_defect = 0.0;
  double min_sep = std::numeric_limits<double>::infinity();
  Table table;
  table.columns = {"step", "iterations", "residual", "special_defect", "volume"};
  Series volumes;
  for (std::size_t i = 0; i < walk.size(); ++i) {
    max_residual = std::max(max_residual, walk[i].residual);
    max_defect = std::max(max_defect, walk[i].special_defect);
    min_sep = std::min(min_sep, immersion_distance(
                                    w.imm, walk[i].immersion));
    for (std::size_t j = 0; j < i; ++j)
      min_sep = std::min(min_sep, immersion_distance(walk[j].immersion,
                                                     walk[i].immersion));
    table.rows.push_back({static_cast<double>(i + 1),
                          static_cast<double>(walk[i].iterations),
                          walk[i].residual, walk[i].special_defect,
                          walk[i].volume});
    volumes.x.push_back(static_cast<double>(i + 1));
    volumes.y.push_back(walk[i].volume);
  }
  add_check(report, cfg, "max_step_residual", max_residual, 1e-9);
  add_check(report, cfg, "max_special_defect", max_defect, 1e-9);
  report.checks.push_back(
      make_flag_check("members_distinct", min_sep > 1e-3));

  // every member must still pass the density and calibration suites
  double member_mismatch = 0.0, member_first = 0.0, member_rho_upper = 0.0;
  bool members_special = true;
  for (const WalkStep& step : walk) {
    std::vector<NodeFrame> frames = build_frames(step.immersion);
    ConeStructure cone = make_cone(step.immersion.model_ptr());
    AngleField angle = legendrian_angle(cone, step.immersion, frames);
    CalibrationReport cal = calibration_check(cone, step.immersion, frames);
    member_mismatch = std::max(member_mismatch, angle.max_mismatch);
    member_first = std::max(member_first, cal.max_first_violation);
    members_special = members_special && cal.first_equality;
    for (const NodeFrame& f : frames)
      member_rho_upper = std::max(member_rho_upper, f.rho - 1.0);
  }
  add_check(report, cfg, "member_psi_density_mismatch", member_mismatch, 1e-8);
  add_check(report, cfg, "member_calibration_violation", member_first, 1e-10);
  add_check(report, cfg, "member_rho_upper_bound", member_rho_upper, 1e-10);
  report.checks.push_back(
      make_flag_check("members_calibrated", members_special));

  report.metrics["steps"] = static_cast<double>(walk.size());
  report.metrics["min_separation"] = min_sep;
  report.metrics["base_volume"] = phi_volume(w.imm, w.frames).total;

  // residual history of the first correction, for the log-scale plot
  ModuliState state = make_moduli_state(w.imm);
  Mat alpha(w.imm.grid().k(), w.imm.nodes());
  for (int idx = 0; idx < w.imm.nodes(); ++idx)
    alpha.col(idx) = cfg.step_size * pattern(w.imm.grid().node_params(idx));
  NewtonReport newton =
      newton_project(state, kernel_element(state, alpha), tol, 50, mode);
  Series history;
  for (std::size_t i = 0; i < newton.residual_history.size(); ++i) {
    history.x.push_back(static_cast<double>(i));
    history.y.push_back(newton.residual_history[i]);
  }
  report.metrics["newton_iterations"] = newton.iterations;
  report.metrics["newton_order"] = newton.measured_order;
  report.series["newton_residual_history"] = std::move(history);
  report.series["walk_volumes"] = std::move(volumes);
  report.tables["walk"] = std::move(table);
  report.tables["final_immersion"] = immersion_table(walk.back().immersion);
  return report;
}

SuiteReport run_flow(const ExperimentConfig& cfg) {
  SuiteReport report = begin_report(cfg);
  Workspace w = make_workspace(cfg);
  const int n = w.imm.model().n();
  Rng rng(cfg.seed);
  Mat y = trig_coefficients(w.imm.grid(), n, rng);
  Vec f = trig_scalar(w.imm.grid(), rng);
  Mat y_param = parameter_components(w.frames, y);

  GeodesicFamily family =
      geodesic_evolve(w.imm, y_param, f, cfg.horizon, cfg.flow_samples);
  Series volumes;
  Table table;
  table.columns = {"time", "phi_volume", "legendrian_defect"};
  for (std::size_t i = 0; i < family.members.size(); ++i) {
    const double vol = phi_volume(family.members[i]).total;
    volumes.x.push_back(family.times[i]);
    volumes.y.push_back(vol);
    table.rows.push_back(
        {family.times[i], vol, legendrian_defect(family.members[i])});
  }
  add_check(report, cfg, "max_commutator_residual",
            geodesic_commutator_residual(family.members.back(), y_param, f),
            1e-5);

  auto a_constant = w.imm.model().eta_einstein_constant();
  if (a_constant && *a_constant <= -2.0 + 1e-9) {
    // convexity gate along the sampled volumes
    double min_second = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i + 1 < volumes.y.size(); ++i)
      min_second = std::min(min_second, volumes.y[i + 1] - 2.0 * volumes.y[i] +
                                            volumes.y[i - 1]);
    add_check(report, cfg, "second_difference_floor", -min_second, 1e-6);
    report.metrics["min_second_difference"] = min_second;
  }
  report.metrics["volume_start"] = volumes.y.front();
  report.metrics["volume_end"] = volumes.y.back();
  report.series["volume_along_flow"] = std::move(volumes);
  report.tables["flow"] = std::move(table);
  return report;
}

}  // namespace

ExperimentConfig default_config(const std::string& operation) {
  ExperimentConfig cfg;
  cfg.operation = operation;
  if (operation == "verify-structure") {
    cfg.samples = 64;
  } else if (operation == "rho-phi" || operation == "angle") {
    cfg.family = "torus_curve";
    cfg.params = {M_PI / 4.0, 2.0};
  } else if (operation == "first-variation") {
    cfg.family = "torus_curve";
    cfg.params = {M_PI / 4.0, 2.0};
    cfg.grid = {48};
  } else if (operation == "second-variation") {
    cfg.family = "torus_curve";
    cfg.params = {M_PI / 4.0, 2.0};
    cfg.grid = {48};
  } else if (operation == "stability-spectrum") {
    cfg.family = "real_circle";
  } else if (operation == "convexity" || operation == "flow") {
    cfg.family = "heisenberg_line";
  } else if (operation == "calibration" || operation == "moduli-walk") {
    cfg.family = "real_circle";
  } else if (!operation.empty()) {
    throw ConfigError("unknown operation '" + operation + "'");
  }
  return cfg;
}

SuiteReport run_experiment(const ExperimentConfig& cfg) {
  if (cfg.operation == "verify-structure") return run_verify_structure(cfg);
  if (cfg.operation == "rho-phi") return run_rho_phi(cfg);
  if (cfg.operation == "first-variation") return run_first_variation(cfg);
  if (cfg.operation == "second-variation") return run_second_variation(cfg);
  if (cfg.operation == "stability-spectrum") return run_stability_spectrum(cfg);
  if (cfg.operation == "convexity") return run_convexity(cfg);
  if (cfg.operation == "angle") return run_angle(cfg);
  if (cfg.operation == "calibration") return run_calibration(cfg);
  if (cfg.operation == "moduli-walk") return run_moduli_walk(cfg);
  if (cfg.operation == "flow") return run_flow(cfg);
  throw ConfigError("unknown operation '" + cfg.operation + "'");
}

namespace {

std::string spliced_path(const std::string& base, const std::string& name,
                         bool unique) {
  if (unique) return base;
  const std::size_t dot = base.find_last_of('.');
  if (dot == std::string::npos) return base + "-" + name;
  return base.substr(0, dot) + "-" + name + base.substr(dot);
}

}  // namespace

int emit_plots(const SuiteReport& report, const std::string& svg_path) {
  if (report.series.empty()) {
    std::cerr << "warning: report has no series, no plot written\n";
    return 0;
  }
  int written = 0;
  const bool unique = report.series.size() == 1;
  for (const auto& [name, data] : report.series) {
    const bool log_y = name.find("residual_history") != std::string::npos;
    if (emit_line_plot(data, name, spliced_path(svg_path, name, unique), log_y))
      ++written;
  }
  return written;
}

int write_tables(const SuiteReport& report, const std::string& csv_path) {
  if (report.tables.empty()) {
    std::cerr << "warning: report has no tables, no CSV written\n";
    return 0;
  }
  int written = 0;
  const bool unique = report.tables.size() == 1;
  for (const auto& [name, data] : report.tables) {
    write_text_file(spliced_path(csv_path, name, unique), table_to_csv(data));
    ++written;
  }
  return written;
}

}  // namespace phivol
