#pragma once

// effstudio command line: wedge report, single-configuration analysis,
// forward-efficiency sweep and the bundled two-link leg study.
//
// Exit codes: 0 ok, 2 invalid input, 3 non-backdrivable / locked
// transmission, 4 singular configuration, 5 sweep trend check failed.

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "effdyn/metrics.hpp"
#include "effdyn/oracle.hpp"
#include "effdyn/presets.hpp"
#include "effdyn/robot_file.hpp"
#include "effdyn/svg.hpp"
#include "effdyn/wedge.hpp"

namespace effdyn::studio {

enum ExitCode : int {
  kOk = 0,
  kInvalidInput = 2,
  kNonBackdrivable = 3,
  kSingular = 4,
  kRegression = 5,
};

inline constexpr double kDeg = std::numbers::pi / 180.0;

struct OutputOptions {
  std::filesystem::path dir = ".";
  bool csv = true;
  bool svg = true;

  static OutputOptions from_flags(const std::string &dir, const std::string &format) {
    OutputOptions o;
    o.dir = dir;
    if (format == "csv")
      o.svg = false;
    else if (format == "svg")
      o.csv = false;
    else if (format != "both")
      throw InvalidArgument("--format must be csv, svg or both");
    return o;
  }

  void write(const std::string &name, const std::string &content,
             std::vector<std::string> &written) const {
    std::filesystem::create_directories(dir);
    const auto path = dir / name;
    std::ofstream f(path, std::ios::binary);
    if (!f)
      throw InvalidArgument("cannot write " + path.string());
    f << content;
    written.push_back(path.string());
  }
};

inline std::string num(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

inline std::string short_num(double v) {
  std::ostringstream s;
  s << std::setprecision(6) << v;
  return s.str();
}

// ---------------------------------------------------------------------------
// wedge
// ---------------------------------------------------------------------------

struct WedgeModeRow {
  DriveMode mode;
  double eta = 1.0; ///< effective multiplier
  double acceleration = 0.0;
  double impedance = 0.0;
  bool verified = false;
  double oracle_acceleration = 0.0;
  double acceleration_residual = 0.0;
  double oracle_efficiency = 0.0;
  double efficiency_residual = 0.0;
};

/// Runs the oracle in `mode` long enough to average the acceleration while
/// the slip direction is held.
inline void verify_wedge_mode(const wedge::WedgeParams &p, const wedge::WedgeForces &f,
                              WedgeModeRow &row) {
  oracle::OracleConfig cfg;
  cfg.duration = 0.1;
  const double a = row.acceleration;
  const double speed = std::max(0.1, 2.0 * std::abs(a) * cfg.duration + 0.1);
  // Forward driving moves the wedge along -u, which carries the block to -x.
  const double v0 = row.mode == DriveMode::Backward ? speed : -speed;
  // The ideal closed form is the frictionless limit.
  wedge::WedgeParams sim = p;
  if (row.mode == DriveMode::Ideal)
    sim.friction_coeff = 0.0;
  const auto traj = oracle::simulate_wedge(sim, f, cfg, 0.0, v0);
  row.verified = true;
  row.oracle_acceleration = traj.mean_acceleration();
  row.acceleration_residual = std::abs(row.oracle_acceleration - a) / (std::abs(a) + 1e-12);
  if (row.mode == DriveMode::Ideal)
    return;
  const double expected = row.mode == DriveMode::Forward ? wedge::forward_efficiency(p)
                                                         : wedge::backward_efficiency(p);
  try {
    row.oracle_efficiency = oracle::measured_efficiency(traj);
    row.efficiency_residual = std::abs(row.oracle_efficiency - expected);
  } catch (const NoSlip &) {
    row.oracle_efficiency = std::numeric_limits<double>::quiet_NaN();
  }
}

inline int cmd_wedge(const wedge::WedgeParams &p, const wedge::WedgeForces &f,
                     const std::string &mode_flag, bool verify, const OutputOptions *files,
                     std::ostream &out) {
  p.validate();
  std::vector<DriveMode> modes;
  if (mode_flag == "all")
    modes = {DriveMode::Ideal, DriveMode::Forward, DriveMode::Backward};
  else if (auto m = parse_drive_mode(mode_flag))
    modes = {*m};
  else
    throw InvalidArgument("unknown mode '" + mode_flag + "'");

  out << "eta_f = " << short_num(wedge::forward_efficiency(p)) << '\n';
  bool backdrivable = true;
  try {
    const double eta_b = wedge::backward_efficiency(p);
    out << "eta_b = " << short_num(eta_b) << (eta_b == 0.0 ? " (non-backdrivable limit)" : "")
        << '\n';
    backdrivable = eta_b > 0.0;
  } catch (const NonBackdrivable &) {
    out << "eta_b = locked (non-backdrivable, mu*tan(alpha) = " << short_num(p.friction_load())
        << ")\n";
    backdrivable = false;
  }

  std::vector<WedgeModeRow> rows;
  for (auto mode : modes) {
    if (mode == DriveMode::Backward && !backdrivable) {
      if (modes.size() == 1)
        throw NonBackdrivable("wedge is non-backdrivable: mu*tan(alpha) = " +
                              short_num(p.friction_load()));
      out << "backward: non-backdrivable\n";
      continue;
    }
    WedgeModeRow row;
    row.mode = mode;
    row.eta = wedge::effective_efficiency(p, mode);
    row.acceleration = wedge::reduced_acceleration(p, f, mode);
    row.impedance = wedge::impedance_coefficient(p, mode);
    if (verify)
      verify_wedge_mode(p, f, row);
    out << to_string(mode) << ": x_ddot = " << short_num(row.acceleration)
        << " m/s^2, impedance = " << short_num(row.impedance) << " kg";
    if (row.verified) {
      out << ", oracle residual = " << std::scientific << std::setprecision(2)
          << row.acceleration_residual;
      if (mode != DriveMode::Ideal)
        out << ", efficiency residual = " << row.efficiency_residual;
      out << std::defaultfloat;
    }
    out << '\n';
    rows.push_back(row);
  }

  if (files && files->csv) {
    std::ostringstream csv;
    csv << "mode,eta_effective,x_ddot,impedance,oracle_x_ddot,acceleration_residual,"
           "oracle_efficiency,efficiency_residual\n";
    for (const auto &r : rows)
      csv << to_string(r.mode) << ',' << num(r.eta) << ',' << num(r.acceleration) << ','
          << num(r.impedance) << ',' << (r.verified ? num(r.oracle_acceleration) : "") << ','
          << (r.verified ? num(r.acceleration_residual) : "") << ','
          << (r.verified && r.mode != DriveMode::Ideal ? num(r.oracle_efficiency) : "") << ','
          << (r.verified && r.mode != DriveMode::Ideal ? num(r.efficiency_residual) : "")
          << '\n';
    std::vector<std::string> written;
    files->write("wedge.csv", csv.str(), written);
    for (const auto &w : written)
      out << "wrote " << w << '\n';
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

struct Analysis {
  bool forward = true, backward = true;
  InertiaEllipsoid gie, fgie, bgie;
  ForcePolytope fc, ffc, bfc;
  std::vector<ImfReport> imf;
};

inline Analysis analyze(const RobotModel &model, const RobotState &state,
                        const std::string &mode_flag, const std::vector<Vector2d> &dirs) {
  Analysis a;
  const auto m = model.joints();
  EfficiencyAssignment eff = EfficiencyAssignment::uniform(model.transmissions, DriveMode::Ideal);
  if (mode_flag == "ideal")
    eff = EfficiencyAssignment::ideal(m);
  else if (mode_flag == "forward")
    a.backward = false;
  else if (mode_flag == "backward")
    a.forward = false;
  else if (mode_flag != "all")
    throw InvalidArgument("--mode must be ideal, forward, backward or all");

  a.gie = gie(dissipative_eom(model, state, EfficiencyAssignment::ideal(m)));
  const auto chain = model.chain();
  const MatrixXd jl = limb_jacobian(model, state);
  const VectorXd limits = torque_limits(model);
  a.fc = force_capability(chain, jl, limits);
  if (a.forward) {
    const auto fwd = eff.with_mode(DriveMode::Forward);
    a.fgie = fgie(dissipative_eom(model, state, fwd));
    a.ffc = asymmetric_force_capability(chain, jl, limits, fwd);
  }
  if (a.backward) {
    const auto bwd = eff.with_mode(DriveMode::Backward);
    a.bgie = bgie(dissipative_eom(model, state, bwd)); // throws LockedTransmission
    a.bfc = asymmetric_force_capability(chain, jl, limits, bwd);
    for (const auto &d : dirs)
      a.imf.push_back(impact_mitigation_factor(model, state, eff, d));
  }
  return a;
}

inline std::vector<Vector2d> polygon_points(const ForcePolytope &p) {
  std::vector<Vector2d> pts;
  for (const auto &v : p.vertices)
    pts.emplace_back(v(0), v(1));
  return pts;
}

inline void emit_analysis(const Analysis &a, const std::vector<Vector2d> &dirs,
                          const OutputOptions &files, std::ostream &out) {
  auto print_matrix = [&](const char *name, const InertiaEllipsoid &e) {
    out << name << " [kg] = [[" << short_num(e.matrix(0, 0)) << ", " << short_num(e.matrix(0, 1))
        << "], [" << short_num(e.matrix(1, 0)) << ", " << short_num(e.matrix(1, 1)) << "]]\n";
  };
  print_matrix("GIE ", a.gie);
  if (a.forward)
    print_matrix("FGIE", a.fgie);
  if (a.backward)
    print_matrix("BGIE", a.bgie);
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    const auto &n = dirs[i];
    out << "n = (" << short_num(n.x()) << ", " << short_num(n.y()) << "): FC extent "
        << short_num(a.fc.extent(n));
    if (a.forward)
      out << ", FFC " << short_num(a.ffc.extent(n));
    if (a.backward)
      out << ", BFC " << short_num(a.bfc.extent(n)) << ", IMF " << short_num(a.imf[i].xi);
    out << '\n';
  }

  std::vector<std::string> written;
  if (files.csv) {
    std::ostringstream inertia;
    inertia << "ellipsoid,m11,m12,m21,m22\n";
    auto row = [&](const char *name, const InertiaEllipsoid &e) {
      inertia << name << ',' << num(e.matrix(0, 0)) << ',' << num(e.matrix(0, 1)) << ','
              << num(e.matrix(1, 0)) << ',' << num(e.matrix(1, 1)) << '\n';
    };
    row("GIE", a.gie);
    if (a.forward)
      row("FGIE", a.fgie);
    if (a.backward)
      row("BGIE", a.bgie);
    files.write("inertia.csv", inertia.str(), written);

    std::ostringstream cap;
    cap << "polytope,vertex,f_x,f_z\n";
    auto poly = [&](const char *name, const ForcePolytope &p) {
      for (std::size_t k = 0; k < p.vertices.size(); ++k)
        cap << name << ',' << k << ',' << num(p.vertices[k](0)) << ',' << num(p.vertices[k](1))
            << '\n';
    };
    poly("FC", a.fc);
    if (a.forward)
      poly("FFC", a.ffc);
    if (a.backward)
      poly("BFC", a.bfc);
    files.write("capability.csv", cap.str(), written);

    std::ostringstream dir;
    dir << "n_x,n_z,gie,fgie,bgie,fc_extent,ffc_extent,bfc_extent,imf,locked_inertia,"
           "backdriven_inertia\n";
    for (std::size_t i = 0; i < dirs.size(); ++i) {
      const auto &n = dirs[i];
      dir << num(n.x()) << ',' << num(n.y()) << ',' << num(a.gie.directional(n)) << ','
          << (a.forward ? num(a.fgie.directional(n)) : "") << ','
          << (a.backward ? num(a.bgie.directional(n)) : "") << ',' << num(a.fc.extent(n)) << ','
          << (a.forward ? num(a.ffc.extent(n)) : "") << ','
          << (a.backward ? num(a.bfc.extent(n)) : "") << ','
          << (a.backward ? num(a.imf[i].xi) : "") << ','
          << (a.backward ? num(a.imf[i].locked_inertia) : "") << ','
          << (a.backward ? num(a.imf[i].backdriven_inertia) : "") << '\n';
    }
    files.write("directions.csv", dir.str(), written);
  }
  if (files.svg) {
    svg::Plot ell("Generalized inertia ellipsoids at the foot", "x [kg^1/2]", "z [kg^1/2]");
    ell.equal_aspect();
    ell.ellipse(a.gie.matrix, "#222222", "GIE");
    if (a.forward)
      ell.ellipse(a.fgie.matrix, "#1f77b4", "FGIE (sym)");
    if (a.backward)
      ell.ellipse(a.bgie.matrix, "#d62728", "BGIE");
    files.write("inertia.svg", ell.render(), written);

    svg::Plot cap("Force capability at the foot", "f_x [N]", "f_z [N]");
    cap.equal_aspect();
    if (a.backward)
      cap.polygon(polygon_points(a.bfc), "#d62728", "BFC");
    cap.polygon(polygon_points(a.fc), "#222222", "FC");
    if (a.forward)
      cap.polygon(polygon_points(a.ffc), "#1f77b4", "FFC");
    files.write("capability.svg", cap.render(), written);
  }
  for (const auto &w : written)
    out << "wrote " << w << '\n';
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

/// Trend checks along a sweep; returns one message per violation.
inline std::vector<std::string> check_sweep(const std::vector<SweepRow> &rows) {
  std::vector<std::string> bad;
  std::vector<const SweepRow *> live;
  for (const auto &r : rows) {
    if (std::abs(r.ffc_ratio - r.eta_f) > 1e-9)
      bad.push_back("FFC/FC differs from eta_f at eta_f = " + short_num(r.eta_f));
    if (std::isfinite(r.bfc_ratio))
      live.push_back(&r);
  }
  std::sort(live.begin(), live.end(),
            [](const SweepRow *a, const SweepRow *b) { return a->eta_f < b->eta_f; });
  for (std::size_t i = 1; i < live.size(); ++i) {
    const auto &lo = *live[i - 1];
    const auto &hi = *live[i];
    if (lo.eta_f == hi.eta_f)
      continue;
    const std::string at = " between eta_f = " + short_num(lo.eta_f) + " and " + short_num(hi.eta_f);
    if (!(lo.bfc_ratio > hi.bfc_ratio))
      bad.push_back("BFC/FC is not strictly increasing as eta_f decreases" + at);
    if (!(lo.imf < hi.imf))
      bad.push_back("IMF is not strictly decreasing as eta_f decreases" + at);
    if (!(lo.bgie >= hi.bgie))
      bad.push_back("BGIE directional inertia decreases as eta_f decreases" + at);
  }
  for (const auto &r : rows)
    if (!(r.imf >= 0.0 && r.imf <= 1.0))
      bad.push_back("IMF outside [0, 1] at eta_f = " + short_num(r.eta_f));
  return bad;
}

inline std::string sweep_csv(const std::vector<SweepRow> &rows) {
  std::ostringstream csv;
  csv << "eta_f,eta_b,ffc_ratio,bfc_ratio,imf,gie,fgie,bgie\n";
  for (const auto &r : rows)
    csv << num(r.eta_f) << ',' << num(r.eta_b) << ',' << num(r.ffc_ratio) << ','
        << num(r.bfc_ratio) << ',' << num(r.imf) << ',' << num(r.gie) << ',' << num(r.fgie)
        << ',' << num(r.bgie) << '\n';
  return csv.str();
}

inline int cmd_sweep(const RobotModel &model, const RobotState &state, double from, double to,
                     int steps, const Vector2d &dir, const OutputOptions &files,
                     std::ostream &out, std::ostream &err) {
  if (!(from > 0.0) || !(to <= 1.0) || !(from < to) || steps < 2)
    throw InvalidArgument("sweep: need 0 < from < to <= 1 and at least 2 steps");
  const double threshold = backward_locking_threshold(model.transmissions.front().reduction());
  if (from <= threshold)
    err << "warning: eta_f <= " << short_num(threshold)
        << " locks the backward branch; those samples report unbounded BFC\n";
  const auto rows = efficiency_sweep(model, state, linspace(from, to, steps), dir);

  std::vector<std::string> written;
  if (files.csv)
    files.write("sweep.csv", sweep_csv(rows), written);
  if (files.svg) {
    std::vector<Vector2d> ffc, bfc, imf, bgie_pts, gie_pts;
    for (const auto &r : rows) {
      ffc.emplace_back(r.eta_f, r.ffc_ratio);
      if (std::isfinite(r.bfc_ratio))
        bfc.emplace_back(r.eta_f, r.bfc_ratio);
      imf.emplace_back(r.eta_f, r.imf);
      gie_pts.emplace_back(r.eta_f, r.gie);
      if (std::isfinite(r.bgie))
        bgie_pts.emplace_back(r.eta_f, r.bgie);
    }
    svg::Plot cap("Force capability along n vs forward efficiency", "eta_f", "extent / ideal");
    cap.polyline(bfc, "#d62728", "BFC / FC");
    cap.polyline(ffc, "#1f77b4", "FFC / FC");
    files.write("sweep_capability.svg", cap.render(), written);
    svg::Plot xi("Impact mitigation factor along n", "eta_f", "IMF");
    xi.polyline(imf, "#2ca02c", "IMF");
    files.write("sweep_imf.svg", xi.render(), written);
    svg::Plot in("Directional inertia along n", "eta_f", "n^T Lambda n [kg]");
    in.polyline(gie_pts, "#222222", "GIE");
    in.polyline(bgie_pts, "#d62728", "BGIE");
    files.write("sweep_inertia.svg", in.render(), written);
  }

  const auto &first = rows.front();
  const auto &last = rows.back();
  out << "sweep: " << rows.size() << " samples, eta_f " << short_num(first.eta_f) << " -> "
      << short_num(last.eta_f) << '\n';
  out << "  eta_f = " << short_num(first.eta_f) << ": eta_b " << short_num(first.eta_b)
      << ", BFC/FC " << short_num(first.bfc_ratio) << ", IMF " << short_num(first.imf) << '\n';
  out << "  eta_f = " << short_num(last.eta_f) << ": eta_b " << short_num(last.eta_b)
      << ", BFC/FC " << short_num(last.bfc_ratio) << ", IMF " << short_num(last.imf) << '\n';
  for (const auto &w : written)
    out << "wrote " << w << '\n';

  const auto bad = check_sweep(rows);
  for (const auto &b : bad)
    err << "trend check failed: " << b << '\n';
  return bad.empty() ? kOk : kRegression;
}

// ---------------------------------------------------------------------------
// entry point
// ---------------------------------------------------------------------------

inline Vector2d parse_direction(const std::string &text) {
  std::istringstream in(text);
  double x = 0.0, z = 0.0;
  char comma = 0;
  if (!(in >> x >> comma >> z) || comma != ',' || !(in >> std::ws).eof())
    throw InvalidArgument("direction must look like 'x,z', got '" + text + "'");
  Vector2d d(x, z);
  if (!d.allFinite() || d.norm() == 0.0)
    throw InvalidArgument("direction must be a nonzero finite vector");
  return d.normalized();
}

inline VectorXd parse_angles(const std::string &text) {
  std::vector<double> vals;
  std::istringstream in(text);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception &) {
      used = 0;
    }
    if (used == 0 || tok.find_first_not_of(" \t", used) != std::string::npos)
      throw InvalidArgument("joint angles must be comma-separated numbers, got '" + text + "'");
    vals.push_back(v);
  }
  return Eigen::Map<VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

inline RobotDescription leg2dof_description(double hip_deg, double knee_deg) {
  RobotDescription d;
  d.name = "leg2dof";
  d.model = presets::leg2dof();
  d.base_pose = VectorXd::Zero(3);
  d.joint_angles_deg = Eigen::Vector2d(hip_deg, knee_deg);
  return d;
}

/// Parses argv and runs one subcommand; never throws.
inline int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  CLI::App app{"effstudio: efficiency-aware dynamics and design metrics for geared robots",
               "effstudio"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "effstudio 1.0");

  std::string out_dir = ".";
  std::string format = "both";

  // wedge
  auto *wedge_cmd = app.add_subcommand("wedge", "Closed-form wedge-block transmission report");
  double mu = 0.2, alpha_deg = 45.0, block_mass = 1.0, wedge_mass = 1.0, fx = 1.0, fu = 1.0;
  std::string wedge_mode = "all";
  bool verify = false;
  wedge_cmd->add_option("--mu", mu, "Friction coefficient")->capture_default_str();
  wedge_cmd->add_option("--alpha", alpha_deg, "Slope angle [deg]")->capture_default_str();
  wedge_cmd->add_option("--block-mass", block_mass, "Block mass M [kg]")->capture_default_str();
  wedge_cmd->add_option("--wedge-mass", wedge_mass, "Wedge mass m [kg]")->capture_default_str();
  wedge_cmd->add_option("--fx", fx, "Force on the block along x [N]")->capture_default_str();
  wedge_cmd->add_option("--fu", fu, "Force on the wedge along -u [N]")->capture_default_str();
  wedge_cmd->add_option("--mode", wedge_mode, "ideal|forward|backward|all")
      ->check(CLI::IsMember({"ideal", "forward", "backward", "all"}))
      ->capture_default_str();
  wedge_cmd->add_flag("--verify", verify, "Cross-check against the friction oracle");
  auto *wedge_out = wedge_cmd->add_option("--out", out_dir, "Directory for wedge.csv");

  // analyze
  auto *analyze_cmd = app.add_subcommand("analyze", "Metrics at the configuration in a robot file");
  std::string file;
  std::string mode = "all";
  std::vector<std::string> dir_flags;
  std::string q_override;
  analyze_cmd->add_option("file", file, "Robot description (JSON)")->required();
  analyze_cmd->add_option("--mode", mode, "ideal|forward|backward|all")
      ->check(CLI::IsMember({"ideal", "forward", "backward", "all"}))
      ->capture_default_str();
  analyze_cmd->add_option("--dir", dir_flags, "Task direction 'x,z' (repeatable)");
  analyze_cmd->add_option("--q", q_override, "Joint angles 'q1,q2,...' [deg]");
  analyze_cmd->add_option("--out", out_dir, "Output directory")->capture_default_str();
  analyze_cmd->add_option("--format", format, "csv|svg|both")
      ->check(CLI::IsMember({"csv", "svg", "both"}))
      ->capture_default_str();

  // sweep
  auto *sweep_cmd = app.add_subcommand("sweep", "Uniform forward-efficiency sweep");
  double from = 0.55, to = 1.0;
  int steps = 50;
  std::string sweep_dir = "0,1";
  sweep_cmd->add_option("file", file, "Robot description (JSON)")->required();
  sweep_cmd->add_option("--from", from, "Lowest eta_f")->capture_default_str();
  sweep_cmd->add_option("--to", to, "Highest eta_f")->capture_default_str();
  sweep_cmd->add_option("--steps", steps, "Number of samples")->capture_default_str();
  sweep_cmd->add_option("--dir", sweep_dir, "Task direction 'x,z'")->capture_default_str();
  sweep_cmd->add_option("--q", q_override, "Joint angles 'q1,q2,...' [deg]");
  sweep_cmd->add_option("--out", out_dir, "Output directory")->capture_default_str();
  sweep_cmd->add_option("--format", format, "csv|svg|both")
      ->check(CLI::IsMember({"csv", "svg", "both"}))
      ->capture_default_str();

  // leg-study
  auto *leg_cmd = app.add_subcommand("leg-study", "Analysis and sweep of the bundled two-link leg");
  double hip = 60.0, knee = 60.0;
  leg_cmd->add_option("--hip", hip, "Hip angle [deg]")->capture_default_str();
  leg_cmd->add_option("--knee", knee, "Knee angle [deg]")->capture_default_str();
  leg_cmd->add_option("--from", from, "Lowest eta_f")->capture_default_str();
  leg_cmd->add_option("--to", to, "Highest eta_f")->capture_default_str();
  leg_cmd->add_option("--steps", steps, "Number of samples")->capture_default_str();
  leg_cmd->add_option("--mode", mode, "ideal|forward|backward|all")
      ->check(CLI::IsMember({"ideal", "forward", "backward", "all"}))
      ->capture_default_str();
  leg_cmd->add_option("--out", out_dir, "Output directory")->capture_default_str();
  leg_cmd->add_option("--format", format, "csv|svg|both")
      ->check(CLI::IsMember({"csv", "svg", "both"}))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    std::ostringstream o, er;
    const int code = app.exit(e, o, er);
    out << o.str();
    err << er.str();
    return code == 0 ? kOk : kInvalidInput;
  }

  try {
    auto directions = [&]() {
      std::vector<Vector2d> dirs;
      for (const auto &d : dir_flags)
        dirs.push_back(parse_direction(d));
      if (dirs.empty())
        dirs = {Vector2d(0.0, 1.0), Vector2d(1.0, 0.0)};
      return dirs;
    };
    auto load = [&]() {
      auto d = load_robot_description(file);
      if (!q_override.empty()) {
        const VectorXd q = parse_angles(q_override);
        if (q.size() != d.model.joints())
          throw InvalidArgument("--q needs " + std::to_string(d.model.joints()) + " angles");
        d.joint_angles_deg = q;
      }
      return d;
    };

    if (*wedge_cmd) {
      wedge::WedgeParams p{block_mass, wedge_mass, alpha_deg * kDeg, mu};
      const OutputOptions files = OutputOptions::from_flags(out_dir, "csv");
      return cmd_wedge(p, {fx, fu}, wedge_mode, verify, wedge_out->count() ? &files : nullptr,
                       out);
    }
    const OutputOptions files = OutputOptions::from_flags(out_dir, format);
    if (*analyze_cmd) {
      const auto d = load();
      const auto dirs = directions();
      emit_analysis(analyze(d.model, d.state(), mode, dirs), dirs, files, out);
      return kOk;
    }
    if (*sweep_cmd) {
      const auto d = load();
      return cmd_sweep(d.model, d.state(), from, to, steps, parse_direction(sweep_dir), files,
                       out, err);
    }
    if (*leg_cmd) {
      const auto d = leg2dof_description(hip, knee);
      const auto state = d.state();
      const std::vector<Vector2d> dirs = {Vector2d(0.0, 1.0), Vector2d(1.0, 0.0)};
      out << "leg2dof at hip " << short_num(hip) << " deg, knee " << short_num(knee) << " deg\n";
      emit_analysis(analyze(d.model, state, mode, dirs), dirs, files, out);
      return cmd_sweep(d.model, state, from, to, steps, Vector2d(0.0, 1.0), files, out, err);
    }
  } catch (const NonBackdrivable &e) {
    err << "error: " << e.what() << '\n';
    return kNonBackdrivable;
  } catch (const DivergentInertia &e) {
    err << "error: non-backdrivable: " << e.what() << '\n';
    return kNonBackdrivable;
  } catch (const LockedTransmission &e) {
    err << "error: non-backdrivable: " << e.what() << '\n';
    return kNonBackdrivable;
  } catch (const SingularJacobian &e) {
    err << "error: " << e.what() << '\n';
    return kSingular;
  } catch (const SingularTopology &e) {
    err << "error: " << e.what() << '\n';
    return kSingular;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return kInvalidInput;
  }
  return kInvalidInput;
}

} // namespace effdyn::studio
