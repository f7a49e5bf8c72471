#pragma once

// A Reeb trap in R^5 and the plug obtained by doubling it.
//
// The trap is the contact Hamiltonian field X_H of a function H > 0 on
// r5-standard, H = 1 outside a ball, so X = d/dz there. With u_j = r_j^2,
// l = (u_1 + s u_2) / (1 + s) and tau = (u_2 - u_1) / l, H = l G(l, tau, z)
// and
//
//   dz(X) = -l^2 dG/dl,   du_j/dt = u_j dH/dz,   tau is conserved.
//
// G is built from a decreasing profile with a degenerate critical point at
// the Clifford torus T = {r_1 = r_2 = 1, z = 0}, so dz(X) > 0 off T and T
// carries the linear flow d/dphi_1 + s d/dphi_2. Below T the cylinder
// {u_1 = u_2 = 1} is invariant and its orbits converge to T.

#include "reeblab/flow.hpp"

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace reeblab {

class TrapConstructionError : public ModelError {
 public:
  TrapConstructionError(const std::string& what, Vec point);
  const Vec& point() const { return point_; }

 private:
  Vec point_;
};

struct TrapParams {
  double slope = 0.70710678118654752;  // s, irrational in intent
  double ball_radius = 3.0;            // H = 1 outside this ball
  double drive = 2.0;                  // dz/dt ~ drive z^2 along the cylinder
  double drive_max = 0.05;             // saturation of the cylinder drive
  double core_height = 0.75;           // the cylinder is invariant for |z| <= core_height
  double fall_height = 1.0;            // cut-off length beyond the core
  double tau_width = 1.0;              // support of the tau cut-off

  void validate() const;
};

class TrapModel {
 public:
  struct Profile;

  const TrapParams& params() const { return params_; }
  double slope() const { return params_.slope; }
  bool flat() const { return flat_; }
  const ContactModel& model() const { return *model_; }
  const ScalarField& hamiltonian() const { return h_; }
  // X_H, with domain the flow box |z| < R, r_1^2 + r_2^2 < R^2.
  const FlowField& field() const { return field_; }
  // K = {|r_1 - 1| <= 1/2, |r_2 - 1| <= 1/2, |z| <= 1/2}, entry face z = -1/2.
  const TrapRegion& region() const { return region_; }

  static Vec torus_point(double phi1, double phi2);
  // d/dphi_1 + s d/dphi_2 at p.
  Vec torus_field(const Vec& p) const;
  static double torus_distance(const Vec& p);

 private:
  friend TrapModel build_trap(const TrapParams&);
  friend TrapModel flat_trap(const TrapParams&);

  TrapParams params_;
  bool flat_ = false;
  std::shared_ptr<const ContactModel> model_;
  ScalarField h_;
  FlowField field_;
  TrapRegion region_;
};

// Throws TrapConstructionError (with the offending point) when H is not
// positive, not 1 outside the ball, or X is not the linear flow on T.
TrapModel build_trap(const TrapParams& params = {});
// H = 1: the unperturbed field d/dz, which traps nothing.
TrapModel flat_trap(const TrapParams& params = {});

struct TrapCheckOptions {
  double horizon = 1e3;
  double tube = 0.1;        // radius of the excluded tube around T
  double min_rise = 0.01;   // required lower bound delta for dz(X)
  int rise_grid = 24;       // points per axis of the (r_1, r_2, z) grid
  int seed_grid = 4;        // per axis, aperiodicity seeds
  double step = 1e-2;
  int jobs = 0;
};

struct TrapCertificate {
  Vec seed;
  double horizon = 0.0;
  std::string region;
  double final_torus_distance = 0.0;
};

struct TrapReport {
  // sampled aperiodicity
  bool aperiodic_ok = false;
  std::size_t seeds = 0;
  std::optional<Vec> periodic_witness;
  // trapped-orbit certificate
  bool certificate_ok = false;
  std::optional<TrapCertificate> certificate;
  // X = d/dz on the flow-box boundary
  bool flow_box_ok = false;
  double flow_box_error = 0.0;
  Vec flow_box_witness;
  // dz(X) >= delta off the tube
  bool rise_ok = false;
  double delta = 0.0;
  Vec rise_witness;
  double tube = 0.0;
  // traversal statistics of the seed grid
  std::size_t exits_top = 0;
  std::size_t trapped = 0;
  std::size_t undetermined = 0;

  bool ok() const { return aperiodic_ok && certificate_ok && flow_box_ok && rise_ok; }
};

TrapReport verify_trap_axioms(const TrapModel& trap, const TrapCheckOptions& options = {});

// --- plug --------------------------------------------------------------------

struct PlugModel {
  TrapModel lower;
  TrapModel upper;       // mirrored into z > 0
  double shift = 2.5;    // the lower trap sits at z = -shift
  double height = 5.0;   // entry face z = -height, exit face z = +height
  FlowField field;
  double gluing_discrepancy = 0.0;  // max |X - d/dz| on z = 0

  static Vec mirror(const Vec& p);  // z -> -z
};

// Lower half: the trap moved to z = -shift; upper half: -Phi_* of the
// (other) trap with Phi(z) = -z. Throws ModelError when either half is not
// d/dz near z = 0 to 1e-10.
PlugModel double_to_plug(const TrapModel& trap, double shift = 2.5, double height = 5.0);
PlugModel double_to_plug(const TrapModel& lower, const TrapModel& upper, double shift = 2.5, double height = 5.0);

enum class PlugOutcome { trapped, matched, mismatched, undetermined };
const char* to_string(PlugOutcome outcome);

struct PlugEntry {
  Vec entry;
  PlugOutcome outcome = PlugOutcome::undetermined;
  Vec exit;
  double exit_time = 0.0;
  double mismatch = 0.0;  // |x_exit - x_entry| in the face coordinates
};

struct PlugGrid {
  int n = 20;
  double r_min = 0.1;
  double r_max = 2.0;
  double phi1 = 0.3;
  double phi2 = 1.1;

  // n x n entry points (r_1, r_2) on the entry face, row-major in r_1.
  std::vector<Vec> points(double height) const;
};

struct PlugReport {
  std::vector<PlugEntry> entries;
  std::size_t trapped = 0;
  std::size_t matched = 0;
  std::size_t mismatched = 0;
  std::size_t undetermined = 0;
  double max_mismatch = 0.0;
  double tolerance = 0.0;
  std::optional<Vec> witness;

  bool ok() const { return mismatched == 0 && undetermined == 0; }
};

// Each entry point is either trapped (stays in the lower copy of K for the
// horizon after entering it) or exits the top face at the same (x_1, y_1,
// x_2, y_2) within tol.
PlugReport verify_plug_matching(const PlugModel& plug, std::span<const Vec> entries, double horizon = 1e3,
                                double tol = 1e-6, double step = 1e-2, int jobs = 0);

// Entry point on z = -height whose orbit lands on the trapped cylinder,
// found by integrating backward from the lower trap's K entry face.
Vec plug_trapped_entry(const PlugModel& plug, double phi1 = 0.0, double phi2 = 0.0, double step = 1e-3);

}  // namespace reeblab
