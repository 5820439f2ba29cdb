#pragma once

#include <optional>
#include <span>
#include <vector>

#include "wcd/energetics.hpp"
#include "wcd/materials.hpp"
#include "wcd/species.hpp"

namespace wcd {

// Physics switches for the model studies. Defaults match the baseline:
// cascade overlap on, traps on, loop reaction on, surface sinks off (bulk).
struct PhysicsToggles {
  bool cascade_overlap = true;
  bool traps = true;
  bool loop_reaction = true;
  bool surface_sinks = false;
};

// --- rate coefficient formulas -------------------------------------------

// 3-D/3-D absorption, k = 4 pi (D_y + D_x)(r_y + r_x), m^3/s.
double absorb_3d3d(double d_y, double d_x, double r_y, double r_x);

// Absorption of a 3-D migrant by a toroidal loop:
//   alpha = (1 + (r_loop / (3 (r_x + r_d)))^2)^-1
//   z_V = 4 pi (r_loop + r_x + r_d)
//   z_L = 4 pi^2 r_loop / ln(1 + 8 r_loop / (r_x + r_d))
//   k = (D_y + D_x) ((1 - alpha) z_L + alpha z_V)
double absorb_loop_3d(double d_y, double d_x, double r_loop, double r_x, double r_d);

// Reaction cross-section sigma = pi (r_y + r_x + r_d)^2; the dislocation
// capture radius r_d is added only when a loop is part of the pair.
double cross_section(double r_y, double r_x, double r_d_if_loop);
double cross_section(const SpeciesKey& y, const SpeciesKey& x, const MaterialParams& p);

// Mean free path of a 1-D migrant: lambda^-1 = sum sigma_i C_i plus sink
// terms already expressed as inverse lengths. Returns +inf when empty.
double mean_free_path(std::span<const double> sigmas, std::span<const double> concentrations,
                      double sink_inverse_length);

// 1-D reaction rate k = 2 D_y sigma / lambda_y; lambda = +inf gives 0.
double react_1d(double d_y, double sigma, double lambda_y);

// --- sinks ----------------------------------------------------------------

struct SinkSet {
  double rho_d = 5.0e12;      // dislocation density (1/m^2)
  double r_d = 0.65e-9;       // dislocation capture radius (m)
  double bias_z = 1.2;        // applied to the dislocation term, interstitials only
  double grain_radius = 1.5e-6;
  bool surface_enabled = false;
  double thickness = 4.0e-3;
  double migration_angle = 0.0;

  static SinkSet from(const MaterialParams& p, bool surface_on);
};

struct SinkStrengths {
  double dislocation = 0.0;     // m^-2, without bias
  double grain_boundary = 0.0;  // m^-2
  double surface = 0.0;         // m^-2

  double total(double dislocation_bias) const {
    return dislocation_bias * dislocation + grain_boundary + surface;
  }
};

// Sink strengths for a migrating defect of the given radius. 1-D migrants:
// L_dl = 2 (pi (r_d + r) rho_d)^2, L_GB = 15 / R^2, L_surf = 8 cos^2(phi)/l^2.
// 3-D migrants use the logarithmic dislocation form with
// rho = (r_d + r) sqrt(pi rho_d) (throws std::domain_error when rho >= 1),
// L_GB = 14.4 / R^2, L_surf = 2 / l^2. Immobile species get all zeros.
SinkStrengths sink_strengths(MobilityClass mobility, double radius, const SinkSet& sinks);

// Inverse-length sink contribution to a 1-D migrant's mean free path:
// sqrt(L) summed over the enabled sinks (unbiased).
double sink_inverse_length_1d(double radius, const SinkSet& sinks);

// --- pair topology ---------------------------------------------------------

// A species reference with a real-valued size so group representatives can
// reuse the same classification as exact species.
struct SpeciesRef {
  DefectFamily family = DefectFamily::SiaPoint;
  bool trapped = false;
  double n = 1.0;
};

SpeciesRef make_ref(const SpeciesKey& key);

// Mobility as seen by the long-range reaction kinetics. Trapped 1/2<111>
// loops are kinetically immobile unless the configuration routes their
// trap-mediated diffusivity into the 1-D rates.
MobilityClass kinetic_mobility(const SpeciesRef& ref, const MaterialParams& p);
double kinetic_diffusivity(const SpeciesRef& ref, const MaterialParams& p);

enum class RateLaw { K3d3d, KLoop3d, K1d };

enum class ChannelKind {
  Absorb3D3D,
  AbsorbLoop3D,
  React1D,
  Emit,
  SinkLoss,
  Trap,
  Detrap,
  OverlapTransform,  // built by the source terms, not the pair network
};

struct ProductRef {
  enum class Kind { None, Cluster, VacancyReservoir } kind = Kind::None;
  DefectFamily family = DefectFamily::SiaPoint;
  bool trapped = false;
  double n = 0.0;
};

struct PairBranch {
  double weight = 1.0;
  ProductRef product;
};

struct PairReaction {
  RateLaw law = RateLaw::K3d3d;
  ChannelKind kind = ChannelKind::Absorb3D3D;
  int loop_side = -1;  // KLoop3d: 0 if a is the loop, 1 if b
  bool a_1d = false;   // K1d: which sides migrate one-dimensionally
  bool b_1d = false;
  std::vector<PairBranch> branches;  // weights sum to 1
};

// Reaction topology for an unordered pair. `same_entity` marks a pair of one
// population with itself (equal-size 1/2<111> variant reactions; the driver
// must apply the 1/2 k C^2 same-species rate). Returns nullopt when the pair
// does not react. `loop100_mobile` reflects the optional <100> mobility
// override.
std::optional<PairReaction> classify_pair(const SpeciesRef& a, const SpeciesRef& b,
                                          bool same_entity, const PhysicsToggles& toggles,
                                          bool loop100_mobile);

// Survivor of a signed interstitial/vacancy balance: net > 0 keeps the
// interstitial reactant's family (dropping to SiaPoint at n <= 3), net < 0
// keeps the vacancy side (VacancyPoint at n <= 4, Void above), net == 0
// annihilates.
ProductRef resolve_signed_product(double net, const SpeciesRef& interstitial_side,
                                  const SpeciesRef& vacancy_side);

// State-independent part of a pair's rate coefficient (diffusivities and
// radii at the parameter temperature). For K1d this is the cross-section
// only; the mean-free-path factors are state dependent.
double pair_rate_coefficient(const PairReaction& rx, const SpeciesRef& a, const SpeciesRef& b,
                             const MaterialParams& p);

// Emission coefficient of cluster y shedding the given monomer (I1 or V1):
// g = (1/Omega) k_{y-1} exp(-E_b / k_B T) with k_{y-1} the absorption
// coefficient of the shrunken cluster for the monomer.
double emission_rate(const SpeciesRef& y, const MaterialParams& p,
                     const PhysicsToggles& toggles);

// The shrunken-cluster reference after y emits its monomer (family floors:
// loops/C15 re-enter SiaPoint below n=4, voids re-enter VacancyPoint below
// n=5). Returns nullopt when y cannot emit (monomers, C15, traps).
std::optional<SpeciesRef> emission_remainder(const SpeciesRef& y);

// --- species-level channel list ---------------------------------------------

struct ReactionChannel {
  ChannelKind kind = ChannelKind::Absorb3D3D;
  RateLaw law = RateLaw::K3d3d;
  int a = -1;          // species index
  int b = -1;          // partner species index, -1 for unary kinds
  int product = -1;    // species index, -1 for none
  int emitted = -1;    // monomer species index for Emit
  bool to_vacancy_reservoir = false;
  bool clamped = false;  // product past the axis cap, absorbed by the terminal bin
  double weight = 1.0;
  double k = 0.0;      // cached coefficient: rate constant, emission g, D*L, detrap nu
  double sigma = 0.0;  // K1d cross-section
  bool a_1d = false;
  bool b_1d = false;
};

// Full reaction network over an exact species set: pair reactions, emission,
// sink losses, trap capture and detrapping. Deterministic order.
std::vector<ReactionChannel> build_channels(const SpeciesSet& species, const MaterialParams& p,
                                            const PhysicsToggles& toggles);

}  // namespace wcd
