#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "wcd/grouping.hpp"
#include "wcd/kinetics.hpp"
#include "wcd/materials.hpp"
#include "wcd/source.hpp"
#include "wcd/species.hpp"

namespace wcd {

struct SystemConfig {
  int n_max_interstitial = 50000;
  int n_max_vacancy = 500000;
  GroupScheme scheme = GroupScheme::exact_only();
  PhysicsToggles toggles;
  ProductionSpec production;
  OverlapSpec overlap;
  double dose_rate_dpa_s = 0.0;
  // Group bins below this density relax their representative size toward the
  // bin midpoint; keeps coefficient evaluation quiet on near-empty bins.
  double group_floor = 1e8;  // m^-3

  std::string validate() const;
};

// One bin of the unknown vector: an exact size (one concentration unknown)
// or a group carrying total density N and total defect mass M. The last bin
// of every extended-cluster axis is a group so the absorbing cap keeps mass
// accounting exact.
struct Node {
  DefectFamily family = DefectFamily::SiaPoint;
  bool trapped = false;
  int lo = 1;
  int hi = 1;
  bool grouped = false;
  bool terminal = false;
  int u = -1;  // first unknown index; grouped nodes also own u+1 (mass)

  int width() const { return hi - lo + 1; }
};

struct StateVector {
  double time = 0.0;
  double dose = 0.0;
  Eigen::VectorXd y;
};

// Cumulative bookkeeping integrated alongside the concentrations.
enum class LedgerSlot {
  SinkDislocationI,
  SinkDislocationV,
  SinkGrainBoundaryI,
  SinkGrainBoundaryV,
  SinkSurfaceI,
  SinkSurfaceV,
  Recombined,  // interstitial-vacancy pairs annihilated (defects per side)
  Count,
};

struct MassReport {
  double produced_interstitial = 0.0;
  double produced_vacancy = 0.0;
  double in_state_interstitial = 0.0;
  double in_state_vacancy = 0.0;
  double sinks_interstitial = 0.0;
  double sinks_vacancy = 0.0;
  double recombined = 0.0;
  double terminal_fraction_interstitial = 0.0;
  double terminal_fraction_vacancy = 0.0;

  double closure_error_interstitial() const;
  double closure_error_vacancy() const;
};

// The assembled right-hand side of the master equation over the (possibly
// grouped) bin layout, with its analytical Jacobian. Evaluation uses internal
// scratch buffers; a System instance must not be shared across threads.
class System {
 public:
  System(const MaterialParams& params, const SystemConfig& config);
  ~System();
  System(const System&) = delete;
  System& operator=(const System&) = delete;
  System(System&&) noexcept;
  System& operator=(System&&) noexcept;

  int n_unknowns() const { return n_unknowns_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  const MaterialParams& params() const { return params_; }
  const SystemConfig& config() const { return cfg_; }

  // Bin lookup on a family axis (clamped to the terminal bin past the cap).
  int node_of(DefectFamily family, bool trapped, double n) const;
  int reservoir_unknown(int n_vacancies) const;  // 1..4
  int ledger_unknown(LedgerSlot slot) const;

  Eigen::VectorXd initial_state() const;

  void rhs(const Eigen::VectorXd& y, Eigen::VectorXd& dydt) const;
  void jacobian(const Eigen::VectorXd& y, Eigen::MatrixXd& jac) const;

  // Structural sparsity: true where the analytical Jacobian can be nonzero.
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> sparsity_pattern() const;

  // Per-bin density/mass and aggregates used by the analysis layer.
  double bin_count(const Eigen::VectorXd& y, int node) const;
  double bin_mass(const Eigen::VectorXd& y, int node) const;
  double bin_mean_size(const Eigen::VectorXd& y, int node) const;
  double family_density(const Eigen::VectorXd& y, DefectFamily family, int trapped) const;
  double family_mass(const Eigen::VectorXd& y, DefectFamily family, int trapped) const;

  MassReport mass_report(const StateVector& state) const;

  // 1/2<111> x <100> reaction flows for the SIA-transfer diagnostics: each
  // entry is one K1d cross-loop channel evaluated at the given state.
  struct LoopExchange {
    double n_111 = 0.0;   // representative sizes
    double n_100 = 0.0;
    double rate = 0.0;    // events / m^3 / s
    int winner_111 = 0;   // 1 when the product keeps the 1/2<111> vector
    double weight = 1.0;
  };
  std::vector<LoopExchange> loop_exchange_rates(const Eigen::VectorXd& y) const;

  // Inverse mean free path of a 1-D migrant node at the given state (for
  // tests and diagnostics).
  double inverse_mean_free_path(const Eigen::VectorXd& y, int node) const;

  double dose_rate() const { return cfg_.dose_rate_dpa_s; }
  double produced_rate_per_side() const;  // defects/m^3/s on each axis

 private:
  struct Channel;
  struct K1dPair;
  // Per-unit-rate deposit shares; `mass` entries apply to grouped targets.
  struct Deposit {
    int node = -1;
    double count = 0.0;
    double dcount_dp = 0.0;
    double mass = 0.0;
    double dmass_dp = 0.0;
  };

  void build_axes();
  void build_channels();
  void build_overlap_maps();
  void refresh_node_state(const Eigen::VectorXd& y) const;
  void eval(const Eigen::VectorXd& y, Eigen::VectorXd* dydt, Eigen::MatrixXd* jac) const;

  // helpers used during evaluation
  void deposit_cluster(DefectFamily family, bool trapped, double size, Deposit out[2]) const;
  void emission_coeff_grad(DefectFamily family, bool trapped, double n, double& g,
                           double& dg_dn) const;

  MaterialParams params_;
  SystemConfig cfg_;
  SinkSet sinks_;
  int n_unknowns_ = 0;
  std::vector<Node> nodes_;
  // per-axis bin starts: axis id -> node ids ascending in size
  struct Axis {
    DefectFamily family;
    bool trapped;
    std::vector<int> node_ids;
    std::vector<int> lows;  // parallel array for binary search
  };
  std::vector<Axis> axes_;
  int axis_index(DefectFamily family, bool trapped) const;

  int trap_node_i_ = -1, trap_node_t_ = -1;
  int reservoir_u0_ = -1;
  int ledger_u0_ = -1;

  std::vector<Channel> channels_;
  std::vector<K1dPair> k1d_pairs_;
  std::vector<int> mover_nodes_;           // nodes with 1-D kinetics
  std::vector<int> mover_slot_;            // node id -> mover slot or -1
  std::vector<std::vector<int>> mover_pairs_;  // mover slot -> pair ids

  Eigen::VectorXd production_;             // per-unknown source
  double produced_rate_per_side_ = 0.0;
  // overlap maps: (node_111, node_100) aligned bins, and void node list
  std::vector<std::pair<int, int>> overlap_loop_bins_;  // free 111 <-> 100
  std::vector<std::pair<int, int>> overlap_trapped_bins_;
  std::vector<int> overlap_void_bins_;
  int v1_unknown_ = -1;

  // scratch (rebuilt at every evaluation)
  mutable std::vector<double> ns_count_, ns_mass_, ns_rep_, ns_radius_, ns_diff_,
      ns_ddiff_dn_, ns_drad_dn_, ns_creg_;
  mutable std::vector<double> lambda_inv_, dlambda_dn_;
  mutable std::vector<double> pair_sigma_, pair_dsig_da_, pair_dsig_db_;
  mutable Eigen::MatrixXd lam_acc_;
};

}  // namespace wcd
