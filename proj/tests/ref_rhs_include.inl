// -----------------------------------------------------------------------------
// Species-level reference right-hand side: walks the kinetics channel list
// (an independent code path from the node network) and assembles the master
// equation by direct summation.
Eigen::VectorXd reference_rhs(const System& sys, const SpeciesSet& set,
                              const Eigen::VectorXd& y) {
  const MaterialParams& p = sys.params();
  const SystemConfig& cfg = sys.config();
  PhysicsToggles toggles = cfg.toggles;
  auto channels = build_channels(set, p, toggles);
  SinkSet sinks = SinkSet::from(p, toggles.surface_sinks);

  auto u_of = [&](int species) {
    SpeciesKey k = set.key(species);
    return sys.nodes()[sys.node_of(k.family, k.trapped, k.n)].u;
  };
  auto mass_u = [&](int species) {  // terminal bins carry an extra mass unknown
    SpeciesKey k = set.key(species);
    const Node& nd = sys.nodes()[sys.node_of(k.family, k.trapped, k.n)];
    return nd.grouped ? nd.u + 1 : -1;
  };
  auto conc = [&](int species) { return y[u_of(species)]; };

  Eigen::VectorXd out = Eigen::VectorXd::Zero(sys.n_unknowns());

  // production
  double g_total = cfg.dose_rate_dpa_s * p.atomic_density();
  auto g = production_vector(set, cfg.production, g_total);
  for (int i = 0; i < set.size(); ++i) {
    out[u_of(i)] += g[i];
    if (mass_u(i) >= 0) out[mass_u(i)] += set.key(i).n * g[i];
  }

  // mean free paths of 1-D migrants (unique pairs only)
  std::vector<double> lam_inv(set.size(), 0.0);
  std::set<std::pair<int, int>> seen;
  for (const auto& ch : channels) {
    if (ch.law != RateLaw::K1d) continue;
    if (!seen.insert({ch.a, ch.b}).second) continue;
    if (ch.a_1d) lam_inv[ch.a] += ch.sigma * conc(ch.b);
    if (ch.b_1d && ch.b != ch.a) lam_inv[ch.b] += ch.sigma * conc(ch.a);
  }
  for (int i = 0; i < set.size(); ++i) {
    SpeciesKey k = set.key(i);
    if (kinetic_mobility(make_ref(k), p) == MobilityClass::OneD)
      lam_inv[i] += sink_inverse_length_1d(reaction_radius(k, p), sinks);
  }

  const int led_recomb = sys.ledger_unknown(LedgerSlot::Recombined);

  auto deposit = [&](int species, double rate, double true_size) {
    out[u_of(species)] += rate;
    if (mass_u(species) >= 0) out[mass_u(species)] += true_size * rate;
  };
  auto remove = [&](int species, double rate) {
    out[u_of(species)] -= rate;
    if (mass_u(species) >= 0) out[mass_u(species)] -= set.key(species).n * rate;
  };

  for (const auto& ch : channels) {
    SpeciesKey ka = set.key(ch.a);
    switch (ch.kind) {
      case ChannelKind::Absorb3D3D:
      case ChannelKind::AbsorbLoop3D:
      case ChannelKind::React1D: {
        SpeciesKey kb = set.key(ch.b);
        double k;
        if (ch.law == RateLaw::K1d) {
          double da = kinetic_diffusivity(make_ref(ka), p);
          double db = kinetic_diffusivity(make_ref(kb), p);
          k = ch.sigma * ((ch.a_1d ? 2.0 * da * lam_inv[ch.a] : 0.0) +
                          (ch.b_1d ? 2.0 * db * lam_inv[ch.b] : 0.0));
        } else {
          k = ch.k;
        }
        double rate = ch.weight * (ch.a == ch.b ? 0.5 : 1.0) * k * conc(ch.a) * conc(ch.b);
        remove(ch.a, rate);
        remove(ch.b, rate);
        bool opposite = is_interstitial(ka.family) != is_interstitial(kb.family);
        if (opposite) out[led_recomb] += std::min(ka.n, kb.n) * rate;
        double product_size = opposite ? std::abs(ka.n - kb.n) : ka.n + kb.n;
        if (ch.product >= 0) deposit(ch.product, rate, product_size);
        break;
      }
      case ChannelKind::Trap: {
        SpeciesKey kb = set.key(ch.b);
        bool a_trap = is_trap(ka.family);
        SpeciesKey cap = a_trap ? kb : ka;
        int cap_idx = a_trap ? ch.b : ch.a;
        double k;
        if (ch.law == RateLaw::K1d) {
          double d = kinetic_diffusivity(make_ref(cap), p);
          k = ch.sigma * 2.0 * d * lam_inv[cap_idx];
        } else {
          k = ch.k;
        }
        double rate = ch.weight * k * conc(ch.a) * conc(ch.b);
        remove(cap_idx, rate);
        if (ch.to_vacancy_reservoir)
          out[sys.reservoir_unknown(cap.n)] += rate;
        else if (ch.product >= 0)
          deposit(ch.product, rate, cap.n);
        break;
      }
      case ChannelKind::Emit: {
        double rate = ch.k * conc(ch.a);
        remove(ch.a, rate);
        deposit(ch.product, rate, ka.n - 1.0);
        deposit(ch.emitted, rate, 1.0);
        break;
      }
      case ChannelKind::SinkLoss: {
        MobilityClass mob = kinetic_mobility(make_ref(ka), p);
        double d = kinetic_diffusivity(make_ref(ka), p);
        SinkStrengths l = sink_strengths(mob, reaction_radius(ka, p), sinks);
        double z = is_interstitial(ka.family) ? sinks.bias_z : 1.0;
        bool sia = is_interstitial(ka.family);
        double q[3] = {d * z * l.dislocation, d * l.grain_boundary, d * l.surface};
        LedgerSlot slots[3] = {
            sia ? LedgerSlot::SinkDislocationI : LedgerSlot::SinkDislocationV,
            sia ? LedgerSlot::SinkGrainBoundaryI : LedgerSlot::SinkGrainBoundaryV,
            sia ? LedgerSlot::SinkSurfaceI : LedgerSlot::SinkSurfaceV};
        for (int sdx = 0; sdx < 3; ++sdx) {
          double rate = q[sdx] * conc(ch.a);
          remove(ch.a, rate);
          out[sys.ledger_unknown(slots[sdx])] += ka.n * rate;
        }
        break;
      }
      case ChannelKind::Detrap: {
        double rate = ch.k * conc(ch.a);
        remove(ch.a, rate);
        deposit(ch.product, rate, ka.n);
        break;
      }
      default:
        break;
    }
  }

  // reservoir release
  if (toggles.traps) {
    double nu = p.nu_detrap * std::exp(-p.e_detrap / (kBoltzmannEv * p.temperature));
    for (int s = 1; s <= 4; ++s) {
      double rate = nu * y[sys.reservoir_unknown(s)];
      out[sys.reservoir_unknown(s)] -= rate;
      out[u_of(set.index({DefectFamily::VacancyPoint, s, false}))] += rate;
    }
  }

  // cascade overlap
  if (toggles.cascade_overlap && cfg.overlap.f_ol > 0.0) {
    double fol = cfg.overlap.f_ol;
    for (int n = 4; n <= set.n_max_interstitial(); ++n) {
      int f111 = set.index({DefectFamily::Loop111, n, false});
      int t111 = set.index({DefectFamily::Loop111, n, true});
      int l100 = set.index({DefectFamily::Loop100, n, false});
      double gain = cfg.overlap.f_111_to_100 * fol * conc(l100);
      double loss_f = cfg.overlap.f_100_to_111 * fol * conc(f111);
      double loss_t = cfg.overlap.f_100_to_111 * fol * conc(t111);
      deposit(f111, gain, n);
      remove(l100, gain);
      remove(f111, loss_f);
      remove(t111, loss_t);
      deposit(l100, loss_f + loss_t, n);
    }
    int v1 = set.index({DefectFamily::VacancyPoint, 1, false});
    for (int n = 5; n <= set.n_max_vacancy(); ++n) {
      int v = set.index({DefectFamily::Void, n, false});
      double rate = cfg.overlap.f_void * fol * conc(v);
      remove(v, rate);
      out[u_of(v1)] += n * rate;
    }
  }
  return out;
}

