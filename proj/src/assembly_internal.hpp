#pragma once

// Internal channel representation shared by the assembly translation units.

#include "wcd/assembly.hpp"

namespace wcd {

struct System::K1dPair {
  int a = -1, b = -1;
  bool a_1d = false, b_1d = false;
  double r_extra = 0.0;  // r_d when a loop takes part
};

struct System::Channel {
  ChannelKind kind = ChannelKind::Absorb3D3D;
  RateLaw law = RateLaw::K3d3d;
  enum class Apply {
    Pair,
    Shift,
    EmitExact,
    EmitGroup,
    Sink,
    VacCapture,
    LoopDetrap,
    ReservoirDetrap
  } apply = Apply::Pair;

  int a = -1, b = -1;
  double weight = 1.0;
  bool same = false;
  bool a_1d = false, b_1d = false;
  int pair_id = -1;
  int loop_side = -1;

  ProductRef::Kind pkind = ProductRef::Kind::None;
  DefectFamily prod_family = DefectFamily::SiaPoint;
  bool prod_trapped = false;
  bool signed_product = false;
  int int_side = -1;

  int shift = 0;
  double recomb = 0.0;

  bool k_static = false;
  double k0 = 0.0;

  int emit_mono_u = -1;
  int product_node = -1;  // EmitExact remainder node
  int reservoir_slot = -1;
  int twin = -1;
  bool side_interstitial = true;
};


}  // namespace wcd
