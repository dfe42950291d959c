#pragma once

#include <cstdint>

#include "nw/tensor.hpp"

namespace nw {

// Geometry of one synthetic "face": an elliptical head with eyes, brows and
// a mouth, all drawn with smooth falloffs. Identity fixes the base geometry;
// the expression class bends it by an amount that scales linearly with the
// intensity t, so t = 0 is the same neutral face for every class and nearby
// t values are genuine semantic neighbors.
struct FaceIdentity {
  double head_rx, head_ry;
  double eye_dx, eye_y, eye_rx, eye_ry;
  double brow_y, brow_len;
  double mouth_y, mouth_w;
  double face_tone;  // brightness of the head region

  // deterministic geometry for an identity index under a dataset seed
  static FaceIdentity make(int identity, uint64_t seed);
};

struct RenderNuisance {
  double illumination = 0.0;  // additive brightness offset
  double shift_x = 0.0;       // translation in pixels
  double shift_y = 0.0;
};

// Renders class `cls` (0..6) at expression intensity t in [0,1].
// Output is [1, side, side] with values in [0,1].
Tensor render_face(int cls, double t, const FaceIdentity& id,
                   const RenderNuisance& nuisance, int side);

}  // namespace nw
