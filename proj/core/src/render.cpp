#include "nw/render.hpp"

#include <algorithm>
#include <cmath>

#include "nw/common.hpp"
#include "nw/rng.hpp"

namespace nw {

namespace {

inline double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// soft ellipse membership, ~1 inside, smooth edge
inline double ellipse(double u, double v, double cx, double cy, double rx,
                      double ry, double soft) {
  const double du = (u - cx) / rx;
  const double dv = (v - cy) / ry;
  const double rho = std::sqrt(du * du + dv * dv);
  return logistic((1.0 - rho) / soft);
}

inline double sq(double x) { return x * x; }

// soft capsule around the segment (x0,y0)-(x1,y1)
double capsule(double u, double v, double x0, double y0, double x1, double y1,
               double thick, double soft) {
  const double dx = x1 - x0, dy = y1 - y0;
  const double len2 = dx * dx + dy * dy;
  double s = len2 > 0 ? ((u - x0) * dx + (v - y0) * dy) / len2 : 0.0;
  s = std::clamp(s, 0.0, 1.0);
  const double d = std::sqrt(sq(u - (x0 + s * dx)) + sq(v - (y0 + s * dy)));
  return logistic((thick - d) / soft);
}

struct Expression {
  double mouth_curve = 0.0;  // >0 curls the corners up
  double mouth_open = 0.0;   // open-mouth ellipse half height
  double mouth_wmul = 1.0;
  double eye_mul = 1.0;
  double brow_dy_l = 0.0, brow_dy_r = 0.0;
  double brow_tilt_l = 0.0, brow_tilt_r = 0.0;  // inner-end drop
  double brow_in = 0.0;                         // brows pushed toward the nose
  double corner_dl = 0.0, corner_dr = 0.0;      // per-corner vertical offsets
};

// Every term scales linearly with t, so t=0 is the shared neutral face.
Expression expression_for(int cls, double t) {
  Expression e;
  switch (cls) {
    case 0:  // smile
      e.mouth_curve = 0.065 * t;
      break;
    case 1:  // frown with knitted brows
      e.mouth_curve = -0.055 * t;
      e.brow_tilt_l = e.brow_tilt_r = 0.35 * t;
      break;
    case 2:  // gape: open mouth, widened eyes
      e.mouth_open = 0.075 * t;
      e.eye_mul = 1.0 + 0.75 * t;
      break;
    case 3:  // squint with a widened flat mouth
      e.eye_mul = 1.0 - 0.65 * t;
      e.mouth_wmul = 1.0 + 0.45 * t;
      break;
    case 4:  // raised brows, slightly parted mouth
      e.brow_dy_l = e.brow_dy_r = -0.07 * t;
      e.mouth_open = 0.035 * t;
      break;
    case 5:  // asymmetric smirk
      e.corner_dl = -0.06 * t;
      e.corner_dr = 0.035 * t;
      e.brow_dy_l = -0.05 * t;
      break;
    case 6:  // pucker: narrow mouth, brows in, drooping eyes
      e.mouth_wmul = 1.0 - 0.55 * t;
      e.mouth_open = 0.04 * t;
      e.brow_in = 0.04 * t;
      e.eye_mul = 1.0 - 0.30 * t;
      break;
    default:
      throw Error(cat("render_face: class ", cls, " outside the supported 0..6"));
  }
  return e;
}

}  // namespace

FaceIdentity FaceIdentity::make(int identity, uint64_t seed) {
  Rng r(Rng::derive(seed, cat("identity/", identity)));
  FaceIdentity id;
  id.head_rx = r.uniform(0.30, 0.38);
  id.head_ry = r.uniform(0.36, 0.44);
  id.eye_dx = r.uniform(0.13, 0.17);
  id.eye_y = r.uniform(0.37, 0.43);
  id.eye_rx = r.uniform(0.045, 0.060);
  id.eye_ry = r.uniform(0.035, 0.050);
  id.brow_y = r.uniform(0.27, 0.32);
  id.brow_len = r.uniform(0.09, 0.12);
  id.mouth_y = r.uniform(0.64, 0.70);
  id.mouth_w = r.uniform(0.13, 0.18);
  id.face_tone = r.uniform(0.46, 0.62);
  return id;
}

Tensor render_face(int cls, double t, const FaceIdentity& id,
                   const RenderNuisance& nuisance, int side) {
  check(side > 0, "render_face: side must be positive");
  check(t >= 0.0 && t <= 1.0, cat("render_face: intensity ", t, " outside [0,1]"));
  const Expression e = expression_for(cls, t);

  // mouth curve sampled once; distances to the polyline approximate the
  // smooth curve well at this resolution
  constexpr int kMouthSamples = 25;
  double mx[kMouthSamples], my[kMouthSamples];
  const double half_w = id.mouth_w * e.mouth_wmul;
  for (int i = 0; i < kMouthSamples; ++i) {
    const double s = static_cast<double>(i) / (kMouthSamples - 1);
    mx[i] = 0.5 + half_w * (2.0 * s - 1.0);
    my[i] = id.mouth_y + e.mouth_curve * (4.0 * s * (1.0 - s) - 0.5) +
            e.corner_dl * (1.0 - s) + e.corner_dr * s;
  }

  const double brow_half = id.brow_len * 0.5;
  const double lx = 0.5 - id.eye_dx + e.brow_in;
  const double rx = 0.5 + id.eye_dx - e.brow_in;

  Tensor img = Tensor::uninit({1, side, side});
  for (int py = 0; py < side; ++py) {
    for (int px = 0; px < side; ++px) {
      const double u = (px + 0.5 - nuisance.shift_x) / side;
      const double v = (py + 0.5 - nuisance.shift_y) / side;

      double val = 0.12 + nuisance.illumination;
      val += id.face_tone * ellipse(u, v, 0.5, 0.5, id.head_rx, id.head_ry, 0.02);

      const double eye_ry = std::max(id.eye_ry * e.eye_mul, 1e-4);
      val -= 0.38 * ellipse(u, v, 0.5 - id.eye_dx, id.eye_y, id.eye_rx, eye_ry, 0.015);
      val -= 0.38 * ellipse(u, v, 0.5 + id.eye_dx, id.eye_y, id.eye_rx, eye_ry, 0.015);

      // brows: outer end fixed, inner end tilts down when knitted
      val -= 0.30 * capsule(u, v, lx - brow_half, id.brow_y + e.brow_dy_l,
                            lx + brow_half,
                            id.brow_y + e.brow_dy_l + e.brow_tilt_l * id.brow_len,
                            0.010, 0.011);
      val -= 0.30 * capsule(u, v, rx - brow_half,
                            id.brow_y + e.brow_dy_r + e.brow_tilt_r * id.brow_len,
                            rx + brow_half, id.brow_y + e.brow_dy_r, 0.010, 0.011);

      // mouth line
      double d2 = 1e18;
      for (int i = 0; i < kMouthSamples; ++i)
        d2 = std::min(d2, sq(u - mx[i]) + sq(v - my[i]));
      val -= 0.42 * logistic((0.012 - std::sqrt(d2)) / 0.012);

      if (e.mouth_open > 1e-9) {
        val -= 0.34 * ellipse(u, v, 0.5, id.mouth_y + e.mouth_open * 0.6,
                              half_w * 0.8, e.mouth_open, 0.02);
      }

      img[static_cast<int64_t>(py) * side + px] = std::clamp(val, 0.0, 1.0);
    }
  }
  return img;
}

}  // namespace nw
