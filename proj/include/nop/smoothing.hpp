#pragma once

#include "nop/types.hpp"

namespace nop {

struct SmoothResult {
  Vec smoothed;
  double lambda;
};

/// Penalized least squares on a uniform grid: minimize |y - x|^2 + lambda*|D2 x|^2,
/// solved in the DCT-II eigenbasis of the reflective second-difference penalty
/// after removing the LS line (reattached afterwards, so linear trends pass
/// through exactly). lambda chosen by generalized cross-validation on a log
/// grid; one bisquare reweighting pass when robust. Records of length < 8 are
/// returned unchanged.
SmoothResult smooth_penalized(const Vec& y, bool robust = true);

/// Orthonormal DCT-II and its inverse.
Vec dct2(const Vec& y);
Vec idct2(const Vec& c);

} // namespace nop
