#include "cretok/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cretok/error.hpp"

namespace cretok::optim {

namespace {

struct Dots {
  double ab = 0.0, aa = 0.0, bb = 0.0;
};

Dots dots(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "cosine of vectors with " + std::to_string(a.size()) + " and " + std::to_string(b.size()) +
                    " entries");
  }
  Dots d;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d.ab += a[i] * b[i];
    d.aa += a[i] * a[i];
    d.bb += b[i] * b[i];
  }
  if (d.aa == 0.0 || d.bb == 0.0) throw Error(ErrorCode::kZeroNorm, "cosine of a zero-norm vector");
  return d;
}

}  // namespace

double cosine_sim(std::span<const double> a, std::span<const double> b) {
  const Dots d = dots(a, b);
  const double c = d.ab / (std::sqrt(d.aa) * std::sqrt(d.bb));
  return std::clamp(c, -1.0, 1.0);
}

double mix_loss(std::span<const double> a, std::span<const double> b) { return 1.0 - cosine_sim(a, b); }

double clamped_mix_loss(std::span<const double> a, std::span<const double> b, double theta) {
  if (!(theta >= 0.0 && theta <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "theta must lie in [0, 1]");
  return 1.0 - std::min(cosine_sim(a, b), theta);
}

std::vector<double> cosine_grad(std::span<const double> a, std::span<const double> b) {
  const Dots d = dots(a, b);
  const double na = std::sqrt(d.aa);
  const double nb = std::sqrt(d.bb);
  const double c = d.ab / (na * nb);
  std::vector<double> g(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) g[i] = b[i] / (na * nb) - c * a[i] / d.aa;
  return g;
}

}  // namespace cretok::optim
