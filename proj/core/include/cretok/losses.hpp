#pragma once

#include <span>
#include <vector>

namespace cretok::optim {

/// a.b / (|a||b|). Throws kZeroNorm or kDimensionMismatch.
double cosine_sim(std::span<const double> a, std::span<const double> b);

/// 1 - cos(a, b), in [0, 2].
double mix_loss(std::span<const double> a, std::span<const double> b);

/// 1 - min(cos(a, b), theta). Floor 1 - theta once cos >= theta.
double clamped_mix_loss(std::span<const double> a, std::span<const double> b, double theta);

/// d cos(a, b) / d a.
std::vector<double> cosine_grad(std::span<const double> a, std::span<const double> b);

}  // namespace cretok::optim
