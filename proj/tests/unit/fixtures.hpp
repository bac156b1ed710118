#pragma once

#include <vector>

#include "crpslab/dataset.hpp"
#include "crpslab/distributions.hpp"
#include "crpslab/rng.hpp"

namespace crpslab::fixture {

/// Random discrete law on `atoms` points in [-5, 5] with strictly positive weights.
inline WeightedEmpirical random_empirical(Rng& rng, std::size_t atoms) {
  std::vector<double> a(atoms);
  std::vector<double> w(atoms);
  double total = 0.0;
  for (std::size_t i = 0; i < atoms; ++i) {
    a[i] = rng.uniform(-5.0, 5.0);
    w[i] = 0.05 + rng.uniform();
    total += w[i];
  }
  for (double& v : w) v /= total;
  return WeightedEmpirical(std::move(a), std::move(w));
}

inline GaussianLS random_gaussian(Rng& rng) { return GaussianLS(rng.uniform(-3.0, 3.0), rng.uniform(0.2, 3.0)); }

inline Dataset make_dataset(std::vector<std::vector<double>> rows, std::vector<double> y) {
  Dataset d;
  d.x = Matrix(0, rows.empty() ? 0 : rows.front().size());
  for (const auto& r : rows) d.x.append_row(r);
  d.y = std::move(y);
  return d;
}

}  // namespace crpslab::fixture
