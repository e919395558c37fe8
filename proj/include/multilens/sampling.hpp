#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "multilens/ensemble.hpp"
#include "multilens/errors.hpp"
#include "multilens/solver.hpp"

namespace multilens {

// Sweep sampling distributions. Fixed here so that a (seed, trial) pair
// reproduces the same ensemble on every platform that implements
// mt19937_64 and the basic <random> distributions identically:
//   masses     log-uniform on [0.1, 2]
//   positions  uniform on the unit disk (rejection from the square)
//   betas      uniform on [0.2, 1.5]
//   source     uniform on the disk of radius 2 about the mass centroid
struct sample_params {
  int max_planes = 3;
  int max_masses_per_plane = 3;
  double mass_lo = 0.1;
  double mass_hi = 2.0;
  double beta_lo = 0.2;
  double beta_hi = 1.5;
  double source_radius = 2.0;
};

namespace detail {

inline cplx unit_disk(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (;;) {
    const cplx z(u(rng), u(rng));
    if (std::norm(z) <= 1.0) return z;
  }
}

}  // namespace detail

inline std::mt19937_64 trial_rng(uint64_t seed, uint64_t trial) {
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                    static_cast<uint32_t>(trial), static_cast<uint32_t>(trial >> 32)};
  return std::mt19937_64(seq);
}

// One random ensemble. Mass positions inside a plane are resampled until
// pairwise separated by 1e-3 so the ensemble never starts out degenerate.
inline ensemble sample_ensemble(std::mt19937_64& rng, const sample_params& par = {}) {
  std::uniform_int_distribution<int> nplanes(1, par.max_planes);
  std::uniform_int_distribution<int> nmasses(1, par.max_masses_per_plane);
  std::uniform_real_distribution<double> logm(std::log(par.mass_lo), std::log(par.mass_hi));
  std::uniform_real_distribution<double> beta(par.beta_lo, par.beta_hi);
  const int k = nplanes(rng);
  std::vector<plane> planes;
  for (int i = 0; i < k; ++i) {
    plane pl;
    const int g = nmasses(rng);
    for (int l = 0; l < g; ++l) {
      pl.masses.push_back(std::exp(logm(rng)));
      for (;;) {
        const cplx y = detail::unit_disk(rng);
        bool clear = true;
        for (cplx prev : pl.positions)
          if (std::abs(y - prev) < 1e-3) clear = false;
        if (clear) {
          pl.positions.push_back(y);
          break;
        }
      }
    }
    planes.push_back(std::move(pl));
  }
  std::vector<std::vector<double>> betas;
  for (int i = 2; i <= k; ++i) {
    std::vector<double> row;
    for (int j = 1; j < i; ++j) row.push_back(beta(rng));
    betas.push_back(std::move(row));
  }
  return ensemble(std::move(planes), std::move(betas));
}

inline cplx sample_source(std::mt19937_64& rng, const ensemble& ens,
                          const sample_params& par = {}) {
  cplx centroid = 0.0;
  double total = 0.0;
  for (const plane& pl : ens.planes())
    for (size_t l = 0; l < pl.masses.size(); ++l) {
      centroid += pl.masses[l] * pl.positions[l];
      total += pl.masses[l];
    }
  if (total > 0) centroid /= total;
  return centroid + par.source_radius * detail::unit_disk(rng);
}

struct generic_case {
  ensemble ens;
  cplx w;
  genericity_report gen;
  int resamples = 0;  // sources rejected before this one passed
};

// Sample an ensemble, then resample the source until the genericity check
// passes. The ensemble itself is redrawn if no generic source is found.
inline generic_case sample_generic_case(std::mt19937_64& rng,
                                        const sample_params& par = {},
                                        const solve_tolerances& tol = {},
                                        int max_source_tries = 12,
                                        int max_ensemble_tries = 8) {
  int resamples = 0;
  for (int e = 0; e < max_ensemble_tries; ++e) {
    ensemble ens = sample_ensemble(rng, par);
    for (int s = 0; s < max_source_tries; ++s) {
      const cplx w = sample_source(rng, ens, par);
      genericity_report gen = genericity_check(ens, w, tol);
      if (gen.pass) return {std::move(ens), w, std::move(gen), resamples};
      ++resamples;
    }
  }
  throw non_generic_error("no generic (ensemble, source) pair found after " +
                          std::to_string(resamples) + " source draws");
}

}  // namespace multilens
