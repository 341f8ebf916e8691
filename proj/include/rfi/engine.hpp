#pragma once

// Random function iterations: X_{k+1} = T_{xi_k} X_k with i.i.d. indices.
//
// Randomness is counter based. The index used by particle p at step k is a
// pure function of (seed, p, k), so trajectories are bit-identical for any
// number of workers.

#include <cstdint>
#include <vector>

#include "rfi/errors.hpp"
#include "rfi/geometry.hpp"
#include "rfi/operators.hpp"
#include "rfi/parallel.hpp"
#include "rfi/random.hpp"
#include "rfi/transport.hpp"

namespace rfi {

enum class NoiseMode {
  independent, // every particle has its own index stream
  common,      // all particles share xi_k (variance-reduction studies only)
};

inline constexpr std::uint64_t kCommonNoiseStream = std::uint64_t{1} << 63;

/// Index drawn at step k by the given stream.
template <GeodesicSpace S>
std::size_t draw_index(const OperatorFamily<S>& family, const CounterRng& rng, std::uint64_t stream,
                       std::uint64_t step) {
  return family.sample(rng.uniform(stream, step));
}

/// The path x_0, T_{i_0} x_0, ..., of length K + 1 (stream 0 of `seed`).
template <GeodesicSpace S>
std::vector<typename S::Point> run_chain(const OperatorFamily<S>& family, const typename S::Point& x0,
                                         std::size_t K, std::uint64_t seed) {
  family.space().validate(x0);
  const CounterRng rng(seed);
  std::vector<typename S::Point> path;
  path.reserve(K + 1);
  path.push_back(x0);
  for (std::size_t k = 0; k < K; ++k) path.push_back(family.apply(path.back(), draw_index(family, rng, 0, k)));
  return path;
}

template <GeodesicSpace S>
struct ChainConfig {
  OperatorFamily<S> family;
  Ensemble<S> initial;
  std::size_t iterations = 0;
  std::uint64_t seed = 0;
  std::size_t record_every = 1;
  unsigned workers = 1;
  NoiseMode noise = NoiseMode::independent;
};

template <GeodesicSpace S>
struct RecordedStep {
  std::size_t step = 0;
  Ensemble<S> ensemble;
};

template <GeodesicSpace S>
struct Trajectory {
  std::vector<RecordedStep<S>> steps;
  std::uint64_t seed = 0;

  const Ensemble<S>& final_ensemble() const { return steps.back().ensemble; }
};

/// Steps at which a run of K iterations records: multiples of record_every, and K.
inline std::vector<std::size_t> recorded_steps(std::size_t K, std::size_t record_every) {
  detail::require(record_every >= 1, "record_every must be >= 1");
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k <= K; k += record_every) out.push_back(k);
  if (out.back() != K) out.push_back(K);
  return out;
}

template <GeodesicSpace S>
Trajectory<S> run_ensemble(const ChainConfig<S>& cfg) {
  detail::require(!cfg.initial.empty(), "initial ensemble must be nonempty");
  const auto& space = cfg.family.space();
  for (const auto& x : cfg.initial) space.validate(x);

  const auto steps = recorded_steps(cfg.iterations, cfg.record_every);
  const std::size_t N = cfg.initial.size();
  Trajectory<S> traj;
  traj.seed = cfg.seed;
  traj.steps.resize(steps.size());
  for (std::size_t r = 0; r < steps.size(); ++r) {
    traj.steps[r].step = steps[r];
    traj.steps[r].ensemble.resize(N);
  }

  const CounterRng rng(cfg.seed);
  parallel_for(N, cfg.workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t p = b; p < e; ++p) {
      const std::uint64_t stream = cfg.noise == NoiseMode::common ? kCommonNoiseStream : p;
      typename S::Point x = cfg.initial[p];
      std::size_t r = 0;
      for (std::size_t k = 0;; ++k) {
        if (r < steps.size() && steps[r] == k) traj.steps[r++].ensemble[p] = x;
        if (k == cfg.iterations) break;
        x = cfg.family.apply(x, draw_index(cfg.family, rng, stream, k));
      }
    }
  });
  return traj;
}

/// One application of the empirical Markov operator: every particle takes a
/// single step. Used for invariance self-consistency checks.
template <GeodesicSpace S>
Ensemble<S> step_ensemble(const OperatorFamily<S>& family, const Ensemble<S>& mu, std::uint64_t seed,
                          unsigned workers = 1) {
  ChainConfig<S> cfg{family, mu, 1, seed, 1, workers, NoiseMode::independent};
  return run_ensemble(cfg).final_ensemble();
}

} // namespace rfi
