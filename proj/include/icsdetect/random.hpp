#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <random>
#include <vector>

#include <Eigen/Core>

namespace ics::rng {

using Engine = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

/// Hash an arbitrary list of integers into one seed. Used to derive
/// per-replicate / per-cell seeds from a master seed so that results do not
/// depend on scheduling or thread count.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> parts);

/// Engine for substream `stream` of a master seed.
Engine substream(std::uint64_t master, std::uint64_t stream);

inline Engine make_engine(std::uint64_t seed) { return substream(seed, 0); }

/// Uniform draw in the open interval (0, 1) with 53-bit resolution.
double uniform01(Engine& g);

/// Standard normal via Box-Muller; consumes exactly two engine outputs,
/// so streams stay reproducible across platforms.
double standard_normal(Engine& g);

Eigen::VectorXd normal_vector(Eigen::Index n, Engine& g);

/// n-by-p matrix of iid standard normals, filled row by row.
Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols, Engine& g);

/// Uniform integer in [0, bound), bound >= 1. Rejection sampling, unbiased.
std::uint64_t uniform_below(Engine& g, std::uint64_t bound);

/// Fisher-Yates shuffle with a fixed visitation order; avoids std::shuffle,
/// whose draw sequence is implementation-defined.
template <typename T>
void shuffle(std::vector<T>& v, Engine& g) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(uniform_below(g, i));
    std::swap(v[i - 1], v[j]);
  }
}

/// Distinct indices drawn without replacement from [0, n); order is the draw
/// order (partial Fisher-Yates).
std::vector<Eigen::Index> sample_without_replacement(Eigen::Index n, Eigen::Index count, Engine& g);

/// Run fn(i) for every i in [0, count). With threads > 1 the index range is
/// split into blocks; fn must confine its writes to slot i so the result is
/// identical for any thread count.
void parallel_for_index(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace ics::rng
