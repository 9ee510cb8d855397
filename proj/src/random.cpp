#include "icsdetect/random.hpp"

#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <thread>

namespace ics::rng {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = splitmix64(master);
  for (std::uint64_t part : parts) h = splitmix64(h ^ splitmix64(part + 0x632be59bd9b4e019ULL));
  return h;
}

Engine substream(std::uint64_t master, std::uint64_t stream) {
  return Engine(derive_seed(master, {stream}));
}

double uniform01(Engine& g) {
  // 53 significant bits; shifted into (0,1) so log() below never sees 0
  double u = static_cast<double>(g() >> 11) * 0x1.0p-53;
  return u + 0x1.0p-54;
}

double standard_normal(Engine& g) {
  double u1 = uniform01(g);
  double u2 = uniform01(g);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Eigen::VectorXd normal_vector(Eigen::Index n, Engine& g) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = standard_normal(g);
  return v;
}

Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols, Engine& g) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = standard_normal(g);
  return m;
}

std::uint64_t uniform_below(Engine& g, std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("uniform_below: bound must be positive");
  // reject the tail that would bias the modulus
  std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = g();
  } while (x >= limit);
  return x % bound;
}

std::vector<Eigen::Index> sample_without_replacement(Eigen::Index n, Eigen::Index count, Engine& g) {
  if (count > n) throw std::invalid_argument("sample_without_replacement: count exceeds population");
  std::vector<Eigen::Index> pool(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
  std::vector<Eigen::Index> out(static_cast<std::size_t>(count));
  for (Eigen::Index i = 0; i < count; ++i) {
    std::uint64_t j = uniform_below(g, static_cast<std::uint64_t>(n - i));
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(i) + j]);
    out[static_cast<std::size_t>(i)] = pool[static_cast<std::size_t>(i)];
  }
  return out;
}

void parallel_for_index(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::size_t nthreads = std::min<std::size_t>(static_cast<std::size_t>(threads), count);
  std::vector<std::thread> workers;
  workers.reserve(nthreads);
  std::exception_ptr first_error;
  std::mutex error_mutex;
  for (std::size_t t = 0; t < nthreads; ++t) {
    workers.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < count; i += nthreads) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace ics::rng
