// Thin FFTW wrapper for complex n-d transforms on GridSpec-shaped data.
#pragma once

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

#include "rfrob/grid.hpp"

namespace rfrob::fft {

using Complex = std::complex<double>;

namespace detail {

// FFTW's planner is not thread-safe; plans are created once per shape and
// reused through the new-array execute interface.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(int dim, int n, int sign) {
    std::lock_guard lock(mutex_);
    auto key = std::make_tuple(dim, n, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::size_t total = 1;
    int dims[kMaxDim];
    for (int a = 0; a < dim; ++a) {
      dims[a] = n;
      total *= static_cast<std::size_t>(n);
    }
    std::vector<Complex> scratch(total);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan plan = fftw_plan_dft(dim, dims, buf, buf, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(key, plan);
    return plan;
  }

  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

}  // namespace detail

// Unnormalized forward transform (sign -1).
inline void forward(const GridSpec& grid, std::vector<Complex>& data) {
  auto plan = detail::PlanCache::instance().get(grid.dim, grid.points_per_axis, FFTW_FORWARD);
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan, buf, buf);
}

// Inverse transform including the 1/N^dim normalization.
inline void inverse(const GridSpec& grid, std::vector<Complex>& data) {
  auto plan = detail::PlanCache::instance().get(grid.dim, grid.points_per_axis, FFTW_BACKWARD);
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan, buf, buf);
  const double scale = 1.0 / static_cast<double>(data.size());
  for (auto& c : data) c *= scale;
}

}  // namespace rfrob::fft
