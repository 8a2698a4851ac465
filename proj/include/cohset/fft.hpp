#pragma once

#include <fftw3.h>

#include <array>
#include <complex>
#include <map>
#include <mutex>
#include <span>
#include <stdexcept>
#include <tuple>
#include <vector>

namespace cohset {

using Complex = std::complex<double>;

namespace detail {

// FFTW's planner is not thread-safe; fftw_execute_dft on a cached plan is.
// Plans are in-place and unaligned so any std::vector<Complex> buffer of the
// right size can be passed to them.
class FftPlanCache {
 public:
  static FftPlanCache& instance() {
    static FftPlanCache cache;
    return cache;
  }

  FftPlanCache(const FftPlanCache&) = delete;
  FftPlanCache& operator=(const FftPlanCache&) = delete;

  fftw_plan get(int dim, int extent, int sign) {
    const Key key{dim, extent, sign};
    std::lock_guard lock(mutex_);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::size_t total = 1;
    std::array<int, 3> n{};
    for (int a = 0; a < dim; ++a) {
      n[a] = extent;
      total *= static_cast<std::size_t>(extent);
    }
    std::vector<Complex> scratch(total);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan plan = fftw_plan_dft(dim, n.data(), buf, buf, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan == nullptr) throw std::runtime_error("FFTW failed to create a plan");
    plans_.emplace(key, plan);
    return plan;
  }

  ~FftPlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

 private:
  using Key = std::tuple<int, int, int>;
  FftPlanCache() = default;
  std::mutex mutex_;
  std::map<Key, fftw_plan> plans_;
};

}  // namespace detail

/// Unnormalized in-place DFT on a cube of `extent`^dim samples.
/// sign = -1 computes sum_j f_j e^{-2 pi i k j / M}; sign = +1 the inverse sum.
/// All axes have the same extent, so FFTW's row-major order coincides with
/// our axis-0-fastest flattening up to a relabelling of axes.
inline void fft_inplace(std::span<Complex> data, int dim, int extent, int sign) {
  fftw_plan plan = detail::FftPlanCache::instance().get(dim, extent, sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD);
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan, buf, buf);
}

}  // namespace cohset
