#pragma once

// Thin RAII layer over FFTW plans. Planning is serialized through one mutex;
// execution uses the new-array interface so a single plan can be shared by
// concurrent solver paths.

#include <fftw3.h>

#include <array>
#include <complex>
#include <mutex>
#include <span>
#include <vector>

namespace snch::detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

class FftwPlan {
 public:
  FftwPlan() = default;
  explicit FftwPlan(fftw_plan p) : plan_(p) {}
  FftwPlan(const FftwPlan&) = delete;
  FftwPlan& operator=(const FftwPlan&) = delete;
  FftwPlan(FftwPlan&& o) noexcept : plan_(o.plan_) { o.plan_ = nullptr; }
  FftwPlan& operator=(FftwPlan&& o) noexcept {
    if (this != &o) {
      reset();
      plan_ = o.plan_;
      o.plan_ = nullptr;
    }
    return *this;
  }
  ~FftwPlan() { reset(); }

  fftw_plan get() const noexcept { return plan_; }
  explicit operator bool() const noexcept { return plan_ != nullptr; }

 private:
  void reset() {
    if (plan_) {
      std::lock_guard lock(fftw_planner_mutex());
      fftw_destroy_plan(plan_);
      plan_ = nullptr;
    }
  }
  fftw_plan plan_ = nullptr;
};

/// In-place real-to-real plan of the given rank (1 or 2) and kind on every axis.
inline FftwPlan make_r2r_inplace(int rank, const std::array<int, 2>& n, fftw_r2r_kind kind) {
  std::vector<double> scratch(static_cast<std::size_t>(n[0]) * (rank == 2 ? n[1] : 1));
  std::array<fftw_r2r_kind, 2> kinds{kind, kind};
  std::lock_guard lock(fftw_planner_mutex());
  fftw_plan p = fftw_plan_r2r(rank, n.data(), scratch.data(), scratch.data(), kinds.data(),
                              FFTW_ESTIMATE | FFTW_UNALIGNED);
  return FftwPlan(p);
}

inline FftwPlan make_r2c(int rank, const std::array<int, 2>& n) {
  const std::size_t real_size = static_cast<std::size_t>(n[0]) * (rank == 2 ? n[1] : 1);
  const std::size_t cplx_size =
      rank == 2 ? static_cast<std::size_t>(n[0]) * (n[1] / 2 + 1) : static_cast<std::size_t>(n[0] / 2 + 1);
  std::vector<double> in(real_size);
  std::vector<std::complex<double>> out(cplx_size);
  std::lock_guard lock(fftw_planner_mutex());
  fftw_plan p = fftw_plan_dft_r2c(rank, n.data(), in.data(), reinterpret_cast<fftw_complex*>(out.data()),
                                  FFTW_ESTIMATE | FFTW_UNALIGNED);
  return FftwPlan(p);
}

inline FftwPlan make_c2r(int rank, const std::array<int, 2>& n) {
  const std::size_t real_size = static_cast<std::size_t>(n[0]) * (rank == 2 ? n[1] : 1);
  const std::size_t cplx_size =
      rank == 2 ? static_cast<std::size_t>(n[0]) * (n[1] / 2 + 1) : static_cast<std::size_t>(n[0] / 2 + 1);
  std::vector<std::complex<double>> in(cplx_size);
  std::vector<double> out(real_size);
  std::lock_guard lock(fftw_planner_mutex());
  fftw_plan p = fftw_plan_dft_c2r(rank, n.data(), reinterpret_cast<fftw_complex*>(in.data()), out.data(),
                                  FFTW_ESTIMATE | FFTW_UNALIGNED);
  return FftwPlan(p);
}

inline void execute_r2r(const FftwPlan& plan, std::span<double> data) {
  fftw_execute_r2r(plan.get(), data.data(), data.data());
}

inline void execute_r2c(const FftwPlan& plan, std::span<double> in, std::span<std::complex<double>> out) {
  fftw_execute_dft_r2c(plan.get(), in.data(), reinterpret_cast<fftw_complex*>(out.data()));
}

// c2r destroys its input.
inline void execute_c2r(const FftwPlan& plan, std::span<std::complex<double>> in, std::span<double> out) {
  fftw_execute_dft_c2r(plan.get(), reinterpret_cast<fftw_complex*>(in.data()), out.data());
}

}  // namespace snch::detail
