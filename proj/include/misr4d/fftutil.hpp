#ifndef MISR4D_FFTUTIL_HPP
#define MISR4D_FFTUTIL_HPP

#include <complex>
#include <mutex>
#include <vector>

#include <fftw3.h>

namespace misr4d {

/// RAII plan for an in-place 2-D complex DFT of fixed size. The plan may be
/// executed on any correctly-sized buffer through run(), which uses FFTW's
/// new-array execute and is safe to call from multiple threads. Plan
/// creation itself is serialized (the FFTW planner is not thread safe).
class FftPlan2D {
public:
  FftPlan2D(int n0, int n1, int sign) : n0_(n0), n1_(n1) {
    std::lock_guard<std::mutex> lock(planner_mutex());
    std::vector<std::complex<double>> scratch(static_cast<size_t>(n0) * n1);
    plan_ = fftw_plan_dft_2d(n0, n1, reinterpret_cast<fftw_complex*>(scratch.data()),
                             reinterpret_cast<fftw_complex*>(scratch.data()), sign,
                             FFTW_ESTIMATE);
  }

  ~FftPlan2D() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan_);
  }

  FftPlan2D(const FftPlan2D&) = delete;
  FftPlan2D& operator=(const FftPlan2D&) = delete;

  /// In-place transform of a n0*n1 buffer (unnormalized, FFTW convention).
  void run(std::complex<double>* buf) const {
    fftw_execute_dft(plan_, reinterpret_cast<fftw_complex*>(buf),
                     reinterpret_cast<fftw_complex*>(buf));
  }

  int n0() const { return n0_; }
  int n1() const { return n1_; }

private:
  static std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
  }

  int n0_, n1_;
  fftw_plan plan_;
};

/// FFT sample frequency for index i of an n-point transform, in cycles per
/// sample (numpy fftfreq convention).
inline double fft_freq(int i, int n) {
  return (i <= (n - 1) / 2) ? double(i) / n : double(i - n) / n;
}

/// Index shift that moves the zero-frequency sample to n/2 (fftshift).
inline int fft_shift_index(int i, int n) { return (i + n / 2) % n; }

} // namespace misr4d

#endif
