#include "fft.hpp"

#include <mutex>
#include <stdexcept>
#include <vector>

namespace schieber::detail {

namespace {
// The FFTW planner is not re-entrant.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

fftw_complex* as_fftw(std::complex<double>* p) { return reinterpret_cast<fftw_complex*>(p); }
fftw_complex* as_fftw(const std::complex<double>* p) {
    return reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(p));
}
}  // namespace

FftPlan::FftPlan(int n) : n_(n) {
    if (n <= 0) throw std::invalid_argument("FftPlan: length must be positive");
    std::vector<std::complex<double>> a(static_cast<std::size_t>(n)), b(static_cast<std::size_t>(n));
    std::lock_guard<std::mutex> lock(planner_mutex());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    forward_ = fftw_plan_dft_1d(n, as_fftw(a.data()), as_fftw(b.data()), FFTW_FORWARD, flags);
    inverse_ = fftw_plan_dft_1d(n, as_fftw(a.data()), as_fftw(b.data()), FFTW_BACKWARD, flags);
    if (forward_ == nullptr || inverse_ == nullptr) throw std::runtime_error("FftPlan: planning failed");
}

FftPlan::~FftPlan() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (forward_ != nullptr) fftw_destroy_plan(forward_);
    if (inverse_ != nullptr) fftw_destroy_plan(inverse_);
}

void FftPlan::forward(const std::complex<double>* in, std::complex<double>* out) const {
    fftw_execute_dft(forward_, as_fftw(in), as_fftw(out));
}

void FftPlan::inverse(const std::complex<double>* in, std::complex<double>* out) const {
    fftw_execute_dft(inverse_, as_fftw(in), as_fftw(out));
}

}  // namespace schieber::detail
