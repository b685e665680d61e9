#pragma once

#include <complex>

#include <fftw3.h>

namespace schieber::detail {

/// Out-of-place complex FFT pair of a fixed length. The inverse is unnormalised.
class FftPlan {
public:
    explicit FftPlan(int n);
    ~FftPlan();
    FftPlan(const FftPlan&) = delete;
    FftPlan& operator=(const FftPlan&) = delete;

    [[nodiscard]] int size() const { return n_; }
    void forward(const std::complex<double>* in, std::complex<double>* out) const;
    void inverse(const std::complex<double>* in, std::complex<double>* out) const;

private:
    int n_;
    fftw_plan forward_ = nullptr;
    fftw_plan inverse_ = nullptr;
};

}  // namespace schieber::detail
