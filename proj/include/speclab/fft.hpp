#pragma once

#include <fftw3.h>

#include <complex>
#include <map>
#include <memory>
#include <mutex>

namespace speclab::detail {

/// In-place 3-D complex transform pair for one grid size.
///
/// Plans are made with FFTW_ESTIMATE so that the chosen algorithm, and thus
/// every rounded bit of the output, does not depend on timing measurements.
class Fft3d {
public:
    explicit Fft3d(int n) : n_(n)
    {
        const std::size_t count = static_cast<std::size_t>(n) * n * n;
        auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * count));
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        forward_ = fftw_plan_dft_3d(n, n, n, buf, buf, FFTW_FORWARD, flags);
        backward_ = fftw_plan_dft_3d(n, n, n, buf, buf, FFTW_BACKWARD, flags);
        fftw_free(buf);
    }
    ~Fft3d()
    {
        fftw_destroy_plan(forward_);
        fftw_destroy_plan(backward_);
    }
    Fft3d(const Fft3d&) = delete;
    Fft3d& operator=(const Fft3d&) = delete;

    /// Unnormalized sum_x f(x) e^{-ik.x}.
    void forward(std::complex<double>* data) const
    {
        auto* p = reinterpret_cast<fftw_complex*>(data);
        fftw_execute_dft(forward_, p, p);
    }
    /// Unnormalized sum_k F(k) e^{+ik.x}.
    void backward(std::complex<double>* data) const
    {
        auto* p = reinterpret_cast<fftw_complex*>(data);
        fftw_execute_dft(backward_, p, p);
    }

private:
    int n_;
    fftw_plan forward_{};
    fftw_plan backward_{};
};

/// Shared plan cache. The FFTW planner is not thread safe, executing is.
inline const Fft3d& fft_for(int n)
{
    static std::mutex mutex;
    static std::map<int, std::unique_ptr<Fft3d>> plans;
    std::lock_guard<std::mutex> lock(mutex);
    auto& slot = plans[n];
    if (!slot)
        slot = std::make_unique<Fft3d>(n);
    return *slot;
}

} // namespace speclab::detail
