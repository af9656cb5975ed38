// spectrum.hpp: Fourier periodicity report of a sampled observable
#pragma once

#include "classical.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace macrospin {

struct SpectrumReport {
    double t_start{0.0}, t_end{0.0};
    std::vector<double> frequencies;  // cycles per driving period, k / window
    std::vector<double> amplitudes;   // single-sided amplitude
    std::optional<double> dominant_frequency;
    std::optional<int> dominant_period;  // 1/f when that is an integer number of periods
    double peak_to_median{0.0};
    double peak_to_next{0.0};  // largest non-DC amplitude over the largest one off its harmonic comb
};

// Real DFT of n uniform samples spanning `window` periods
inline SpectrumReport spectrum_of_samples(const std::vector<double>& x, double t_start, double window,
                                          double dominance = 5.0) {
    const int n = static_cast<int>(x.size());
    if (n < 4) throw ValidationError("spectrum needs at least 4 samples");
    if (!(window > 0.0)) throw ValidationError("spectrum window must be positive");
    std::vector<double> in(x);
    std::vector<std::complex<double>> out(static_cast<std::size_t>(n / 2 + 1));
    {
        // the FFTW planner is not thread-safe
        static std::mutex planner;
        std::lock_guard lk(planner);
        fftw_plan plan = fftw_plan_dft_r2c_1d(n, in.data(), reinterpret_cast<fftw_complex*>(out.data()), FFTW_ESTIMATE);
        fftw_execute(plan);
        fftw_destroy_plan(plan);
    }

    SpectrumReport rep;
    rep.t_start = t_start;
    rep.t_end = t_start + window;
    for (int k = 0; k <= n / 2; ++k) {
        const double scale = (k == 0 || 2 * k == n) ? 1.0 : 2.0;
        rep.frequencies.push_back(k / window);
        rep.amplitudes.push_back(scale * std::abs(out[static_cast<std::size_t>(k)]) / n);
    }
    std::vector<double> ac(rep.amplitudes.begin() + 1, rep.amplitudes.end());
    if (ac.empty()) return rep;
    const auto top = std::max_element(ac.begin(), ac.end());
    const double peak = *top;
    const std::size_t kpk = static_cast<std::size_t>(top - ac.begin()) + 1;
    std::vector<double> sorted(ac);
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2), sorted.end());
    const double median = sorted[sorted.size() / 2];
    // harmonics of the peak belong to the same periodic component
    double second = 0.0;
    for (std::size_t k = 0; k < ac.size(); ++k)
        if ((k + 1) % kpk != 0) second = std::max(second, ac[k]);
    rep.peak_to_median = median > 0.0 ? peak / median : (peak > 0.0 ? INFINITY : 0.0);
    rep.peak_to_next = second > 0.0 ? peak / second : (peak > 0.0 ? INFINITY : 0.0);
    if (peak > 0.0 && rep.peak_to_median > dominance && rep.peak_to_next > dominance) {
        const double f = rep.frequencies[kpk];
        rep.dominant_frequency = f;
        const double per = 1.0 / f;
        if (std::abs(per - std::round(per)) < 1e-9 * per) rep.dominant_period = static_cast<int>(std::round(per));
    }
    return rep;
}

// Resamples trajectory component `axis` on t_start + k / samples_per_period by linear interpolation
inline SpectrumReport fourier_spectrum(const Trajectory& tr, int axis, double t_start, double t_end,
                                       int samples_per_period, double dominance = 5.0) {
    if (samples_per_period < 1) throw ValidationError("samples_per_period must be >= 1");
    const double window = t_end - t_start;
    if (!(window > 0.0) || std::abs(window - std::round(window)) > 1e-9)
        throw ValidationError("spectrum window must be a positive whole number of periods");
    if (tr.times.empty() || t_start < tr.times.front() - 1e-9 || t_end > tr.times.back() + 1e-9)
        throw ValidationError("spectrum window lies outside the trajectory");
    const int n = static_cast<int>(std::lround(window)) * samples_per_period;
    std::vector<double> x(static_cast<std::size_t>(n));
    std::size_t j = 0;
    for (int k = 0; k < n; ++k) {
        const double t = t_start + static_cast<double>(k) / samples_per_period;
        while (j + 1 < tr.times.size() && tr.times[j + 1] <= t) ++j;
        if (j + 1 >= tr.times.size() || std::abs(tr.times[j] - t) < 1e-12) {
            x[static_cast<std::size_t>(k)] = tr.states[j][axis];
        } else {
            const double w = (t - tr.times[j]) / (tr.times[j + 1] - tr.times[j]);
            x[static_cast<std::size_t>(k)] = (1.0 - w) * tr.states[j][axis] + w * tr.states[j + 1][axis];
        }
    }
    auto rep = spectrum_of_samples(x, t_start, window, dominance);
    if (samples_per_period == 1) {
        // a flat stroboscopic sequence is motion with the drive period itself
        double scale = 1.0;
        for (double v : x) scale = std::max(scale, std::abs(v));
        const double top = *std::max_element(rep.amplitudes.begin() + 1, rep.amplitudes.end());
        if (top < 1e-9 * scale) {
            rep.dominant_frequency = 1.0;
            rep.dominant_period = 1;
        }
    }
    return rep;
}

inline void write_spectrum_csv(std::ostream& os, const SpectrumReport& r, const std::string& config_comment) {
    os << "# " << config_comment << " window=[" << r.t_start << "," << r.t_end << "] dominant_period="
       << (r.dominant_period ? std::to_string(*r.dominant_period) : std::string("none")) << '\n'
       << "freq,amplitude\n";
    os.precision(12);
    for (std::size_t k = 0; k < r.frequencies.size(); ++k) os << r.frequencies[k] << ',' << r.amplitudes[k] << '\n';
}

}  // namespace macrospin
