// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "cpsim/error.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cpsim {

/// Uniformly sampled trace.
struct Waveform {
    std::string name;
    double start = 0.0;  ///< time of samples[0], s
    double period = 0.0; ///< s
    std::vector<double> samples;

    double time(std::size_t k) const { return start + static_cast<double>(k) * period; }
    std::size_t size() const noexcept { return samples.size(); }
    double back() const { return samples.back(); }
};

/// Traces sharing one time axis (one CSV file).
struct WaveformSet {
    std::vector<Waveform> traces;

    const Waveform& at(std::string_view name) const {
        for (const auto& w : traces) {
            if (w.name == name) {
                return w;
            }
        }
        throw ModelError("no waveform named '" + std::string(name) + "'");
    }

    bool contains(std::string_view name) const {
        return std::any_of(traces.begin(), traces.end(), [&](const Waveform& w) { return w.name == name; });
    }
};

/// Index range of samples whose time lies in [t0, t1].
inline std::pair<std::size_t, std::size_t> sample_range(const Waveform& w, double t0, double t1) {
    if (w.samples.empty() || !(w.period > 0.0)) {
        return {0, 0};
    }
    const double eps = 1e-9 * w.period;
    auto first = static_cast<std::ptrdiff_t>(std::ceil((t0 - w.start - eps) / w.period));
    auto last = static_cast<std::ptrdiff_t>(std::floor((t1 - w.start + eps) / w.period));
    first = std::max<std::ptrdiff_t>(first, 0);
    last = std::min<std::ptrdiff_t>(last, static_cast<std::ptrdiff_t>(w.samples.size()) - 1);
    if (last < first) {
        return {0, 0};
    }
    return {static_cast<std::size_t>(first), static_cast<std::size_t>(last + 1)};
}

inline double window_mean(const Waveform& w, double t0, double t1) {
    const auto [b, e] = sample_range(w, t0, t1);
    if (b == e) {
        throw InsufficientData("no samples of '" + w.name + "' in the requested window");
    }
    double sum = 0.0;
    for (auto k = b; k < e; ++k) {
        sum += w.samples[k];
    }
    return sum / static_cast<double>(e - b);
}

/// Earliest time after which every sample stays within target*(1 +/- band).
inline std::optional<double> settling_time(const Waveform& w, double target, double band) {
    if (!(band > 0.0 && band < 0.5)) {
        throw ModelError("settling band must lie in (0, 0.5)");
    }
    if (w.samples.empty()) {
        return std::nullopt;
    }
    const double tol = band * std::abs(target);
    std::optional<std::size_t> last_out;
    for (std::size_t k = w.samples.size(); k-- > 0;) {
        if (!(std::abs(w.samples[k] - target) <= tol)) {
            last_out = k;
            break;
        }
    }
    if (!last_out) {
        return w.time(0);
    }
    if (*last_out + 1 >= w.samples.size()) {
        return std::nullopt;
    }
    return w.time(*last_out + 1);
}

struct SpectrumOptions {
    double threshold = 5.0;          ///< peak must exceed threshold x median magnitude
    std::size_t padding = 4;         ///< zero-pad to at least padding x window length
    std::size_t min_samples = 16;    ///< shorter windows carry no usable spectrum
    int detrend_degree = 3;          ///< least-squares polynomial removed first
};

namespace detail {

/// Remove the least-squares polynomial trend from `x` in place.
inline void detrend(std::vector<double>& x, int degree) {
    const auto n = static_cast<Eigen::Index>(x.size());
    const auto cols = static_cast<Eigen::Index>(std::min<std::size_t>(static_cast<std::size_t>(degree) + 1, x.size()));
    Eigen::MatrixXd a(n, cols);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double s = n > 1 ? 2.0 * static_cast<double>(i) / static_cast<double>(n - 1) - 1.0 : 0.0;
        double pw = 1.0;
        for (Eigen::Index j = 0; j < cols; ++j) {
            a(i, j) = pw;
            pw *= s;
        }
    }
    const Eigen::Map<Eigen::VectorXd> y(x.data(), n);
    const Eigen::VectorXd coef = a.colPivHouseholderQr().solve(y);
    const Eigen::VectorXd residual = y - a * coef;
    for (Eigen::Index i = 0; i < n; ++i) {
        x[static_cast<std::size_t>(i)] = residual(i);
    }
}

inline std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) {
        p <<= 1;
    }
    return p;
}

} // namespace detail

/// Angular frequency (rad/s) of the strongest non-DC component in [t0, t1],
/// or nothing when no component stands out of the spectral floor.
inline std::optional<double> dominant_frequency(const Waveform& w, double t0, double t1,
                                                const SpectrumOptions& opt = {}) {
    const auto [b, e] = sample_range(w, t0, t1);
    const auto n = e - b;
    if (n < opt.min_samples) {
        return std::nullopt;
    }
    std::vector<double> x(w.samples.begin() + static_cast<std::ptrdiff_t>(b),
                          w.samples.begin() + static_cast<std::ptrdiff_t>(e));
    double scale = 0.0;
    for (double v : x) {
        scale = std::max(scale, std::abs(v));
    }
    detail::detrend(x, opt.detrend_degree);
    double resid = 0.0;
    for (double v : x) {
        resid = std::max(resid, std::abs(v));
    }
    if (!(resid > 1e-9 * scale) || resid == 0.0) {
        return std::nullopt;
    }

    const std::size_t m = detail::next_pow2(opt.padding * n);
    std::vector<double> padded(m, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        const double hann = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(k) /
                                                 static_cast<double>(n - 1));
        padded[k] = x[k] * hann;
    }
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> spec;
    fft.fwd(spec, padded);

    const std::size_t half = m / 2;
    std::vector<double> mag(half + 1);
    for (std::size_t k = 0; k <= half; ++k) {
        mag[k] = std::abs(spec[k]);
    }
    std::size_t peak = 1;
    for (std::size_t k = 1; k <= half; ++k) {
        if (mag[k] > mag[peak]) {
            peak = k;
        }
    }
    std::vector<double> sorted(mag.begin() + 1, mag.end());
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2), sorted.end());
    const double median = sorted[sorted.size() / 2];
    if (!(mag[peak] > opt.threshold * median)) {
        return std::nullopt;
    }

    // Parabolic interpolation on log magnitude around the peak bin.
    double offset = 0.0;
    if (peak > 1 && peak < half) {
        const double l = std::log(mag[peak - 1] + 1e-300);
        const double c = std::log(mag[peak] + 1e-300);
        const double r = std::log(mag[peak + 1] + 1e-300);
        const double den = l - 2.0 * c + r;
        if (den < 0.0) {
            offset = 0.5 * (l - r) / den;
        }
    }
    const double fs = 1.0 / w.period;
    const double hz = (static_cast<double>(peak) + offset) * fs / static_cast<double>(m);
    return 2.0 * std::numbers::pi * hz;
}

/// Amplitude of the component at `omega` (rad/s) in [t0, t1], from a
/// Hann-weighted single-frequency DFT.
inline double tone_amplitude(const Waveform& w, double t0, double t1, double omega) {
    const auto [b, e] = sample_range(w, t0, t1);
    const auto n = e - b;
    if (n < 2) {
        throw InsufficientData("window too short for tone estimate");
    }
    std::complex<double> acc{0.0, 0.0};
    double wsum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double hann = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(k) /
                                                 static_cast<double>(n - 1));
        const double t = w.time(b + k);
        acc += hann * w.samples[b + k] * std::polar(1.0, -omega * t);
        wsum += hann;
    }
    return 2.0 * std::abs(acc) / wsum;
}

} // namespace cpsim
