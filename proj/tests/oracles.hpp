#pragma once

// Independent reference computations used to freeze expected values. None of
// these call into the library implementation they check.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

namespace oracle {

/// Least-squares cubic via explicitly assembled 4x4 normal equations solved
/// by Gaussian elimination with partial pivoting.
inline std::array<double, 4> normal_equations_cubic(const std::vector<double>& x, const std::vector<double>& y) {
    double m[4][5] = {};
    for (std::size_t k = 0; k < x.size(); ++k) {
        double pw[7];
        pw[0] = 1.0;
        for (int i = 1; i < 7; ++i) pw[i] = pw[i - 1] * x[k];
        for (int r = 0; r < 4; ++r) {
            for (int c = 0; c < 4; ++c) m[r][c] += pw[r + c];
            m[r][4] += pw[r] * y[k];
        }
    }
    for (int col = 0; col < 4; ++col) {
        int piv = col;
        for (int r = col + 1; r < 4; ++r)
            if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
        if (std::abs(m[piv][col]) < 1e-300) throw std::runtime_error("singular normal equations");
        for (int c = 0; c < 5; ++c) std::swap(m[col][c], m[piv][c]);
        for (int r = col + 1; r < 4; ++r) {
            double f = m[r][col] / m[col][col];
            for (int c = col; c < 5; ++c) m[r][c] -= f * m[col][c];
        }
    }
    std::array<double, 4> a{};
    for (int r = 3; r >= 0; --r) {
        double s = m[r][4];
        for (int c = r + 1; c < 4; ++c) s -= m[r][c] * a[c];
        a[r] = s / m[r][r];
    }
    return a;
}

inline double cubic(const std::array<double, 4>& a, double v) {
    return a[0] + a[1] * v + a[2] * v * v + a[3] * v * v * v;
}

inline double sum_sq_residual(const std::array<double, 4>& a, const std::vector<double>& x, const std::vector<double>& y) {
    double r = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double e = cubic(a, x[i]) - y[i];
        r += e * e;
    }
    return r;
}

/// Fraction of a uniform phase grid where both feet (offsets 0 and 0.5) are
/// inside their swing window [0, ratio).
inline double aerial_fraction_by_grid(double ratio, int n = 10000) {
    int both = 0;
    for (int k = 0; k < n; ++k) {
        double p = (k + 0.5) / n;
        double l = std::fmod(p, 1.0);
        double r = std::fmod(p + 0.5, 1.0);
        if (l < ratio && r < ratio) ++both;
    }
    return static_cast<double>(both) / n;
}

inline double capture_offset(double v, double leg, double g) { return v * std::sqrt(leg / g); }

/// Phases of a sampled signal where it changes sign (skipping exact zeros).
inline std::vector<double> sign_changes(const std::vector<double>& phase, const std::vector<double>& signal) {
    std::vector<double> out;
    int last = 0;
    for (std::size_t i = 0; i < signal.size(); ++i) {
        int s = (signal[i] > 0) - (signal[i] < 0);
        if (s == 0) continue;
        if (last != 0 && s != last) out.push_back(phase[i]);
        last = s;
    }
    return out;
}

/// Per-stride vertical impulse relative to weight times stride time.
inline double impulse_ratio(double impulse, double mass, double g, double period) { return impulse / (mass * g * period); }

/// Impulse balance rearranged: mean stance force F satisfies F * contact =
/// W * period / 2 for one of two alternating feet, so F/W - 1 = T/(2 tc) - 1.
inline double grf_eff_from_timing(double period, double contact) { return period / (2.0 * contact) - 1.0; }

/// Spearman rank correlation for distinct values.
inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    auto ranks = [](const std::vector<double>& v) {
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            double rank = 0;
            for (std::size_t j = 0; j < v.size(); ++j) rank += v[j] < v[i] ? 1 : 0;
            r[i] = rank;
        }
        return r;
    };
    auto ra = ranks(a), rb = ranks(b);
    double n = static_cast<double>(a.size());
    double d2 = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d2 += (ra[i] - rb[i]) * (ra[i] - rb[i]);
    return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

}  // namespace oracle
