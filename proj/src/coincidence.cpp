#include "qnet/coincidence.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace qnet::coincidence {

namespace {

void check_correlate_args(std::span<const Instant> a, std::span<const Instant> b,
                          Instant half_window, Instant bin_width) {
    if (bin_width < 1) throw std::invalid_argument("cross_correlate: bin_width must be >= 1 ps");
    if (half_window <= 0) throw std::invalid_argument("cross_correlate: empty window");
    if ((2 * half_window) % bin_width != 0)
        throw std::invalid_argument("cross_correlate: window must be a multiple of bin_width");
    if (!std::is_sorted(a.begin(), a.end()) || !std::is_sorted(b.begin(), b.end()))
        throw std::invalid_argument("cross_correlate: inputs must be sorted");
}

// Counts matches of one slice of `a` against `b` into `counts`.
// lo/hi are the difference window edges; j_lo/j_hi are running pointers.
void correlate_slice(std::span<const Instant> a, std::size_t i_begin, std::size_t i_end,
                     std::span<const Instant> b, Instant lo, Instant hi, Instant bin_width,
                     std::uint64_t* counts) {
    std::size_t j_lo = 0, j_hi = 0;
    if (i_begin > 0) {
        // Re-establish pointer positions for this slice.
        j_lo = std::lower_bound(b.begin(), b.end(), a[i_begin] + lo) - b.begin();
        j_hi = std::lower_bound(b.begin(), b.end(), a[i_begin] + hi) - b.begin();
    }
    for (std::size_t i = i_begin; i < i_end; ++i) {
        const Instant w_lo = a[i] + lo;
        const Instant w_hi = a[i] + hi;
        while (j_lo < b.size() && b[j_lo] < w_lo) ++j_lo;
        if (j_hi < j_lo) j_hi = j_lo;
        while (j_hi < b.size() && b[j_hi] < w_hi) ++j_hi;
        for (std::size_t j = j_lo; j < j_hi; ++j)
            ++counts[static_cast<std::size_t>((b[j] - a[i] - lo) / bin_width)];
    }
}

}  // namespace

std::uint64_t Histogram::total() const {
    return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

Histogram cross_correlate_serial(std::span<const Instant> a, std::span<const Instant> b,
                                 Instant search_center, Instant half_window, Instant bin_width) {
    check_correlate_args(a, b, half_window, bin_width);
    Histogram h;
    h.bin_width_ps = bin_width;
    h.origin_ps = search_center - half_window;
    h.counts.assign(static_cast<std::size_t>(2 * half_window / bin_width), 0);
    correlate_slice(a, 0, a.size(), b, h.origin_ps, search_center + half_window, bin_width,
                    h.counts.data());
    return h;
}

Histogram cross_correlate(std::span<const Instant> a, std::span<const Instant> b,
                          Instant search_center, Instant half_window, Instant bin_width) {
    check_correlate_args(a, b, half_window, bin_width);
    Histogram h;
    h.bin_width_ps = bin_width;
    h.origin_ps = search_center - half_window;
    const std::size_t n_bins = static_cast<std::size_t>(2 * half_window / bin_width);
    h.counts.assign(n_bins, 0);
    const Instant lo = h.origin_ps;
    const Instant hi = search_center + half_window;

    // Fixed partition count, independent of the thread count, so the merge is
    // bit-identical however the slices are scheduled.
    constexpr std::size_t kParts = 64;
    if (a.size() < 4 * kParts || n_bins > (1u << 22)) {
        correlate_slice(a, 0, a.size(), b, lo, hi, bin_width, h.counts.data());
        return h;
    }

    std::vector<std::vector<std::uint64_t>> part_counts(kParts);
#pragma omp parallel for schedule(static)
    for (std::size_t p = 0; p < kParts; ++p) {
        part_counts[p].assign(n_bins, 0);
        const std::size_t i_begin = a.size() * p / kParts;
        const std::size_t i_end = a.size() * (p + 1) / kParts;
        correlate_slice(a, i_begin, i_end, b, lo, hi, bin_width, part_counts[p].data());
    }
    for (std::size_t p = 0; p < kParts; ++p)
        for (std::size_t k = 0; k < n_bins; ++k) h.counts[k] += part_counts[p][k];
    return h;
}

namespace {

double median_of(std::vector<std::uint64_t> v) {
    if (v.empty()) return 0.0;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double m = static_cast<double>(v[mid]);
    if (v.size() % 2 == 0) {
        std::nth_element(v.begin(), v.begin() + mid - 1, v.begin() + mid);
        m = 0.5 * (m + static_cast<double>(v[mid - 1]));
    }
    return m;
}

// Solve the 4x4 normal equations in place. Returns false when singular.
bool solve4(std::array<std::array<double, 4>, 4>& m, std::array<double, 4>& rhs) {
    for (int col = 0; col < 4; ++col) {
        int pivot = col;
        for (int r = col + 1; r < 4; ++r)
            if (std::fabs(m[r][col]) > std::fabs(m[pivot][col])) pivot = r;
        if (std::fabs(m[pivot][col]) < 1e-30) return false;
        std::swap(m[col], m[pivot]);
        std::swap(rhs[col], rhs[pivot]);
        for (int r = 0; r < 4; ++r) {
            if (r == col) continue;
            const double f = m[r][col] / m[col][col];
            for (int c = col; c < 4; ++c) m[r][c] -= f * m[col][c];
            rhs[r] -= f * rhs[col];
        }
    }
    for (int i = 0; i < 4; ++i) rhs[i] /= m[i][i];
    return true;
}

struct GaussParams {
    double amp, mu, sigma, bg;
};

double sse_of(const GaussParams& p, std::span<const double> x, std::span<const double> y) {
    double acc = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double z = (x[k] - p.mu) / p.sigma;
        const double r = y[k] - (p.amp * std::exp(-0.5 * z * z) + p.bg);
        acc += r * r;
    }
    return acc;
}

}  // namespace

std::optional<PeakFit> fit_gaussian_peak(const Histogram& h) {
    const std::size_t n = h.n_bins();
    if (n < 5) return std::nullopt;

    const auto max_it = std::max_element(h.counts.begin(), h.counts.end());
    const std::uint64_t max_count = *max_it;
    const std::size_t k_max = static_cast<std::size_t>(max_it - h.counts.begin());
    const double med = median_of(h.counts);
    if (max_count == 0 || static_cast<double>(max_count) < 5.0 * med) return std::nullopt;

    const double bw = static_cast<double>(h.bin_width_ps);

    // Initial width from the half-maximum crossing around the peak.
    const double half_level = 0.5 * (static_cast<double>(max_count) + med);
    std::size_t lo = k_max, hi = k_max;
    while (lo > 0 && static_cast<double>(h.counts[lo - 1]) > half_level) --lo;
    while (hi + 1 < n && static_cast<double>(h.counts[hi + 1]) > half_level) ++hi;
    const double w0 = std::max(static_cast<double>(hi - lo + 1) * bw / 2.3548, 0.5 * bw);

    // Work in coordinates centered on the max bin so that bin-aligned shifts
    // of the data translate the fitted center exactly.
    const double x_peak = h.center_of(k_max);
    auto x_of = [&](std::size_t k) { return h.center_of(k) - x_peak; };

    // Robust background: median of bins more than 3 initial widths from the peak.
    std::vector<std::uint64_t> bg_bins;
    for (std::size_t k = 0; k < n; ++k)
        if (std::fabs(x_of(k)) > 3.0 * w0) bg_bins.push_back(h.counts[k]);
    double bg0 = bg_bins.empty() ? 0.0 : median_of(std::move(bg_bins));

    // Weighted centroid / RMS width on background-subtracted counts.
    const double centroid_span = std::max(4.0 * w0, 2.0 * bw);
    double sum_w = 0.0, sum_wx = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (std::fabs(x_of(k)) > centroid_span) continue;
        const double w = std::max(0.0, static_cast<double>(h.counts[k]) - bg0);
        sum_w += w;
        sum_wx += w * x_of(k);
    }
    if (sum_w <= 0.0) return std::nullopt;
    const double mu0 = sum_wx / sum_w;
    double sum_wxx = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (std::fabs(x_of(k)) > centroid_span) continue;
        const double w = std::max(0.0, static_cast<double>(h.counts[k]) - bg0);
        sum_wxx += w * (x_of(k) - mu0) * (x_of(k) - mu0);
    }
    double sigma0 = std::sqrt(std::max(sum_wxx / sum_w, bw * bw / 16.0));

    // Fit window: wide enough to constrain the background term.
    const double fit_span = std::max(8.0 * w0, 10.0 * bw);
    std::vector<double> xs, ys;
    for (std::size_t k = 0; k < n; ++k) {
        if (std::fabs(x_of(k)) > fit_span) continue;
        xs.push_back(x_of(k));
        ys.push_back(static_cast<double>(h.counts[k]));
    }

    GaussParams p{std::max(static_cast<double>(max_count) - bg0, 1.0), mu0, sigma0, bg0};
    const double sigma_min = bw / 4.0;
    const double sigma_max = static_cast<double>(n) * bw;

    // Damped Gauss-Newton on (amp, mu, sigma, bg); converged when the center
    // step drops below 0.01 ps.
    double sse = sse_of(p, xs, ys);
    bool converged = false;
    for (int iter = 0; iter < 50; ++iter) {
        std::array<std::array<double, 4>, 4> jtj{};
        std::array<double, 4> jtr{};
        for (std::size_t k = 0; k < xs.size(); ++k) {
            const double z = (xs[k] - p.mu) / p.sigma;
            const double g = std::exp(-0.5 * z * z);
            const std::array<double, 4> j{g, p.amp * g * z / p.sigma, p.amp * g * z * z / p.sigma,
                                          1.0};
            const double r = ys[k] - (p.amp * g + p.bg);
            for (int u = 0; u < 4; ++u) {
                jtr[u] += j[u] * r;
                for (int v = 0; v < 4; ++v) jtj[u][v] += j[u] * j[v];
            }
        }
        std::array<double, 4> step = jtr;
        if (!solve4(jtj, step)) break;

        double scale = 1.0;
        GaussParams next = p;
        bool improved = false;
        for (int attempt = 0; attempt < 8; ++attempt, scale *= 0.5) {
            next.amp = p.amp + scale * step[0];
            next.mu = p.mu + scale * step[1];
            next.sigma = std::clamp(p.sigma + scale * step[2], sigma_min, sigma_max);
            next.bg = std::max(0.0, p.bg + scale * step[3]);
            if (next.amp <= 0.0) continue;
            const double next_sse = sse_of(next, xs, ys);
            if (next_sse <= sse) {
                improved = true;
                sse = next_sse;
                break;
            }
        }
        if (!improved) break;
        const double mu_step = std::fabs(next.mu - p.mu);
        p = next;
        if (mu_step < 0.01) {
            converged = true;
            break;
        }
    }
    (void)converged;

    if (!(p.sigma > 0.0) || !(p.amp > 0.0)) return std::nullopt;
    const double center = x_peak + p.mu;
    const double span_lo = static_cast<double>(h.origin_ps);
    const double span_hi = span_lo + static_cast<double>(h.bin_width_ps) * static_cast<double>(n);
    if (center < span_lo || center >= span_hi) return std::nullopt;

    double n_peak = 0.0;
    for (std::size_t k = 0; k < n; ++k)
        if (std::fabs(h.center_of(k) - center) <= 3.0 * p.sigma)
            n_peak += std::max(0.0, static_cast<double>(h.counts[k]) - p.bg);
    n_peak = std::max(n_peak, 1.0);

    PeakFit fit;
    fit.center_ps = center;
    fit.fwhm_ps = 2.3548200450309493 * p.sigma;
    fit.amplitude = p.amp;
    fit.background = p.bg;
    fit.center_uncertainty_ps = p.sigma / std::sqrt(n_peak);
    return fit;
}

CoincidenceMetrics coincidence_metrics(const Histogram& h, const PeakFit& fit, double window_ps) {
    if (!(window_ps > 0.0)) throw std::invalid_argument("coincidence_metrics: window must be > 0");
    double in_window = 0.0;
    for (std::size_t k = 0; k < h.n_bins(); ++k)
        if (std::fabs(h.center_of(k) - fit.center_ps) <= 0.5 * window_ps)
            in_window += static_cast<double>(h.counts[k]);

    CoincidenceMetrics m;
    m.accidentals_in_window = fit.background * (window_ps / static_cast<double>(h.bin_width_ps));
    m.true_coincidences = in_window - m.accidentals_in_window;
    m.car = m.accidentals_in_window > 0.0
                ? m.true_coincidences / m.accidentals_in_window
                : std::numeric_limits<double>::infinity();
    return m;
}

}  // namespace qnet::coincidence
