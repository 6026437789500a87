// Benchmark: OpenMP cross-correlation kernel against the serial reference.
// Prints throughput for Poisson tag streams at increasing sizes, plus the
// 1e6 -> 1e7 runtime ratio that documents the pass's linearity.

#include <chrono>
#include <cstdio>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "qnet/coincidence.hpp"
#include "qnet/timebase.hpp"

using qnet::Instant;

namespace {

std::vector<Instant> poisson_tags(std::size_t n, double rate_hz, qnet::Rng& rng) {
    std::vector<Instant> tags(n);
    const double mean_gap_ps = 1e12 / rate_hz;
    double t = 0.0;
    for (auto& tag : tags) {
        t += rng.exponential(mean_gap_ps);
        tag = static_cast<Instant>(t);
    }
    return tags;
}

double time_ms(const std::vector<Instant>& a, const std::vector<Instant>& b, bool parallel) {
    const auto start = std::chrono::steady_clock::now();
    const auto h = parallel ? qnet::coincidence::cross_correlate(a, b, 0, 500, 1)
                            : qnet::coincidence::cross_correlate_serial(a, b, 0, 500, 1);
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    std::printf("  total counts in window: %llu\n", static_cast<unsigned long long>(h.total()));
    return ms;
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("OpenMP threads: %d\n", omp_get_max_threads());
#else
    std::printf("built without OpenMP\n");
#endif

    qnet::Rng rng = qnet::make_rng(42);
    const double rate = 1e4;  // Hz -> 1e7 tags span ~1000 s

    double serial_1e6 = 0, serial_1e7 = 0, parallel_1e6 = 0, parallel_1e7 = 0;
    for (std::size_t n : {std::size_t{1000000}, std::size_t{10000000}}) {
        qnet::Rng ra = rng.fork(1, n), rb = rng.fork(2, n);
        const auto a = poisson_tags(n, rate, ra);
        const auto b = poisson_tags(n, rate, rb);
        std::printf("n = %zu tags/side, 1 ns window, 1 ps bins\n", n);
        const double ms_serial = time_ms(a, b, false);
        std::printf("  serial:   %.1f ms\n", ms_serial);
        const double ms_parallel = time_ms(a, b, true);
        std::printf("  parallel: %.1f ms\n", ms_parallel);
        if (n == 1000000) {
            serial_1e6 = ms_serial;
            parallel_1e6 = ms_parallel;
        } else {
            serial_1e7 = ms_serial;
            parallel_1e7 = ms_parallel;
        }
    }
    std::printf("scaling 1e6 -> 1e7: serial %.2fx, parallel %.2fx (linear pass target <= 12x)\n",
                serial_1e7 / serial_1e6, parallel_1e7 / parallel_1e6);
    return 0;
}
