// Serial reference vs OpenMP kernel timings. The parallel variants must also
// be bitwise-identical to the reference; this binary rechecks that on every
// size it times.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "vocapose/core/kernels.hpp"
#include "vocapose/core/parallel.hpp"
#include "vocapose/core/rng.hpp"
#include "vocapose/core/tensor.hpp"

using namespace vp::core;
using Clock = std::chrono::steady_clock;

namespace {

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

template <typename Fn>
double time_best_of(int reps, Fn&& fn) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = Clock::now();
        fn();
        best = std::min(best, ms_since(t0));
    }
    return best;
}

void report(const char* name, double serial_ms, double parallel_ms, bool identical) {
    std::printf("%-28s %10.2f ms %10.2f ms %8.2fx %s\n", name, serial_ms, parallel_ms,
                serial_ms / parallel_ms, identical ? "bitwise-equal" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
    int threads = num_threads();
    int reps = 3;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--threads" && i + 1 < argc) threads = std::stoi(argv[++i]);
        if (arg == "--reps" && i + 1 < argc) reps = std::stoi(argv[++i]);
    }
    set_num_threads(threads);
    std::printf("kernel benchmark, %d thread(s)\n", num_threads());
    std::printf("%-28s %13s %13s %9s\n", "kernel", "serial", "openmp", "speedup");

    Rng rng(1);

    {
        const int64_t m = 384, k = 384, n = 384;
        Tensor a({m, k}), b({k, n}), c1({m, n}), c2({m, n});
        for (double& x : a.data) x = rng.gaussian();
        for (double& x : b.data) x = rng.gaussian();
        const double ts = time_best_of(reps, [&]() {
            serial::matmul_nn(a.data.data(), b.data.data(), c1.data.data(), m, k, n);
        });
        const double tp = time_best_of(reps, [&]() {
            kernels::matmul_nn(a.data.data(), b.data.data(), c2.data.data(), m, k, n);
        });
        report("matmul_nn 384^3", ts, tp, c1.data == c2.data);
    }
    {
        const int64_t m = 384, k = 384, n = 384;
        Tensor a({m, k}), b({n, k}), c1({m, n}), c2({m, n});
        for (double& x : a.data) x = rng.gaussian();
        for (double& x : b.data) x = rng.gaussian();
        const double ts = time_best_of(reps, [&]() {
            serial::matmul_nt(a.data.data(), b.data.data(), c1.data.data(), m, k, n);
        });
        const double tp = time_best_of(reps, [&]() {
            kernels::matmul_nt(a.data.data(), b.data.data(), c2.data.data(), m, k, n);
        });
        report("matmul_nt 384^3", ts, tp, c1.data == c2.data);
    }
    {
        const int64_t cin = 64, cout = 64, l = 1024, kw = 4, stride = 2, pad = 1;
        const int64_t lout = (l + 2 * pad - kw) / stride + 1;
        Tensor x({cin, l}), w({cout, cin, kw}), bias({cout});
        Tensor y1({cout, lout}), y2({cout, lout});
        for (double& v : x.data) v = rng.gaussian();
        for (double& v : w.data) v = rng.gaussian();
        const double ts = time_best_of(reps, [&]() {
            serial::conv1d_forward(x.data.data(), w.data.data(), bias.data.data(), y1.data.data(),
                                   cin, l, cout, kw, stride, pad, lout);
        });
        const double tp = time_best_of(reps, [&]() {
            kernels::conv1d_forward(x.data.data(), w.data.data(), bias.data.data(), y2.data.data(),
                                    cin, l, cout, kw, stride, pad, lout);
        });
        report("conv1d 64x64 L1024", ts, tp, y1.data == y2.data);
    }
    {
        const int64_t n = 8192, k = 512, d = 64;
        Tensor z({n, d}), cb({k, d});
        for (double& v : z.data) v = rng.gaussian();
        for (double& v : cb.data) v = rng.gaussian();
        std::vector<int32_t> i1(static_cast<size_t>(n)), i2(static_cast<size_t>(n));
        const double ts = time_best_of(reps, [&]() {
            serial::nearest_code(z.data.data(), cb.data.data(), i1.data(), n, k, d);
        });
        const double tp = time_best_of(reps, [&]() {
            kernels::nearest_code(z.data.data(), cb.data.data(), i2.data(), n, k, d);
        });
        report("nearest_code 8192x512x64", ts, tp, i1 == i2);
    }
    return 0;
}
