// Times the serial reference kernels against the OpenMP lane on the shapes
// that dominate the bundled detector graphs, and checks the outputs match
// bit-for-bit while at it.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <random>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "../src/kernels.hpp"

using namespace tinyplan;
using namespace tinyplan::exec::kern;
using Clock = std::chrono::steady_clock;

namespace {

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

struct Case {
    const char* name;
    ConvSpec spec;
    bool depthwise;
};

template <typename F>
double time_best_of(int reps, F&& f) {
    double best = 1e30;
    for (int r = 0; r < reps; ++r) {
        auto t0 = Clock::now();
        f();
        best = std::min(best, ms_since(t0));
    }
    return best;
}

}  // namespace

int main() {
    std::mt19937 rng(42);
    std::uniform_real_distribution<float> dist(-1.f, 1.f);

    // shapes from the 320x240 detector's heavy layers and the 96x96 one
    std::vector<Case> cases = {
        {"conv 3x3 s2 240x320x3->16", {{240, 320, 3}, {120, 160, 16}, 3, 3, 2, 2, 0, 0}, false},
        {"pw conv 120x160 16->48", {{120, 160, 16}, {120, 160, 48}, 1, 1, 1, 1, 0, 0}, false},
        {"dw conv 3x3 s2 120x160x48", {{120, 160, 48}, {60, 80, 48}, 3, 3, 2, 2, 0, 0}, true},
        {"pw conv 15x20 112->560", {{15, 20, 112}, {15, 20, 560}, 1, 1, 1, 1, 0, 0}, false},
        {"pw conv 48x48 8->48", {{48, 48, 8}, {48, 48, 48}, 1, 1, 1, 1, 0, 0}, false},
    };

#ifdef _OPENMP
    std::printf("OpenMP lane: %d threads\n", omp_get_max_threads());
#else
    std::printf("built without OpenMP; both lanes run serially\n");
#endif
    std::printf("%-30s %12s %12s %9s %s\n", "kernel", "serial[ms]", "openmp[ms]", "speedup",
                "bit-identical");

    for (const auto& c : cases) {
        const auto& s = c.spec;
        size_t in_n = size_t(s.in.h) * s.in.w * s.in.c;
        size_t out_n = size_t(s.out.h) * s.out.w * s.out.c;
        size_t w_n = c.depthwise ? size_t(s.kh) * s.kw * s.in.c
                                 : size_t(s.out.c) * s.kh * s.kw * s.in.c;
        std::vector<float> in(in_n), w(w_n), bias(size_t(s.out.c));
        for (auto& v : in) v = dist(rng);
        for (auto& v : w) v = dist(rng);
        for (auto& v : bias) v = dist(rng);
        std::vector<float> out_s(out_n), out_p(out_n);

        double t_serial, t_par;
        if (c.depthwise) {
            t_serial = time_best_of(3, [&] { serial::dwconv2d_f32(s, in.data(), w.data(), bias.data(), out_s.data()); });
            t_par = time_best_of(3, [&] { par::dwconv2d_f32(s, in.data(), w.data(), bias.data(), out_p.data()); });
        } else {
            t_serial = time_best_of(3, [&] { serial::conv2d_f32(s, in.data(), w.data(), bias.data(), out_s.data()); });
            t_par = time_best_of(3, [&] { par::conv2d_f32(s, in.data(), w.data(), bias.data(), out_p.data()); });
        }
        bool same = std::memcmp(out_s.data(), out_p.data(), out_n * sizeof(float)) == 0;
        std::printf("%-30s %12.3f %12.3f %8.2fx %s\n", c.name, t_serial, t_par,
                    t_serial / t_par, same ? "yes" : "NO");

        // int8 variants of the same shapes
        std::vector<std::int8_t> qin(in_n), qw(w_n);
        std::vector<std::int32_t> qb(size_t(s.out.c));
        std::uniform_int_distribution<int> qd(-127, 127);
        for (auto& v : qin) v = std::int8_t(qd(rng));
        for (auto& v : qw) v = std::int8_t(qd(rng));
        for (auto& v : qb) v = qd(rng) * 16;
        std::vector<std::int8_t> qout_s(out_n), qout_p(out_n);
        QuantSpec q{3, -5, make_requant(0.0007)};
        if (c.depthwise) {
            t_serial = time_best_of(3, [&] { serial::dwconv2d_i8(s, q, qin.data(), qw.data(), qb.data(), qout_s.data()); });
            t_par = time_best_of(3, [&] { par::dwconv2d_i8(s, q, qin.data(), qw.data(), qb.data(), qout_p.data()); });
        } else {
            t_serial = time_best_of(3, [&] { serial::conv2d_i8(s, q, qin.data(), qw.data(), qb.data(), qout_s.data()); });
            t_par = time_best_of(3, [&] { par::conv2d_i8(s, q, qin.data(), qw.data(), qb.data(), qout_p.data()); });
        }
        same = std::memcmp(qout_s.data(), qout_p.data(), out_n) == 0;
        std::printf("%-30s %12.3f %12.3f %8.2fx %s\n", (std::string(c.name) + " [i8]").c_str(),
                    t_serial, t_par, t_serial / t_par, same ? "yes" : "NO");
    }
    return 0;
}
