#include "oce/core/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

namespace oce::fft {

namespace {

enum class Kind { line, rows, cols, plane };

using PlanKey = std::tuple<Kind, std::size_t, std::size_t, int>;

std::mutex g_plan_mutex;

struct PlanCache {
    std::map<PlanKey, fftw_plan> plans;
    ~PlanCache() {
        for (auto &[key, plan] : plans) fftw_destroy_plan(plan);
    }
};

PlanCache &cache() {
    static PlanCache c;
    return c;
}

fftw_plan get_plan(Kind kind, std::size_t rows, std::size_t cols, Direction dir) {
    const int sign = dir == Direction::forward ? FFTW_FORWARD : FFTW_BACKWARD;
    const PlanKey key{kind, rows, cols, sign};
    std::lock_guard lock(g_plan_mutex);
    auto &plans = cache().plans;
    if (auto it = plans.find(key); it != plans.end()) return it->second;

    // Planning with ESTIMATE does not touch the buffer contents.
    auto *buf = fftw_alloc_complex(rows * cols);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    const int r = static_cast<int>(rows);
    const int c = static_cast<int>(cols);
    fftw_plan plan = nullptr;
    switch (kind) {
    case Kind::line:
        plan = fftw_plan_dft_1d(c, buf, buf, sign, flags);
        break;
    case Kind::rows:
        plan = fftw_plan_many_dft(1, &c, r, buf, nullptr, 1, c, buf, nullptr, 1, c, sign, flags);
        break;
    case Kind::cols:
        plan = fftw_plan_many_dft(1, &r, c, buf, nullptr, c, 1, buf, nullptr, c, 1, sign, flags);
        break;
    case Kind::plane:
        plan = fftw_plan_dft_2d(r, c, buf, buf, sign, flags);
        break;
    }
    fftw_free(buf);
    if (plan == nullptr) throw Error("FFTW failed to create a plan");
    plans.emplace(key, plan);
    return plan;
}

void run(Kind kind, std::span<cplx> data, std::size_t rows, std::size_t cols, Direction dir) {
    if (data.size() != rows * cols) throw ShapeError("fft: buffer size does not match shape");
    if (data.empty()) return;
    fftw_plan plan = get_plan(kind, rows, cols, dir);
    auto *p = reinterpret_cast<fftw_complex *>(data.data());
    fftw_execute_dft(plan, p, p);
}

} // namespace

void transform(std::span<cplx> data, Direction dir) { run(Kind::line, data, 1, data.size(), dir); }

void transform_rows(std::span<cplx> data, std::size_t rows, std::size_t cols, Direction dir) {
    run(Kind::rows, data, rows, cols, dir);
}

void transform_cols(std::span<cplx> data, std::size_t rows, std::size_t cols, Direction dir) {
    run(Kind::cols, data, rows, cols, dir);
}

void transform_2d(std::span<cplx> data, std::size_t rows, std::size_t cols, Direction dir) {
    run(Kind::plane, data, rows, cols, dir);
}

std::size_t next_fast_size(std::size_t n) {
    if (n <= 1) return 1;
    for (std::size_t m = n;; ++m) {
        std::size_t k = m;
        for (std::size_t p : {2u, 3u, 5u}) {
            while (k % p == 0) k /= p;
        }
        if (k == 1) return m;
    }
}

} // namespace oce::fft
