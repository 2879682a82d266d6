#include "dncalc/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>
#include <vector>

namespace dncalc::fft {
namespace {

using Key = std::tuple<int, int, int, int>;

struct PlanCache {
    std::mutex mutex;
    std::map<Key, fftw_plan> plans;

    ~PlanCache() {
        for (auto& [key, plan] : plans) fftw_destroy_plan(plan);
    }
};

PlanCache& cache() {
    static PlanCache c;
    return c;
}

fftw_plan plan_for(int rank, int n, int howmany, int sign) {
    auto& c = cache();
    std::lock_guard lock(c.mutex);
    Key key{rank, n, howmany, sign};
    if (auto it = c.plans.find(key); it != c.plans.end()) return it->second;

    // ESTIMATE never touches the buffers, so scratch arrays are enough for planning.
    std::size_t len = static_cast<std::size_t>(howmany) * (rank == 1 ? n : n * n);
    std::vector<fftw_complex> a(len), b(len);
    int dims[2] = {n, n};
    int dist = rank == 1 ? n : n * n;
    fftw_plan p = fftw_plan_many_dft(rank, dims, howmany, a.data(), nullptr, 1, dist, b.data(),
                                     nullptr, 1, dist, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!p) throw Error("fftw planning failed");
    c.plans.emplace(key, p);
    return p;
}

}  // namespace

void transform(int rank, int n, int howmany, int sign, std::span<const cplx> in,
               std::span<cplx> out) {
    if (rank != 1 && rank != 2) throw InvalidArgument("fft rank must be 1 or 2");
    std::size_t len = static_cast<std::size_t>(howmany) * (rank == 1 ? n : n * n);
    if (in.size() != len || out.size() != len) throw InvalidArgument("fft buffer size mismatch");
    if (in.data() == out.data()) throw InvalidArgument("fft requires distinct buffers");
    fftw_plan p = plan_for(rank, n, howmany, sign);
    // new-array execute is thread safe; the input is not modified for out-of-place plans
    fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in.data())),
                     reinterpret_cast<fftw_complex*>(out.data()));
}

}  // namespace dncalc::fft
