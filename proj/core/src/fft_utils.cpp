#include "hdfmcw/fft_utils.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>

#include "hdfmcw/errors.hpp"

namespace hdfmcw {
namespace {

// FFTW's planner is not thread-safe; executing a cached plan on fresh
// arrays is.  Plans are created with FFTW_UNALIGNED so the new-array
// execute interface accepts whatever std::vector hands us.
class PlanCache {
public:
    fftw_plan get(std::size_t n, int sign) {
        std::lock_guard<std::mutex> lock(mutex_);
        auto key = std::make_pair(n, sign);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        std::vector<cplx> dummy(n);
        fftw_plan p = fftw_plan_dft_1d(
            static_cast<int>(n),
            reinterpret_cast<fftw_complex*>(dummy.data()),
            reinterpret_cast<fftw_complex*>(dummy.data()),
            sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
        plans_.emplace(key, p);
        return p;
    }

    ~PlanCache() {
        for (auto& [k, p] : plans_) fftw_destroy_plan(p);
    }

private:
    std::mutex mutex_;
    std::map<std::pair<std::size_t, int>, fftw_plan> plans_;
};

PlanCache& cache() {
    static PlanCache c;
    return c;
}

std::vector<cplx> run(std::span<const cplx> in, int sign) {
    if (in.empty()) throw StructureError("fft: input is empty");
    std::vector<cplx> out(in.begin(), in.end());
    fftw_plan p = cache().get(out.size(), sign);
    fftw_execute_dft(p,
                     reinterpret_cast<fftw_complex*>(out.data()),
                     reinterpret_cast<fftw_complex*>(out.data()));
    const double scale = 1.0 / std::sqrt(static_cast<double>(out.size()));
    for (auto& v : out) v *= scale;
    return out;
}

} // namespace

std::vector<cplx> fft_forward(std::span<const cplx> in) { return run(in, FFTW_FORWARD); }
std::vector<cplx> fft_inverse(std::span<const cplx> in) { return run(in, FFTW_BACKWARD); }

} // namespace hdfmcw
