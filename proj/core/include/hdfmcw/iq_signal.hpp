#pragma once

#include <vector>

#include "hdfmcw/common.hpp"
#include "hdfmcw/errors.hpp"

namespace hdfmcw {

/// Complex baseband sample block with its sample rate and start time.
struct IqSignal {
    std::vector<cplx> samples;
    double sample_rate_hz = 0.0;
    double t0_s = 0.0;

    std::size_t size() const { return samples.size(); }

    double duration_s() const {
        return static_cast<double>(samples.size()) / sample_rate_hz;
    }

    double energy() const {
        double e = 0.0;
        for (const auto& s : samples) e += std::norm(s);
        return e;
    }

    void validate() const {
        if (samples.empty()) throw StructureError("iq signal: no samples");
        if (!(sample_rate_hz > 0))
            throw StructureError("iq signal: sample_rate_hz must be > 0");
    }
};

} // namespace hdfmcw
