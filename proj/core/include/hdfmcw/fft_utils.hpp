#pragma once

#include <span>
#include <vector>

#include "hdfmcw/common.hpp"

namespace hdfmcw {

/**
 * Unitary DFT pair backed by FFTW.
 *
 * Both directions are scaled by 1/sqrt(length) so that Parseval holds
 * exactly and forward/inverse round-trips are the identity.  Plans are
 * cached per (length, direction) behind a mutex; execution is thread-safe.
 */
std::vector<cplx> fft_forward(std::span<const cplx> in);
std::vector<cplx> fft_inverse(std::span<const cplx> in);

} // namespace hdfmcw
