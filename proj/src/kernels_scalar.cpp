#include "aqmsim/kernels.hpp"

#include "aqmsim/bitops.hpp"

namespace aqmsim::kernels {

void scaled_shift_scalar(const std::int64_t* sojourn, const std::uint32_t* b_enq,
                         const std::uint32_t* b_deq, std::size_t n,
                         std::int64_t* lg_out, std::int64_t* clz_out) {
    for (std::size_t i = 0; i < n; ++i) {
        lg_out[i] = shift_time(sojourn[i], lg_shift_amount(b_deq[i], b_enq[i]));
        clz_out[i] = shift_time(sojourn[i], clz_shift_amount(b_deq[i], b_enq[i]));
    }
}

} // namespace aqmsim::kernels
