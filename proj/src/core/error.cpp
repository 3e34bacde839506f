#include "kls/error.hpp"

namespace kls {

const char* errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_argument: return "invalid-argument";
    case Errc::invalid_density: return "invalid-density";
    case Errc::degenerate_measure: return "degenerate-measure";
    case Errc::unsupported_point: return "unsupported-point";
    case Errc::grid_mismatch: return "grid-mismatch";
    case Errc::numeric_error: return "numeric-error";
    case Errc::degenerate_kernel: return "degenerate-kernel";
    case Errc::unsupported: return "unsupported";
    case Errc::hypothesis_violated: return "hypothesis-violated";
    case Errc::insufficient_data: return "insufficient-data";
    case Errc::insufficient_rank: return "insufficient-rank";
  }
  return "unknown";
}

}  // namespace kls
