#pragma once

#include <stdexcept>
#include <string>

namespace kls {

enum class Errc {
  invalid_argument = 1,
  invalid_density,
  degenerate_measure,
  unsupported_point,
  grid_mismatch,
  numeric_error,
  degenerate_kernel,
  unsupported,
  hypothesis_violated,
  insufficient_data,
  insufficient_rank,
};

const char* errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace kls
