#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace studio {

enum class Errc {
  adapter_unavailable,
  adapter_error,
  decode_error,
  shape_error,
  stage_exceeded,
  stage_order_error,
  numerical_error,
  insufficient_data,
  insufficient_samples,
  dimension_mismatch,
  config_error,
  divergence_error,
  not_found,
  unknown_asset,
  empty_selection,
  muxer_unavailable,
  duration_mismatch,
  io_error,
  invalid_argument,
};

std::string_view errc_name(Errc code) noexcept;

// Every failure surfaced by the library carries one of the codes above so that
// callers (CLI, HTTP layer) can map it without string matching.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace studio
