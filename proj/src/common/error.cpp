#include "studio/error.hpp"

namespace studio {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::adapter_unavailable: return "AdapterUnavailable";
    case Errc::adapter_error: return "AdapterError";
    case Errc::decode_error: return "DecodeError";
    case Errc::shape_error: return "ShapeError";
    case Errc::stage_exceeded: return "StageExceeded";
    case Errc::stage_order_error: return "StageOrderError";
    case Errc::numerical_error: return "NumericalError";
    case Errc::insufficient_data: return "InsufficientData";
    case Errc::insufficient_samples: return "InsufficientSamples";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::config_error: return "ConfigError";
    case Errc::divergence_error: return "DivergenceError";
    case Errc::not_found: return "NotFound";
    case Errc::unknown_asset: return "UnknownAsset";
    case Errc::empty_selection: return "EmptySelection";
    case Errc::muxer_unavailable: return "MuxerUnavailable";
    case Errc::duration_mismatch: return "DurationMismatch";
    case Errc::io_error: return "IoError";
    case Errc::invalid_argument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace studio
