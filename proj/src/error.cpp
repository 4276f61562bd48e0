#include "ctrvis/error.hpp"

namespace ctrvis {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
        case ErrorCode::CorruptPayload: return "CorruptPayload";
        case ErrorCode::DegenerateImage: return "DegenerateImage";
        case ErrorCode::ExternalToolFailure: return "ExternalToolFailure";
        case ErrorCode::RankDeficient: return "RankDeficient";
        case ErrorCode::NonConvergence: return "NonConvergence";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::DegenerateVariance: return "DegenerateVariance";
        case ErrorCode::InsufficientData: return "InsufficientData";
        case ErrorCode::ZeroVariance: return "ZeroVariance";
        case ErrorCode::ZeroEntropy: return "ZeroEntropy";
        case ErrorCode::EmptyDataset: return "EmptyDataset";
        case ErrorCode::ManifestParseError: return "ManifestParseError";
        case ErrorCode::AllExtractionsFailed: return "AllExtractionsFailed";
        case ErrorCode::FingerprintMismatch: return "FingerprintMismatch";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

}  // namespace ctrvis
