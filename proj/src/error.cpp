#include "gdnn/error.hpp"

namespace gdnn {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::CapExceeded: return "CapExceeded";
    case ErrorCode::UnknownName: return "UnknownName";
    case ErrorCode::PartitionInvalid: return "PartitionInvalid";
    case ErrorCode::NotInFixedSpace: return "NotInFixedSpace";
    case ErrorCode::InvalidPair: return "InvalidPair";
    case ErrorCode::NotIrreducible: return "NotIrreducible";
    case ErrorCode::PrefixNotAdmissible: return "PrefixNotAdmissible";
    case ErrorCode::NotOrdinaryPerm: return "NotOrdinaryPerm";
    case ErrorCode::SizeCap: return "SizeCap";
    case ErrorCode::NotAdmissible: return "NotAdmissible";
    case ErrorCode::BasisEmpty: return "BasisEmpty";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::UnknownScheme: return "UnknownScheme";
    case ErrorCode::NotEquivariant: return "NotEquivariant";
    case ErrorCode::NotInSpan: return "NotInSpan";
    case ErrorCode::BadDimension: return "BadDimension";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

}  // namespace gdnn
