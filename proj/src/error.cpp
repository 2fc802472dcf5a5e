#include "tracelink/error.hpp"

namespace tracelink {

const char* error_kind_name(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::MalformedHeader: return "MalformedHeader";
    case ErrorKind::MalformedRecord: return "MalformedRecord";
    case ErrorKind::MalformedValue: return "MalformedValue";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::CountMismatch: return "CountMismatch";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::IdOrderMismatch: return "IdOrderMismatch";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::ModelMismatch: return "ModelMismatch";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::SelfLink: return "SelfLink";
    case ErrorKind::MissingId: return "MissingId";
    case ErrorKind::StaleCache: return "StaleCache";
    case ErrorKind::NoNegativesAvailable: return "NoNegativesAvailable";
    case ErrorKind::MalformedModelFile: return "MalformedModelFile";
    case ErrorKind::UnknownTag: return "UnknownTag";
    case ErrorKind::UnknownMetricTag: return "UnknownMetricTag";
    case ErrorKind::EmptyQuery: return "EmptyQuery";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    }
    return "Error";
}

} // namespace tracelink
