#include "permnet/error.hpp"

namespace permnet {

const char* errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::MalformedXml: return "MalformedXml";
    case Errc::MalformedLine: return "MalformedLine";
    case Errc::UnknownLabel: return "UnknownLabel";
    case Errc::HeaderMissing: return "HeaderMissing";
    case Errc::NonBinaryCell: return "NonBinaryCell";
    case Errc::LabelColumnMissing: return "LabelColumnMissing";
    case Errc::UnlabeledRecord: return "UnlabeledRecord";
    case Errc::InsufficientClassCount: return "InsufficientClassCount";
    case Errc::EmptyClass: return "EmptyClass";
    case Errc::EmptyDataset: return "EmptyDataset";
    case Errc::IncompatibleDims: return "IncompatibleDims";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::NonFiniteActivation: return "NonFiniteActivation";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::InvalidFormat: return "InvalidFormat";
    case Errc::UnsupportedLayer: return "UnsupportedLayer";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace permnet
