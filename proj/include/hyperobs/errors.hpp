#pragma once

#include <stdexcept>
#include <string>

namespace hyperobs {

enum class ErrorKind {
	OverlappingTailsHeads,
	WeightSumViolation,
	NegativeWeight,
	NodeOutOfRange,
	EmptyEdgeSide,
	LayerTooSmall,
	DimensionMismatch,
	MissingMeasurement,
	SubsetNotHeadClosed,
	MissingOutsideError,
	EmptySampleSet,
	QNotSPD,
	SubsetTooLarge,
	NonpositiveMargin,
	Infeasible,
	NoMeasuredNodes,
	AllMeasured,
	EmptyTrajectorySet,
	OrderViolation,
	ZeroInitialError,
	InvalidArgument,
	ConfigError,
};

inline const char* to_string(ErrorKind k)
{
	switch (k) {
	case ErrorKind::OverlappingTailsHeads: return "OverlappingTailsHeads";
	case ErrorKind::WeightSumViolation: return "WeightSumViolation";
	case ErrorKind::NegativeWeight: return "NegativeWeight";
	case ErrorKind::NodeOutOfRange: return "NodeOutOfRange";
	case ErrorKind::EmptyEdgeSide: return "EmptyEdgeSide";
	case ErrorKind::LayerTooSmall: return "LayerTooSmall";
	case ErrorKind::DimensionMismatch: return "DimensionMismatch";
	case ErrorKind::MissingMeasurement: return "MissingMeasurement";
	case ErrorKind::SubsetNotHeadClosed: return "SubsetNotHeadClosed";
	case ErrorKind::MissingOutsideError: return "MissingOutsideError";
	case ErrorKind::EmptySampleSet: return "EmptySampleSet";
	case ErrorKind::QNotSPD: return "QNotSPD";
	case ErrorKind::SubsetTooLarge: return "SubsetTooLarge";
	case ErrorKind::NonpositiveMargin: return "NonpositiveMargin";
	case ErrorKind::Infeasible: return "Infeasible";
	case ErrorKind::NoMeasuredNodes: return "NoMeasuredNodes";
	case ErrorKind::AllMeasured: return "AllMeasured";
	case ErrorKind::EmptyTrajectorySet: return "EmptyTrajectorySet";
	case ErrorKind::OrderViolation: return "OrderViolation";
	case ErrorKind::ZeroInitialError: return "ZeroInitialError";
	case ErrorKind::InvalidArgument: return "InvalidArgument";
	case ErrorKind::ConfigError: return "ConfigError";
	}
	return "Unknown";
}

/// Exception carrying a machine-readable kind alongside the message.
class Error : public std::runtime_error {
public:
	Error(ErrorKind kind, const std::string& what)
		: std::runtime_error(std::string(to_string(kind)) + ": " + what)
		, kind_(kind)
	{
	}

	ErrorKind kind() const noexcept { return kind_; }

private:
	ErrorKind kind_;
};

} // namespace hyperobs
