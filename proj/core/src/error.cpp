// Copyright 2026 The scenecomp Authors
// SPDX-License-Identifier: Apache-2.0

#include "scenecomp/error.hpp"

namespace scenecomp {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::MissingAsset: return "MissingAsset";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::InvalidPose: return "InvalidPose";
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::DegenerateMesh: return "DegenerateMesh";
        case ErrorKind::IoError: return "IoError";
        case ErrorKind::DegenerateInput: return "DegenerateInput";
        case ErrorKind::NoPlaceableRegion: return "NoPlaceableRegion";
        case ErrorKind::PlaneFitFailed: return "PlaneFitFailed";
        case ErrorKind::InsufficientAnchors: return "InsufficientAnchors";
        case ErrorKind::OutOfRangeInput: return "OutOfRangeInput";
        case ErrorKind::EmptyBatch: return "EmptyBatch";
        case ErrorKind::ShapeMismatch: return "ShapeMismatch";
        case ErrorKind::NonFiniteGradient: return "NonFiniteGradient";
        case ErrorKind::PluginNotFound: return "PluginNotFound";
        case ErrorKind::PluginTimeout: return "PluginTimeout";
        case ErrorKind::BadPluginOutput: return "BadPluginOutput";
        case ErrorKind::InsufficientData: return "InsufficientData";
        case ErrorKind::EmptyInput: return "EmptyInput";
        case ErrorKind::NumericalFailure: return "NumericalFailure";
        case ErrorKind::InvalidConfig: return "InvalidConfig";
    }
    return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

}  // namespace scenecomp
