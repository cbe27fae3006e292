// Copyright 2026 The scenecomp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace scenecomp {

enum class ErrorKind {
    MissingAsset,
    DimensionMismatch,
    InvalidPose,
    ParseError,
    DegenerateMesh,
    IoError,
    DegenerateInput,
    NoPlaceableRegion,
    PlaneFitFailed,
    InsufficientAnchors,
    OutOfRangeInput,
    EmptyBatch,
    ShapeMismatch,
    NonFiniteGradient,
    PluginNotFound,
    PluginTimeout,
    BadPluginOutput,
    InsufficientData,
    EmptyInput,
    NumericalFailure,
    InvalidConfig,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message);

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace scenecomp
