//
// Copyright 2026 The Skylift Authors.
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <stdexcept>
#include <string>

namespace skylift {

/// Invalid user input: malformed config, bad flags, missing files.
/// The CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A computation that could not be completed on otherwise valid input
/// (grid too large, NaN loss, no feasible iterate). CLI exit code 1.
struct ComputeError : std::runtime_error {
    explicit ComputeError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace skylift
