// Copyright (c) 2026, molre contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "molre/core/tensor.hpp"

namespace molre {

/// Learning-rate group of a trainable tensor.
enum class ParamGroup { Head = 0, Adapter = 1 };

struct ParamRef {
    std::string name;
    Tensor* tensor = nullptr;
    ParamGroup group = ParamGroup::Head;
};

}  // namespace molre
