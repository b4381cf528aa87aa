// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

namespace fdnas {

/// Runs fn(0..n-1) on up to `threads` workers and waits for all of them.
/// If any call throws, the exception of the lowest failing index is rethrown.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

}  // namespace fdnas
