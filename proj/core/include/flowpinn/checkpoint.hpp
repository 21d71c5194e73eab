// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "flowpinn/data.hpp"
#include "flowpinn/network.hpp"

namespace flowpinn {

/// Everything needed to resume or evaluate a run. Doubles are stored as
/// their exact bit patterns, so save/load round-trips bit-identically.
struct Checkpoint {
    ParamVector params;
    std::optional<AdamState> optimizer;
    std::uint64_t seed = 0;
    std::uint64_t epoch = 0;
    Scales scales;
    std::string problem;  // free-form tag, e.g. "kovasznay forward"
};

std::string serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);
/// Throws DataError for a missing, truncated or foreign file.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace flowpinn
