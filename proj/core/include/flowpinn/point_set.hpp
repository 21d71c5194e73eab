// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace flowpinn {

enum class Field : int { U = 0, V = 1, P = 2 };

inline constexpr std::array<Field, 3> kAllFields = {Field::U, Field::V, Field::P};

const char* field_name(Field f);

/// Coordinates with optional per-field labels. Every array has one entry per
/// point; a label entry is only meaningful where its mask is set.
struct PointSet {
    std::vector<double> x, y;
    std::array<std::vector<double>, 3> label;
    std::array<std::vector<char>, 3> mask;
    std::vector<double> nu_eff;  // empty, or one entry per point

    std::size_t size() const { return x.size(); }
    bool empty() const { return x.empty(); }

    bool has(Field f, std::size_t i) const { return mask[static_cast<int>(f)][i] != 0; }
    double value(Field f, std::size_t i) const { return label[static_cast<int>(f)][i]; }
    std::vector<double>& labels(Field f) { return label[static_cast<int>(f)]; }
    const std::vector<double>& labels(Field f) const { return label[static_cast<int>(f)]; }
    std::size_t count(Field f) const;
    bool has_nu_eff() const { return !nu_eff.empty(); }

    /// Appends a point; unset optionals leave the field masked out.
    void add(double px, double py, std::optional<double> u = {}, std::optional<double> v = {},
             std::optional<double> p = {}, std::optional<double> nu = {});
    /// Clears a field's mask for every point (the values stay untouched).
    void hide(Field f);
    PointSet subset(std::span<const std::size_t> indices) const;
    void append(const PointSet& other);

    /// Throws DataError naming `what` if lengths disagree or coordinates are not finite.
    void validate(const std::string& what) const;
};

/// Matched points on the lower and upper periodic boundaries.
struct PeriodicPairs {
    PointSet lower;
    PointSet upper;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (index into lower, index into upper)
    double pitch = 0.0;

    std::size_t size() const { return pairs.size(); }
    bool empty() const { return pairs.empty(); }

    /// Paired points share x and are offset by `pitch` in y (to 1e-9).
    void validate() const;
};

}  // namespace flowpinn
