// SPDX-License-Identifier: Apache-2.0
#include "flowpinn/point_set.hpp"

#include <algorithm>
#include <cmath>

#include "flowpinn/errors.hpp"

namespace flowpinn {

const char* field_name(Field f) {
    switch (f) {
        case Field::U:
            return "u";
        case Field::V:
            return "v";
        case Field::P:
            return "p";
    }
    return "?";
}

std::size_t PointSet::count(Field f) const {
    std::size_t n = 0;
    for (char m : mask[static_cast<int>(f)]) n += m != 0;
    return n;
}

void PointSet::add(double px, double py, std::optional<double> u, std::optional<double> v,
                   std::optional<double> p, std::optional<double> nu) {
    if (nu.has_value() != has_nu_eff() && !empty()) {
        throw DataError("effective viscosity must be given for all points or none");
    }
    x.push_back(px);
    y.push_back(py);
    const std::optional<double> vals[] = {u, v, p};
    for (int k = 0; k < 3; ++k) {
        label[k].push_back(vals[k].value_or(0.0));
        mask[k].push_back(vals[k].has_value() ? 1 : 0);
    }
    if (nu) nu_eff.push_back(*nu);
}

void PointSet::hide(Field f) {
    auto& m = mask[static_cast<int>(f)];
    std::fill(m.begin(), m.end(), 0);
}

PointSet PointSet::subset(std::span<const std::size_t> indices) const {
    PointSet out;
    out.x.reserve(indices.size());
    out.y.reserve(indices.size());
    for (std::size_t i : indices) {
        if (i >= size()) throw DataError("subset index out of range");
        out.x.push_back(x[i]);
        out.y.push_back(y[i]);
        for (int k = 0; k < 3; ++k) {
            out.label[k].push_back(label[k][i]);
            out.mask[k].push_back(mask[k][i]);
        }
        if (has_nu_eff()) out.nu_eff.push_back(nu_eff[i]);
    }
    return out;
}

void PointSet::append(const PointSet& other) {
    if (!empty() && !other.empty() && has_nu_eff() != other.has_nu_eff()) {
        throw DataError("cannot append point sets that disagree on effective viscosity");
    }
    x.insert(x.end(), other.x.begin(), other.x.end());
    y.insert(y.end(), other.y.begin(), other.y.end());
    for (int k = 0; k < 3; ++k) {
        label[k].insert(label[k].end(), other.label[k].begin(), other.label[k].end());
        mask[k].insert(mask[k].end(), other.mask[k].begin(), other.mask[k].end());
    }
    nu_eff.insert(nu_eff.end(), other.nu_eff.begin(), other.nu_eff.end());
}

void PointSet::validate(const std::string& what) const {
    const std::size_t n = size();
    if (y.size() != n) throw DataError(what + ": x and y differ in length");
    for (int k = 0; k < 3; ++k) {
        if (label[k].size() != n || mask[k].size() != n) {
            throw DataError(what + ": label/mask arrays for field " + field_name(static_cast<Field>(k)) +
                            " differ in length from the coordinates");
        }
    }
    if (!nu_eff.empty() && nu_eff.size() != n) throw DataError(what + ": nu_eff length mismatch");
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
            throw DataError(what + ": non-finite coordinate at point " + std::to_string(i));
        }
        for (int k = 0; k < 3; ++k) {
            if (mask[k][i] && !std::isfinite(label[k][i])) {
                throw DataError(what + ": non-finite " + field_name(static_cast<Field>(k)) + " label at point " +
                                std::to_string(i));
            }
        }
    }
}

void PeriodicPairs::validate() const {
    lower.validate("periodic lower set");
    upper.validate("periodic upper set");
    for (const auto& [lo, up] : pairs) {
        if (lo >= lower.size() || up >= upper.size()) throw DataError("periodic pair index out of range");
        if (std::abs(lower.x[lo] - upper.x[up]) > 1e-9) {
            throw DataError("periodic pair (" + std::to_string(lo) + ", " + std::to_string(up) +
                            ") does not share x");
        }
        if (std::abs((upper.y[up] - lower.y[lo]) - pitch) > 1e-9) {
            throw DataError("periodic pair (" + std::to_string(lo) + ", " + std::to_string(up) +
                            ") is not offset by the pitch");
        }
    }
}

}  // namespace flowpinn
