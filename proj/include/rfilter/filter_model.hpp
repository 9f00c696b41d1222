#pragma once

#include "rfilter/field.hpp"
#include "rfilter/rough_sde.hpp"

#include <limits>
#include <string>
#include <vector>

namespace rfilter {

enum class DriftForm { ito, stratonovich };

/**
 * @brief Signal-observation model with correlated noise.
 *
 * Under P:  dX = l0 dt + sum_k Z_k dW^k + sum_j L_j dB^j,  dY = h dt + dW.
 * All coefficient fields take the concatenated argument z = (x, y).
 * The drift is stored as given: the Ito drift under the reference measure
 * (l0bar = l0 - sum_k Z_k h^k) or the Stratonovich drift L0.
 */
struct FilterModel {
    std::string name;
    std::size_t dx = 0;
    std::size_t dy = 0;
    std::size_t db = 0;
    Field h;                  // R^{dx+dy} -> R^{dy}
    std::vector<Field> z;     // dy columns R^{dx+dy} -> R^{dx}; empty means Z = 0
    Field drift;              // R^{dx+dy} -> R^{dx}
    DriftForm drift_form = DriftForm::ito;
    std::vector<Field> l;     // db columns R^{dx+dy} -> R^{dx}
    InitialLaw x0;
    double h_bound = std::numeric_limits<double>::infinity();  // declared, not checked

    void validate() const;
    bool correlated() const { return !z.empty(); }
    /// L0 (Stratonovich form of the reference-measure drift).
    Field stratonovich_drift() const;
    /// l0bar (Ito drift under the reference measure).
    Field ito_drift() const;
    /// l0 = l0bar + sum_k Z_k h^k, the Ito drift under P.
    Field signal_drift() const;
};

/// L0^j = l0bar^j - 1/2 sum_k sum_i d_{x_i} Z_k^j Z_k^i - 1/2 sum_k d_{y_k} Z_k^j.
Field stratonovich_drift_correction(const Field& l0_bar, const std::vector<Field>& z, std::size_t dx, std::size_t dy);
/// Inverse of stratonovich_drift_correction.
Field ito_drift_from_stratonovich(const Field& l0, const std::vector<Field>& z, std::size_t dx, std::size_t dy);

/// Index layout of the filtering state S = (X, Y, I).
struct FilterLayout {
    std::size_t dx = 0;
    std::size_t dy = 0;
    std::size_t ds() const { return dx + dy + 1; }
    std::size_t y_offset() const { return dx; }
    std::size_t i_index() const { return dx + dy; }
};

struct FilterSystem {
    RoughDriftSystem system;
    FilterLayout layout;
};

/**
 * Columns c_k = (Z_k, e_k, h^k); drift (L0, 0, -1/2 sum_k (D_k h^k + (h^k)^2));
 * diffusion (L_j, 0, 0). D_k h^k is a central difference of h^k along c_k.
 */
FilterSystem build_filter_system(const FilterModel& model);

}  // namespace rfilter
