// spectrum.hpp — coupled-mode (one-excitation) matrix of the cavity-magnon
// Hamiltonian, polariton branch diagrams, and avoided-crossing extraction.
//
// The beam-splitter Hamiltonian conserves the total excitation number, so
// polariton energies are eigenvalues of the (1 + n_magnons)-dimensional
// single-excitation block: diagonal carries the bare mode frequencies at a
// given field, the first row/column carries the collective couplings, and
// there is no direct magnon-magnon coupling.

#pragma once

#include <cstddef>
#include <sstream>
#include <utility>
#include <vector>

#include "magnonics/eigen.hpp"
#include "magnonics/model.hpp"

namespace magnonics {

/// Real symmetric coupled-mode matrix at one static field. Index 0 is the
/// cavity; indices 1..n are magnon modes in system order. Entries in Hz.
struct ModeMatrix {
    std::size_t dim = 0;
    SquareMatrix entries;
};

/// Branch frequencies versus field. branches[i] holds the dim eigenfrequencies
/// at field_values[i], sorted ascending; cavity_weight[i][k] is the squared
/// cavity amplitude of branch k (in [0, 1], weights over branches sum to 1).
struct BranchDiagram {
    std::vector<double> field_values;
    std::vector<std::vector<double>> branches;
    std::vector<std::vector<double>> cavity_weight;
};

/// Result of an avoided-crossing scan between two branches.
/// at_boundary flags a minimum attained at the first or last field, meaning
/// the sweep probably does not span the crossing.
struct AvoidedCrossing {
    double min_gap = 0.0;      // Hz
    double field_at_min = 0.0; // tesla
    bool at_boundary = false;
};

inline ModeMatrix build_mode_matrix(const HybridSystem& system, double field_t) {
    require_valid(system);
    if (!std::isfinite(field_t)) throw std::invalid_argument("build_mode_matrix: field must be finite");

    const std::size_t dim = 1 + system.magnons.size();
    ModeMatrix m;
    m.dim = dim;
    m.entries = SquareMatrix(dim);
    m.entries.at(0, 0) = system.cavity.omega_c;
    for (std::size_t k = 0; k < system.magnons.size(); ++k) {
        const auto& mode = system.magnons[k];
        m.entries.at(k + 1, k + 1) = mode.frequency_at(field_t);
        m.entries.at(0, k + 1) = mode.g_tilde;
        m.entries.at(k + 1, 0) = mode.g_tilde;
    }
    return m;
}

/// Diagonalize the mode matrix at each field. Fields may be in any order;
/// results are reported in the given order.
inline BranchDiagram polariton_branches(const HybridSystem& system, const std::vector<double>& fields) {
    require_valid(system);
    if (fields.empty()) throw std::invalid_argument("polariton_branches: need at least one field value");

    BranchDiagram diagram;
    diagram.field_values = fields;
    diagram.branches.reserve(fields.size());
    diagram.cavity_weight.reserve(fields.size());

    for (double b : fields) {
        const ModeMatrix m = build_mode_matrix(system, b);
        EigenDecomposition eig;
        try {
            eig = eigen_symmetric(m.entries);
        } catch (const eigen_error& err) {
            std::ostringstream msg;
            msg << "polariton_branches: eigen solve failed at B = " << b << " T: " << err.what();
            throw model_error(msg.str());
        }
        std::vector<double> weights(m.dim);
        for (std::size_t k = 0; k < m.dim; ++k) {
            weights[k] = eig.vectors[k][0] * eig.vectors[k][0];
        }
        diagram.branches.push_back(std::move(eig.values));
        diagram.cavity_weight.push_back(std::move(weights));
    }
    return diagram;
}

namespace detail {

/// Vertex of the parabola through three points; falls back to the middle
/// point when the three are collinear (or the middle is not a strict min).
inline std::pair<double, double> parabola_vertex(double x0, double y0, double x1, double y1, double x2, double y2) {
    const double d0 = (y0 - y1) / (x0 - x1);
    const double d1 = (y2 - y1) / (x2 - x1);
    const double curv = (d1 - d0) / (x2 - x0);
    if (!(curv > 0.0) || !std::isfinite(curv)) return {x1, y1};
    // quadratic through the 3 points: y = y1 + d0*(x-x1) + curv*(x-x0)*(x-x1) rearranged
    const double xv = 0.5 * (x0 + x1 - d0 / curv);
    const double yv = y1 + d0 * (xv - x1) + curv * (xv - x0) * (xv - x1);
    return {xv, yv};
}

} // namespace detail

/// Minimum gap between two branches over a field sweep, refined by local
/// quadratic interpolation of the squared gap around the discrete minimum.
/// The squared gap of a two-mode anticrossing is exactly quadratic in field,
/// so the refinement is exact there (including the uncoupled g = 0 kink).
inline AvoidedCrossing avoided_crossing(const HybridSystem& system, const std::vector<double>& fields,
                                        std::pair<std::size_t, std::size_t> branch_pair) {
    const BranchDiagram diagram = polariton_branches(system, fields);
    const std::size_t dim = diagram.branches.front().size();
    const auto [lo, hi] = branch_pair;
    if (lo >= dim || hi >= dim || lo == hi) {
        throw std::invalid_argument("avoided_crossing: branch indices out of range");
    }

    std::vector<double> gap2(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i) {
        const double g = diagram.branches[i][hi] - diagram.branches[i][lo];
        gap2[i] = g * g;
    }
    std::size_t arg = 0;
    for (std::size_t i = 1; i < gap2.size(); ++i) {
        if (gap2[i] < gap2[arg]) arg = i;
    }

    AvoidedCrossing result;
    if (arg == 0 || arg + 1 == gap2.size()) {
        result.min_gap = std::sqrt(gap2[arg]);
        result.field_at_min = fields[arg];
        result.at_boundary = true;
        return result;
    }
    const auto [bv, gv] = detail::parabola_vertex(fields[arg - 1], gap2[arg - 1], fields[arg], gap2[arg],
                                                  fields[arg + 1], gap2[arg + 1]);
    result.min_gap = std::sqrt(std::max(gv, 0.0));
    result.field_at_min = bv;
    result.at_boundary = false;
    return result;
}

} // namespace magnonics
