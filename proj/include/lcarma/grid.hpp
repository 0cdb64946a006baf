#pragma once

#include <cstddef>
#include <vector>

namespace lcarma {

// Uniform rectilinear grid, row-major (last axis fastest). Point i along axis j
// sits at origin[j] + i*spacing[j]; each point is the centre of a cell.
struct GridSpec {
    std::vector<std::size_t> counts;
    std::vector<double> spacing;
    std::vector<double> origin;

    std::size_t dim() const { return counts.size(); }
    std::size_t size() const;
    double cell_volume() const;

    void unravel(std::size_t flat, std::vector<std::size_t>& idx) const;
    std::size_t ravel(const std::vector<std::size_t>& idx) const;
    void point(std::size_t flat, std::vector<double>& x) const;
    double norm_at(std::size_t flat) const;

    // Radius of the largest origin-centred ball whose points all lie on the grid box.
    double inscribed_radius() const;

    bool same_shape(const GridSpec& other) const;
    bool operator==(const GridSpec& other) const;

    // Throws ArgumentError on empty/inconsistent specs or non-positive spacing.
    void validate() const;

    // Lag grid: origin = -floor(n/2)*h so that 0 is a grid point.
    static GridSpec centered(std::vector<std::size_t> counts, std::vector<double> spacing);
    static GridSpec centered(std::size_t d, std::size_t n, double h);
};

// Index of the lag-0 point of a centred grid along one axis.
inline std::size_t center_index(std::size_t n) { return n / 2; }

// Reorders a centred grid array so that lag 0 lands at index 0 (and back).
std::vector<double> to_wrapped(const GridSpec& g, const std::vector<double>& centred);
std::vector<double> from_wrapped(const GridSpec& g, const std::vector<double>& wrapped);

}  // namespace lcarma

namespace lcarma {

// Real samples on a grid.
struct GridFunction {
    GridSpec grid;
    std::vector<double> values;
};

// Deterministic direction set on the unit sphere in R^d: coordinate axes,
// pairwise diagonals (e_i +- e_j)/sqrt2, and for d = 2 an additional uniform
// angular set of `ring` points.
std::vector<std::vector<double>> sphere_directions(std::size_t d, std::size_t ring = 32);

}  // namespace lcarma
