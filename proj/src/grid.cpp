#include "lcarma/grid.hpp"

#include <cmath>
#include <limits>

#include "lcarma/errors.hpp"

namespace lcarma {

std::size_t GridSpec::size() const {
    std::size_t n = 1;
    for (auto c : counts) n *= c;
    return counts.empty() ? 0 : n;
}

double GridSpec::cell_volume() const {
    double v = 1.0;
    for (double h : spacing) v *= h;
    return v;
}

void GridSpec::unravel(std::size_t flat, std::vector<std::size_t>& idx) const {
    idx.resize(dim());
    for (std::size_t j = dim(); j-- > 0;) {
        idx[j] = flat % counts[j];
        flat /= counts[j];
    }
}

std::size_t GridSpec::ravel(const std::vector<std::size_t>& idx) const {
    std::size_t flat = 0;
    for (std::size_t j = 0; j < dim(); ++j) flat = flat * counts[j] + idx[j];
    return flat;
}

void GridSpec::point(std::size_t flat, std::vector<double>& x) const {
    x.resize(dim());
    for (std::size_t j = dim(); j-- > 0;) {
        x[j] = origin[j] + static_cast<double>(flat % counts[j]) * spacing[j];
        flat /= counts[j];
    }
}

double GridSpec::norm_at(std::size_t flat) const {
    double s = 0.0;
    for (std::size_t j = dim(); j-- > 0;) {
        double x = origin[j] + static_cast<double>(flat % counts[j]) * spacing[j];
        s += x * x;
        flat /= counts[j];
    }
    return std::sqrt(s);
}

double GridSpec::inscribed_radius() const {
    double r = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < dim(); ++j) {
        double lo = -origin[j];
        double hi = origin[j] + static_cast<double>(counts[j] - 1) * spacing[j];
        r = std::min(r, std::min(lo, hi));
    }
    return std::max(r, 0.0);
}

bool GridSpec::same_shape(const GridSpec& other) const {
    if (counts != other.counts || spacing.size() != other.spacing.size()) return false;
    for (std::size_t j = 0; j < spacing.size(); ++j) {
        if (std::abs(spacing[j] - other.spacing[j]) > 1e-12 * spacing[j]) return false;
    }
    return true;
}

bool GridSpec::operator==(const GridSpec& other) const {
    return counts == other.counts && spacing == other.spacing && origin == other.origin;
}

void GridSpec::validate() const {
    if (counts.empty()) throw ArgumentError("grid: dimension must be positive");
    if (spacing.size() != counts.size() || origin.size() != counts.size())
        throw ArgumentError("grid: counts, spacing and origin must have equal length");
    for (std::size_t j = 0; j < dim(); ++j) {
        if (counts[j] == 0) throw ArgumentError("grid: zero cell count on an axis");
        if (!(spacing[j] > 0.0) || !std::isfinite(spacing[j]))
            throw ArgumentError("grid: spacing must be positive and finite");
        if (!std::isfinite(origin[j])) throw ArgumentError("grid: origin must be finite");
    }
}

GridSpec GridSpec::centered(std::vector<std::size_t> counts, std::vector<double> spacing) {
    GridSpec g;
    g.counts = std::move(counts);
    g.spacing = std::move(spacing);
    g.origin.resize(g.counts.size());
    for (std::size_t j = 0; j < g.counts.size() && j < g.spacing.size(); ++j)
        g.origin[j] = -static_cast<double>(center_index(g.counts[j])) * g.spacing[j];
    g.validate();
    return g;
}

GridSpec GridSpec::centered(std::size_t d, std::size_t n, double h) {
    return centered(std::vector<std::size_t>(d, n), std::vector<double>(d, h));
}

namespace {

std::vector<double> roll(const GridSpec& g, const std::vector<double>& in, bool forward) {
    std::vector<double> out(in.size());
    std::vector<std::size_t> idx, dst(g.dim());
    for (std::size_t flat = 0; flat < in.size(); ++flat) {
        g.unravel(flat, idx);
        for (std::size_t j = 0; j < g.dim(); ++j) {
            std::size_t n = g.counts[j], c = center_index(n);
            dst[j] = forward ? (idx[j] + n - c) % n : (idx[j] + c) % n;
        }
        out[g.ravel(dst)] = in[flat];
    }
    return out;
}

}  // namespace

std::vector<double> to_wrapped(const GridSpec& g, const std::vector<double>& centred) {
    return roll(g, centred, true);
}

std::vector<double> from_wrapped(const GridSpec& g, const std::vector<double>& wrapped) {
    return roll(g, wrapped, false);
}

}  // namespace lcarma

#include <numbers>

namespace lcarma {

std::vector<std::vector<double>> sphere_directions(std::size_t d, std::size_t ring) {
    std::vector<std::vector<double>> dirs;
    if (d == 1) return {{1.0}, {-1.0}};
    for (std::size_t i = 0; i < d; ++i) {
        for (double s : {1.0, -1.0}) {
            std::vector<double> u(d, 0.0);
            u[i] = s;
            dirs.push_back(u);
        }
    }
    const double r = 1.0 / std::sqrt(2.0);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i + 1; j < d; ++j) {
            for (double si : {1.0, -1.0}) {
                for (double sj : {1.0, -1.0}) {
                    std::vector<double> u(d, 0.0);
                    u[i] = si * r;
                    u[j] = sj * r;
                    dirs.push_back(u);
                }
            }
        }
    }
    if (d == 2) {
        for (std::size_t k = 0; k < ring; ++k) {
            double a = 2.0 * std::numbers::pi * (static_cast<double>(k) + 0.5) / static_cast<double>(ring);
            dirs.push_back({std::cos(a), std::sin(a)});
        }
    }
    return dirs;
}

}  // namespace lcarma
