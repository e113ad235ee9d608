#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ftx/errors.hpp"

namespace ftx {

enum class Shape { interval, box, ball };

inline const char* shape_name(Shape s) {
    switch (s) {
        case Shape::interval: return "interval";
        case Shape::box: return "box";
        case Shape::ball: return "ball";
    }
    return "?";
}

// Integer lattice direction. 1D uses {k, 0}.
using Dir = std::array<int, 2>;

// An orthogonal frame of lattice directions, e.g. {(1,0),(0,1)} or {(1,1),(1,-1)}.
using Frame = std::vector<Dir>;

inline std::vector<Frame> default_frames(int dim) {
    if (dim == 1) return {{Dir{1, 0}}};
    return {{Dir{1, 0}, Dir{0, 1}}, {Dir{1, 1}, Dir{1, -1}}};
}

inline int dir_norm2(const Dir& e) { return e[0] * e[0] + e[1] * e[1]; }

struct DomainSpec {
    Shape shape = Shape::interval;
    double extent = 1.0;           // half-width (interval/box) or radius (ball)
    double h = 1.0 / 16.0;         // lattice spacing
    double exterior_radius = 1.0;  // R of the exterior sphere condition

    int dim() const { return shape == Shape::interval ? 1 : 2; }

    void validate() const {
        if (!(h > 0.0)) throw ConfigError("domain.h must be > 0");
        if (!(extent > 0.0)) throw ConfigError("domain.extent must be > 0");
        if (!(exterior_radius > 0.0)) throw ConfigError("domain.R must be > 0");
        const double ratio = extent / h;
        const double rounded = std::round(ratio);
        if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio))
            throw ConfigError("domain.extent/domain.h must be a positive integer (got " +
                              std::to_string(ratio) + ")");
    }

    int cells() const { return static_cast<int>(std::round(extent / h)); }
};

// Discretized domain. Nodes are lattice points i*h classified as interior or
// boundary; ordering is lexicographic in (i2, i1) ascending, so x1 varies
// fastest. For shape=ball, boundary nodes are the lattice points outside or on
// the sphere reached by one stencil step from an interior node (h-accurate
// staircase boundary).
class Domain {
public:
    Domain(DomainSpec spec, std::vector<Frame> frames)
        : spec_(spec), frames_(std::move(frames)) {
        spec_.validate();
        if (frames_.empty()) frames_ = default_frames(spec_.dim());
        build();
    }

    const DomainSpec& spec() const { return spec_; }
    const std::vector<Frame>& frames() const { return frames_; }
    int dim() const { return spec_.dim(); }
    double h() const { return spec_.h; }
    double extent() const { return spec_.extent; }

    int node_count() const { return static_cast<int>(lattice_.size()); }
    int interior_count() const { return static_cast<int>(interior_.size()); }
    int boundary_count() const { return static_cast<int>(boundary_.size()); }
    const std::vector<int>& interior() const { return interior_; }
    const std::vector<int>& boundary() const { return boundary_; }

    bool is_interior(int id) const { return kind_[static_cast<std::size_t>(id)] == 0; }
    bool is_boundary(int id) const { return kind_[static_cast<std::size_t>(id)] == 1; }

    const Dir& lattice(int id) const { return lattice_[static_cast<std::size_t>(id)]; }

    std::array<double, 2> point(int id) const {
        const Dir& i = lattice_[static_cast<std::size_t>(id)];
        return {i[0] * spec_.h, i[1] * spec_.h};
    }

    // Node id at lattice coordinates, or -1 when absent.
    int id_at(int i1, int i2) const {
        const int m = cells_ + 1;
        if (i1 < -m || i1 > m || i2 < -m || i2 > m) return -1;
        return index_[static_cast<std::size_t>((i2 + m) * (2 * m + 1) + (i1 + m))];
    }

    int neighbor(int id, const Dir& e, int step = 1) const {
        const Dir& i = lattice_[static_cast<std::size_t>(id)];
        return id_at(i[0] + step * e[0], i[1] + step * e[1]);
    }

    double distance_to_boundary(int id) const {
        const auto p = point(id);
        const double r = std::hypot(p[0], p[1]);
        if (spec_.shape == Shape::ball) return spec_.extent - r;
        double d = spec_.extent - std::abs(p[0]);
        if (dim() == 2) d = std::min(d, spec_.extent - std::abs(p[1]));
        return d;
    }

    // Diameter of the continuous domain (used by barrier constants).
    double diameter() const {
        switch (spec_.shape) {
            case Shape::interval: return 2.0 * spec_.extent;
            case Shape::ball: return 2.0 * spec_.extent;
            case Shape::box: return 2.0 * spec_.extent * std::sqrt(2.0);
        }
        return 2.0 * spec_.extent;
    }

private:
    void build() {
        cells_ = spec_.cells();
        const int n = cells_;
        const int m = n + 1;  // ball boundary ring can overshoot by one cell
        const int side = 2 * m + 1;
        index_.assign(static_cast<std::size_t>(side) * side, -1);

        const int d = dim();
        auto inside_box = [&](int i1, int i2) {
            return std::abs(i1) <= n && (d == 1 ? i2 == 0 : std::abs(i2) <= n);
        };
        auto interior_test = [&](int i1, int i2) {
            if (!inside_box(i1, i2)) return false;
            if (spec_.shape == Shape::ball)
                return static_cast<long long>(i1) * i1 + static_cast<long long>(i2) * i2 <
                       static_cast<long long>(n) * n;
            if (d == 1) return std::abs(i1) < n;
            return std::abs(i1) < n && std::abs(i2) < n;
        };

        std::vector<Dir> keep;  // (i1,i2) of kept nodes, with kind
        std::vector<std::uint8_t> keep_kind;

        if (spec_.shape != Shape::ball) {
            const int lo2 = (d == 1) ? 0 : -n;
            const int hi2 = (d == 1) ? 0 : n;
            for (int i2 = lo2; i2 <= hi2; ++i2)
                for (int i1 = -n; i1 <= n; ++i1) {
                    keep.push_back(Dir{i1, i2});
                    keep_kind.push_back(interior_test(i1, i2) ? 0 : 1);
                }
        } else {
            // Mark interior, then sweep stencil steps to collect the boundary ring.
            std::vector<std::vector<std::uint8_t>> mark(
                static_cast<std::size_t>(side), std::vector<std::uint8_t>(side, 0));
            auto& mk = mark;
            for (int i2 = -n; i2 <= n; ++i2)
                for (int i1 = -n; i1 <= n; ++i1)
                    if (interior_test(i1, i2))
                        mk[static_cast<std::size_t>(i2 + m)][static_cast<std::size_t>(i1 + m)] = 1;
            for (int i2 = -n; i2 <= n; ++i2)
                for (int i1 = -n; i1 <= n; ++i1) {
                    if (!mk[static_cast<std::size_t>(i2 + m)][static_cast<std::size_t>(i1 + m)])
                        continue;
                    for (const auto& frame : frames_)
                        for (const auto& e : frame)
                            for (int s : {-1, 1}) {
                                const int j1 = i1 + s * e[0];
                                const int j2 = i2 + s * e[1];
                                if (!mk[static_cast<std::size_t>(j2 + m)]
                                       [static_cast<std::size_t>(j1 + m)])
                                    mk[static_cast<std::size_t>(j2 + m)]
                                      [static_cast<std::size_t>(j1 + m)] = 2;
                            }
                }
            for (int i2 = -m; i2 <= m; ++i2)
                for (int i1 = -m; i1 <= m; ++i1) {
                    const std::uint8_t k =
                        mk[static_cast<std::size_t>(i2 + m)][static_cast<std::size_t>(i1 + m)];
                    if (k == 0) continue;
                    keep.push_back(Dir{i1, i2});
                    keep_kind.push_back(k == 1 ? 0 : 1);
                }
        }

        lattice_ = std::move(keep);
        kind_ = std::move(keep_kind);
        for (int id = 0; id < node_count(); ++id) {
            const Dir& i = lattice_[static_cast<std::size_t>(id)];
            index_[static_cast<std::size_t>((i[1] + m) * side + (i[0] + m))] = id;
            (kind_[static_cast<std::size_t>(id)] == 0 ? interior_ : boundary_).push_back(id);
        }
    }

    DomainSpec spec_;
    std::vector<Frame> frames_;
    int cells_ = 0;
    std::vector<Dir> lattice_;
    std::vector<std::uint8_t> kind_;
    std::vector<int> interior_;
    std::vector<int> boundary_;
    std::vector<int> index_;
};

using DomainPtr = std::shared_ptr<const Domain>;

inline DomainPtr build_domain(const DomainSpec& spec, std::vector<Frame> frames = {}) {
    return std::make_shared<Domain>(spec, std::move(frames));
}

// Nodal samples of a scalar function on a Domain.
class GridFunction {
public:
    GridFunction() = default;
    GridFunction(DomainPtr dom, double value)
        : dom_(std::move(dom)), v_(static_cast<std::size_t>(dom_->node_count()), value) {}
    GridFunction(DomainPtr dom, std::vector<double> values)
        : dom_(std::move(dom)), v_(std::move(values)) {
        if (static_cast<int>(v_.size()) != dom_->node_count())
            throw ConfigError("GridFunction value count does not match domain node count");
    }

    static GridFunction from_fn(const DomainPtr& dom,
                                const std::function<double(std::array<double, 2>)>& f) {
        std::vector<double> v(static_cast<std::size_t>(dom->node_count()));
        for (int id = 0; id < dom->node_count(); ++id) v[static_cast<std::size_t>(id)] = f(dom->point(id));
        return GridFunction(dom, std::move(v));
    }

    const DomainPtr& domain() const { return dom_; }
    int size() const { return static_cast<int>(v_.size()); }
    double operator[](int id) const { return v_[static_cast<std::size_t>(id)]; }
    double& operator[](int id) { return v_[static_cast<std::size_t>(id)]; }
    const std::vector<double>& values() const { return v_; }
    std::vector<double>& values() { return v_; }

    double sup_norm() const {
        double m = 0.0;
        for (double x : v_) m = std::max(m, std::abs(x));
        return m;
    }

    bool all_finite() const {
        for (double x : v_)
            if (!std::isfinite(x)) return false;
        return true;
    }

private:
    DomainPtr dom_;
    std::vector<double> v_;
};

inline double sup_diff(const GridFunction& a, const GridFunction& b) {
    double m = 0.0;
    for (int id = 0; id < a.size(); ++id) m = std::max(m, std::abs(a[id] - b[id]));
    return m;
}

// (u(x+he) - 2u(x) + u(x-he)) / (h^2 |e|^2); exact on quadratics.
inline double second_difference(const GridFunction& u, int node, const Dir& e) {
    const Domain& dom = *u.domain();
    if (!dom.is_interior(node)) throw StencilError("second_difference: node is not interior");
    const int p = dom.neighbor(node, e, +1);
    const int q = dom.neighbor(node, e, -1);
    if (p < 0 || q < 0) throw StencilError("second_difference: stencil leaves the node set");
    const double h = dom.h();
    return (u[p] - 2.0 * u[node] + u[q]) / (h * h * dir_norm2(e));
}

// Componentwise central differences; exact on affine functions.
inline std::array<double, 2> gradient_central(const GridFunction& u, int node) {
    const Domain& dom = *u.domain();
    if (!dom.is_interior(node)) throw StencilError("gradient_central: node is not interior");
    std::array<double, 2> g{0.0, 0.0};
    const double h = dom.h();
    static const Dir axes[2] = {Dir{1, 0}, Dir{0, 1}};
    for (int k = 0; k < dom.dim(); ++k) {
        const int p = dom.neighbor(node, axes[k], +1);
        const int q = dom.neighbor(node, axes[k], -1);
        if (p < 0 || q < 0) throw StencilError("gradient_central: stencil leaves the node set");
        g[static_cast<std::size_t>(k)] = (u[p] - u[q]) / (2.0 * h);
    }
    return g;
}

inline double gradient_norm(const std::array<double, 2>& g) { return std::hypot(g[0], g[1]); }

} // namespace ftx
