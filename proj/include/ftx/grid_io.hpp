#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ftx/grid.hpp"

namespace ftx {

// All numeric artifact output uses 17 significant digits, which round-trips
// IEEE doubles exactly.
inline std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

// CSV: one row per node in node order, columns x1[,x2],<value_column>.
inline void write_grid_csv(const std::string& path, const GridFunction& u,
                           const std::string& value_column = "value") {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    const Domain& dom = *u.domain();
    out << "x1";
    if (dom.dim() == 2) out << ",x2";
    out << "," << value_column << "\n";
    for (int id = 0; id < dom.node_count(); ++id) {
        const auto p = dom.point(id);
        out << fmt17(p[0]);
        if (dom.dim() == 2) out << "," << fmt17(p[1]);
        out << "," << fmt17(u[id]) << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

inline GridFunction read_grid_csv(const std::string& path, const DomainPtr& dom) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty CSV: " + path);
    std::vector<double> vals;
    vals.reserve(static_cast<std::size_t>(dom->node_count()));
    int row = 0;
    const double h = dom->h();
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> cols;
        while (std::getline(ss, cell, ',')) cols.push_back(std::strtod(cell.c_str(), nullptr));
        if (static_cast<int>(cols.size()) != dom->dim() + 1)
            throw IoError(path + ": row " + std::to_string(row) + " has wrong column count");
        if (row >= dom->node_count()) throw IoError(path + ": more rows than domain nodes");
        const auto p = dom->point(row);
        for (int k = 0; k < dom->dim(); ++k)
            if (std::abs(cols[static_cast<std::size_t>(k)] - p[static_cast<std::size_t>(k)]) > 1e-9 * h)
                throw IoError(path + ": row " + std::to_string(row) +
                              " coordinates do not match the domain (shape mismatch)");
        vals.push_back(cols.back());
        ++row;
    }
    if (row != dom->node_count())
        throw IoError(path + ": row count " + std::to_string(row) + " != node count " +
                      std::to_string(dom->node_count()) + " (shape mismatch)");
    return GridFunction(dom, std::move(vals));
}

// 2D heatmap as ASCII PGM over the lattice bounding box; nodes outside the
// domain map to 0. Value range is recorded in "<path>.txt".
inline void write_grid_pgm(const std::string& path, const GridFunction& u) {
    const Domain& dom = *u.domain();
    if (dom.dim() != 2) throw IoError("PGM output requires a 2D domain");
    int lo1 = 0, hi1 = 0, lo2 = 0, hi2 = 0;
    for (int id = 0; id < dom.node_count(); ++id) {
        const auto& i = dom.lattice(id);
        lo1 = std::min(lo1, i[0]); hi1 = std::max(hi1, i[0]);
        lo2 = std::min(lo2, i[1]); hi2 = std::max(hi2, i[1]);
    }
    double vmin = u[0], vmax = u[0];
    for (int id = 0; id < dom.node_count(); ++id) {
        vmin = std::min(vmin, u[id]);
        vmax = std::max(vmax, u[id]);
    }
    const double span = vmax - vmin;
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "P2\n" << (hi1 - lo1 + 1) << " " << (hi2 - lo2 + 1) << "\n255\n";
    for (int i2 = hi2; i2 >= lo2; --i2) {
        for (int i1 = lo1; i1 <= hi1; ++i1) {
            const int id = dom.id_at(i1, i2);
            int gray = 0;
            if (id >= 0) gray = span > 0.0 ? static_cast<int>(std::lround(255.0 * (u[id] - vmin) / span)) : 128;
            out << gray << (i1 == hi1 ? "" : " ");
        }
        out << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
    std::ofstream side(path + ".txt");
    if (!side) throw IoError("cannot open for writing: " + path + ".txt");
    side << "min = " << fmt17(vmin) << "\n";
    side << "max = " << fmt17(vmax) << "\n";
}

} // namespace ftx
