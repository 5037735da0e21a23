#ifndef LIS_MESH_IO_HPP
#define LIS_MESH_IO_HPP

// Reader for the `lismesh v1` text format.
//
//   lismesh v1 <dim>
//   v x y z          vertex (any dim)
//   e i j            segment, dim = 1
//   f i j k          triangle, dim = 2
//   t i j k l        tetrahedron, dim = 3
//
// Indices are 1-based. '#' starts a comment. Each element becomes one node at
// its centroid, weighted by its length/area/volume.

#include "lis/geometry.hpp"

#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

namespace lis {

namespace detail {

inline double element_measure(const std::vector<Vec3>& v)
{
    switch (v.size()) {
    case 2: return (v[1] - v[0]).norm();
    case 3: return 0.5 * (v[1] - v[0]).cross(v[2] - v[0]).norm();
    case 4: return std::abs((v[1] - v[0]).dot((v[2] - v[0]).cross(v[3] - v[0]))) / 6.0;
    default: return 0.0;
    }
}

} // namespace detail

inline SampledManifold parse_lismesh(std::istream& in, const std::string& label = "custom")
{
    auto fail = [&](int line, const std::string& what) -> ConfigError {
        return ConfigError(label + ":" + std::to_string(line) + ": " + what);
    };

    std::vector<Vec3> vertices;
    std::vector<std::pair<int, std::vector<int>>> elements; // (line, indices)
    int dim = 0;
    bool have_header = false;

    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        if (const auto hash = raw.find('#'); hash != std::string::npos)
            raw.erase(hash);
        std::istringstream ls(raw);
        std::string tag;
        if (!(ls >> tag))
            continue;

        if (!have_header) {
            std::string version;
            if (tag != "lismesh" || !(ls >> version >> dim) || version != "v1")
                throw fail(lineno, "expected header 'lismesh v1 <dim>'");
            if (dim < 1 || dim > 3)
                throw fail(lineno, "mesh dimension must be 1, 2 or 3");
            have_header = true;
            continue;
        }

        if (tag == "v") {
            Vec3 p;
            std::string tok[3];
            if (!(ls >> tok[0] >> tok[1] >> tok[2]))
                throw fail(lineno, "vertex needs three coordinates");
            for (int c = 0; c < 3; ++c) {
                try {
                    std::size_t used = 0;
                    p[c] = std::stod(tok[c], &used);
                    if (used != tok[c].size())
                        throw std::invalid_argument(tok[c]);
                } catch (const std::logic_error&) {
                    throw fail(lineno, "bad vertex coordinate '" + tok[c] + "'");
                }
            }
            if (!p.allFinite())
                throw fail(lineno, "non-finite vertex");
            vertices.push_back(p);
            continue;
        }

        int arity = 0;
        if (tag == "e")
            arity = 2;
        else if (tag == "f")
            arity = 3;
        else if (tag == "t")
            arity = 4;
        else
            throw fail(lineno, "unknown record '" + tag + "'");
        if (arity != dim + 1)
            throw fail(lineno, "record '" + tag + "' does not match mesh dimension " + std::to_string(dim));

        std::vector<int> idx(arity);
        for (auto& i : idx)
            if (!(ls >> i))
                throw fail(lineno, "element needs " + std::to_string(arity) + " vertex indices");
        std::string extra;
        if (ls >> extra)
            throw fail(lineno, "trailing token '" + extra + "'");
        elements.emplace_back(lineno, std::move(idx));
    }

    if (!have_header)
        throw ConfigError(label + ": empty mesh file");
    if (elements.empty())
        throw ConfigError(label + ": mesh has no elements");

    SampledManifold m;
    m.dim = dim;
    m.label = label;
    m.nodes.reserve(elements.size());
    m.weights.reserve(elements.size());
    std::vector<Vec3> corners;
    for (const auto& [line, idx] : elements) {
        corners.clear();
        Vec3 centroid = Vec3::Zero();
        for (int i : idx) {
            if (i < 1 || i > static_cast<int>(vertices.size()))
                throw fail(line, "vertex index " + std::to_string(i) + " out of range");
            corners.push_back(vertices[i - 1]);
            centroid += vertices[i - 1];
        }
        const double measure = detail::element_measure(corners);
        if (!(measure > 0.0))
            throw fail(line, "degenerate element (zero measure)");
        m.nodes.push_back(centroid / static_cast<double>(idx.size()));
        m.weights.push_back(measure);
    }
    return m;
}

inline SampledManifold load_custom_mesh(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open mesh file '" + path.string() + "'");
    return parse_lismesh(in, path.filename().string());
}

} // namespace lis

#endif
