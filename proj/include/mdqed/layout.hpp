#pragma once

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mdqed/geometry.hpp"
#include "mdqed/material.hpp"

namespace mdqed {

struct MediumRegion {
    std::string name;
    Box box;
    Susceptibility electric;
    Susceptibility magnetic;
};

// Box minus a hole it contains, split into at most six disjoint boxes.
inline std::vector<Box> box_minus(const Box& outer, const Box& hole) {
    std::vector<Box> out;
    auto push = [&out](const Box& b) {
        if (b.valid()) out.push_back(b);
    };
    Box core = outer;
    for (int a = 0; a < 3; ++a) {
        Box below = core, above = core;
        below.hi[a] = hole.lo[a];
        above.lo[a] = hole.hi[a];
        push(below);
        push(above);
        core.lo[a] = hole.lo[a];
        core.hi[a] = hole.hi[a];
    }
    return out;
}

// Cube of the given side centred on the atom, clipped to the cavity.
inline Box exclusion_cube(const CavityGeometry& geom, const Vec3& center, std::optional<double> side = std::nullopt) {
    const double s = side ? *side : geom.min_side() / 50.0;
    require(s > 0, ErrorCode::layout, "exclusion side must be positive");
    Box b{center.array() - 0.5 * s, center.array() + 0.5 * s};
    const Box cav = geom.box();
    b.lo = b.lo.cwiseMax(cav.lo);
    b.hi = b.hi.cwiseMin(cav.hi);
    return b;
}

struct MediumLayout {
    std::vector<MediumRegion> regions;
    std::optional<Box> exclusion;

    bool empty() const { return regions.empty(); }

    void validate(const CavityGeometry& geom) const {
        const Box cav = geom.box();
        const double tol = 1e-12 * geom.max_side();
        for (std::size_t i = 0; i < regions.size(); ++i) {
            const auto& r = regions[i];
            std::ostringstream who;
            who << "region " << i << (r.name.empty() ? "" : " (" + r.name + ")");
            require(r.box.valid(), ErrorCode::layout, who.str() + " has non-positive extent");
            require(cav.contains_box(r.box, tol), ErrorCode::layout, who.str() + " extends outside the cavity");
            r.electric.validate();
            r.magnetic.validate();
            for (std::size_t j = 0; j < i; ++j)
                require(!r.box.overlaps(regions[j].box), ErrorCode::layout,
                        who.str() + " overlaps region " + std::to_string(j));
        }
        if (exclusion) {
            require(exclusion->valid(), ErrorCode::layout, "excluded free region has non-positive extent");
            require(cav.contains_box(*exclusion, tol), ErrorCode::layout, "excluded free region leaves the cavity");
            for (const auto& r : regions)
                if (r.box.overlaps(*exclusion))
                    require(r.box.contains_box(*exclusion), ErrorCode::layout,
                            "excluded free region partially overlaps region " + r.name);
        }
    }

    // Sub-boxes occupied by medium in region i.
    std::vector<Box> domain(std::size_t i) const {
        const Box& b = regions.at(i).box;
        if (exclusion && b.overlaps(*exclusion)) return box_minus(b, *exclusion);
        return {b};
    }

    double medium_volume(std::size_t i) const {
        double v = 0.0;
        for (const auto& b : domain(i)) v += b.volume();
        return v;
    }

    // Medium present at r (region interiors or faces, outside the excluded box).
    bool in_medium(const Vec3& r) const {
        if (exclusion && exclusion->contains_strictly(r)) return false;
        for (const auto& reg : regions)
            if (reg.box.contains(r)) return true;
        return false;
    }
};

} // namespace mdqed
