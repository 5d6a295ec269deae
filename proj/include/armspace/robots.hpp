#pragma once

#include <array>

#include "armspace/kinematics.hpp"

namespace armspace {

/// Unimation PUMA 560, standard DH. Also the template for random
/// manipulator sampling: columns d3, d4, a2, a3 are the free parameters,
/// everything else stays at these constants (see data/puma560_template.json).
struct PumaTemplate {
    std::array<double, 6> d{0.0, 0.0, 0.15005, 0.4318, 0.0, 0.0};
    std::array<double, 6> a{0.0, 0.4318, 0.0203, 0.0, 0.0, 0.0};
    std::array<double, 6> alpha{kPi / 2, 0.0, -kPi / 2, kPi / 2, -kPi / 2, 0.0};

    Manipulator instantiate(double d3, double d4, double a2, double a3) const {
        Manipulator m;
        m.links.resize(6);
        for (int i = 0; i < 6; ++i) {
            m.links[static_cast<std::size_t>(i)] =
                DHLink{d[static_cast<std::size_t>(i)], a[static_cast<std::size_t>(i)],
                       alpha[static_cast<std::size_t>(i)], 0.0};
        }
        m.links[2].d = d3;
        m.links[3].d = d4;
        m.links[1].a = a2;
        m.links[2].a = a3;
        return m;
    }
};

inline Manipulator puma560() {
    const PumaTemplate t;
    return t.instantiate(t.d[2], t.d[3], t.a[1], t.a[2]);
}

/// Fanuc AM120iB/10L, 6-DOF industrial arm, standard DH (community model
/// contributed by Wynand Swart). At q = 0 the tool sits at
/// (1.02, 0, -1.06) m.
inline Manipulator fanuc_am120ib10l() {
    Manipulator m;
    m.links = {
        DHLink{0.0, 0.15, -kPi / 2, 0.0},
        DHLink{0.0, 0.77, kPi, 0.0},
        DHLink{0.0, 0.10, -kPi / 2, 0.0},
        DHLink{-0.96, 0.0, kPi / 2, 0.0},
        DHLink{0.0, 0.0, -kPi / 2, 0.0},
        DHLink{-0.10, 0.0, kPi, 0.0},
    };
    return m;
}

/// Two-link planar arm in the xy plane; handy analytic test subject.
inline Manipulator planar_arm(std::initializer_list<double> lengths) {
    Manipulator m;
    for (double length : lengths) m.links.push_back(DHLink{0.0, length, 0.0, 0.0});
    return m;
}

}  // namespace armspace
