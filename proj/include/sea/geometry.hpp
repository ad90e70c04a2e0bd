#pragma once

#include <array>
#include <cmath>

namespace sea {

inline constexpr double kPi = 3.14159265358979323846;

// Slack for inclusive geometric boundaries (degrees / meters). Bearings and
// distances derived through atan2/hypot carry ~1e-14 noise; without this,
// grid-aligned poses sitting exactly on the FOV or 5 m boundary would flip
// on rounding. Constructed boundary cases use offsets >= 1e-6, well clear.
inline constexpr double kGeomEps = 1e-9;

inline double deg_from_rad(double r) { return r * (180.0 / kPi); }
inline double rad_from_deg(double d) { return d * (kPi / 180.0); }

// Compass bearing of (dx east, dy north) in [0, 360): 0 = +y, clockwise.
inline double bearing_deg(double dx, double dy) {
    double b = deg_from_rad(std::atan2(dx, dy));
    if (b < 0.0) b += 360.0;
    if (b >= 360.0) b -= 360.0;
    return b;
}

// Shortest angular distance between two bearings, in [0, 180].
inline double circular_distance_deg(double a, double b) {
    double d = std::fmod(std::fabs(a - b), 360.0);
    return d > 180.0 ? 360.0 - d : d;
}

// HSV (h in [0,1) wrapping, s,v in [0,1]) to RGB in [0,1]^3.
inline std::array<double, 3> rgb_from_hsv(double h, double s, double v) {
    h = h - std::floor(h);
    const double hh = h * 6.0;
    const int sector = static_cast<int>(hh) % 6;
    const double f = hh - std::floor(hh);
    const double p = v * (1.0 - s);
    const double q = v * (1.0 - s * f);
    const double t = v * (1.0 - s * (1.0 - f));
    switch (sector) {
        case 0: return {v, t, p};
        case 1: return {q, v, p};
        case 2: return {p, v, t};
        case 3: return {p, q, v};
        case 4: return {t, p, v};
        default: return {v, p, q};
    }
}

}  // namespace sea
