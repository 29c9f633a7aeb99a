#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace banktweak {

// Axis-aligned box in world units, stored as center plus size.
struct BBox {
    double cx = 0.0;
    double cy = 0.0;
    double w = 0.0;
    double h = 0.0;

    double left() const { return cx - 0.5 * w; }
    double right() const { return cx + 0.5 * w; }
    double top() const { return cy - 0.5 * h; }
    double bottom() const { return cy + 0.5 * h; }
    double area() const { return w * h; }

    bool valid() const {
        return w > 0.0 && h > 0.0 && std::isfinite(cx) && std::isfinite(cy) &&
               std::isfinite(w) && std::isfinite(h);
    }
};

// Intersection over union, in [0, 1].
inline double iou(const BBox& a, const BBox& b) {
    const double ix = std::max(0.0, std::min(a.right(), b.right()) - std::max(a.left(), b.left()));
    const double iy = std::max(0.0, std::min(a.bottom(), b.bottom()) - std::max(a.top(), b.top()));
    const double inter = ix * iy;
    const double uni = a.area() + b.area() - inter;
    if (uni <= 0.0) return 0.0;
    return inter / uni;
}

}  // namespace banktweak
