#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <deque>
#include <optional>
#include <stdexcept>

#include "banktweak/geometry.hpp"

namespace banktweak {

using Vec = Eigen::VectorXd;

// Appearance embedding, unit l2 norm by construction.
struct Feature {
    Vec v;

    int dim() const { return static_cast<int>(v.size()); }

    // Normalizes a raw embedding; throws on non-finite or near-zero input.
    static Feature normalized(const Vec& raw) {
        if (!raw.allFinite()) throw std::invalid_argument("feature: non-finite components");
        const double n = raw.norm();
        if (n < 1e-12) throw std::invalid_argument("feature: zero-norm embedding");
        return Feature{raw / n};
    }
};

// 1 - a.b for unit vectors; clamped into the nominal [0, 2] range.
inline double cosine_distance(const Feature& a, const Feature& b) {
    if (!a.v.allFinite() || !b.v.allFinite())
        throw std::invalid_argument("cosine_distance: corrupt feature");
    const double d = 1.0 - a.v.dot(b.v);
    return std::clamp(d, 0.0, 2.0);
}

// Bounded FIFO of appearance features; eviction is oldest-first.
class FeatureBank {
public:
    explicit FeatureBank(int capacity) : capacity_(capacity) {
        if (capacity <= 0) throw std::invalid_argument("feature bank: capacity must be positive");
    }

    void push(const Feature& f) {
        entries_.push_back(f);
        while (static_cast<int>(entries_.size()) > capacity_) entries_.pop_front();
    }

    bool empty() const { return entries_.empty(); }
    int size() const { return static_cast<int>(entries_.size()); }
    int capacity() const { return capacity_; }
    const std::deque<Feature>& entries() const { return entries_; }

    // Smallest cosine distance from any stored entry to f.
    double min_distance(const Feature& f) const {
        if (entries_.empty()) throw std::logic_error("feature bank: empty bank has no distance");
        double best = 2.0;
        for (const Feature& e : entries_) best = std::min(best, cosine_distance(e, f));
        return best;
    }

    double mean_distance(const Feature& f) const {
        if (entries_.empty()) throw std::logic_error("feature bank: empty bank has no distance");
        double sum = 0.0;
        for (const Feature& e : entries_) sum += cosine_distance(e, f);
        return sum / static_cast<double>(entries_.size());
    }

private:
    int capacity_;
    std::deque<Feature> entries_;
};

// Per-frame unit flowing from the world to the tracker. source_id is
// ground-truth bookkeeping for evaluation; association never reads it.
struct Detection {
    BBox bbox;
    Feature feature;
    double confidence = 1.0;
    std::optional<int> source_id;
};

}  // namespace banktweak
