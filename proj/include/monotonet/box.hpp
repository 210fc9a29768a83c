#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "monotonet/rng.hpp"

namespace monotonet {

// Axis-aligned domain box, one [lo, hi] interval per input dimension.
struct Box {
    std::vector<double> lo;
    std::vector<double> hi;

    Box() = default;
    Box(std::vector<double> l, std::vector<double> h) : lo(std::move(l)), hi(std::move(h)) {
        validate();
    }

    std::size_t dim() const { return lo.size(); }
    bool empty() const { return lo.empty(); }

    void validate() const {
        if (lo.size() != hi.size())
            throw std::invalid_argument("Box: lo/hi dimension mismatch");
        for (std::size_t i = 0; i < lo.size(); ++i)
            if (!(lo[i] < hi[i]))
                throw std::invalid_argument("Box: lower bound must be below upper bound in every dimension");
    }

    bool contains(const std::vector<double>& x) const {
        if (x.size() != dim()) return false;
        for (std::size_t i = 0; i < x.size(); ++i)
            if (x[i] < lo[i] || x[i] > hi[i]) return false;
        return true;
    }

    double clamp(std::size_t i, double v) const {
        return std::min(hi[i], std::max(lo[i], v));
    }

    std::vector<double> sample(Rng& rng) const {
        std::vector<double> x(dim());
        for (std::size_t i = 0; i < dim(); ++i) x[i] = rng.uniform(lo[i], hi[i]);
        return x;
    }
};

} // namespace monotonet
