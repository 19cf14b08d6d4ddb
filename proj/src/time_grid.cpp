#include "dsde/time_grid.hpp"

#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace dsde {

TimeGrid::TimeGrid(double horizon, int steps) : horizon_(horizon), steps_(steps) {
    if (!(horizon > 0.0) || !std::isfinite(horizon))
        throw std::invalid_argument("TimeGrid: horizon must be positive and finite");
    if (steps < 1)
        throw std::invalid_argument("TimeGrid: need at least one step");
    dt_ = horizon_ / static_cast<double>(steps_);
}

double TimeGrid::node(int i) const {
    if (i < 0 || i > steps_)
        throw std::out_of_range("TimeGrid: node index out of range");
    if (i == steps_) return horizon_; // exact endpoint, no rounding drift
    return dt_ * static_cast<double>(i);
}

TimeGrid make_grid(double horizon, int steps) { return TimeGrid(horizon, steps); }

MarkSpace::MarkSpace(std::vector<std::string> labels, std::vector<double> rates)
    : labels_(std::move(labels)), rates_(std::move(rates)) {
    if (labels_.size() != rates_.size())
        throw std::invalid_argument("MarkSpace: labels and rates differ in length");
    std::set<std::string> seen;
    for (const auto& lab : labels_) {
        if (!seen.insert(lab).second)
            throw std::invalid_argument("MarkSpace: duplicate mark label '" + lab + "'");
    }
    for (double r : rates_) {
        if (!(r > 0.0) || !std::isfinite(r))
            throw std::invalid_argument("MarkSpace: rates must be positive and finite");
    }
}

double MarkSpace::totalMass() const {
    return std::accumulate(rates_.begin(), rates_.end(), 0.0);
}

} // namespace dsde
