#pragma once

#include <string>
#include <vector>

namespace dsde {

/// Uniform partition of [0, T] into `steps` intervals; nodes are indexed
/// 0..steps and node(steps) reproduces the horizon exactly.
class TimeGrid {
public:
    TimeGrid() : TimeGrid(1.0, 1) {}
    TimeGrid(double horizon, int steps);

    double horizon() const { return horizon_; }
    int steps() const { return steps_; }
    int nodes() const { return steps_ + 1; }
    double dt() const { return dt_; }
    double node(int i) const;

private:
    double horizon_;
    int steps_;
    double dt_;
};

TimeGrid make_grid(double horizon, int steps);

/// Finite set of jump marks with positive intensities. Mark j fires as a
/// Poisson stream with rate rates[j]; the compensator weight of mark j is
/// rates[j] * dt per interval.
class MarkSpace {
public:
    MarkSpace() = default;
    MarkSpace(std::vector<std::string> labels, std::vector<double> rates);

    static MarkSpace empty() { return MarkSpace(); }

    int size() const { return static_cast<int>(rates_.size()); }
    const std::string& label(int j) const { return labels_[j]; }
    double rate(int j) const { return rates_[j]; }
    const std::vector<double>& rates() const { return rates_; }
    double totalMass() const;

private:
    std::vector<std::string> labels_;
    std::vector<double> rates_;
};

} // namespace dsde
