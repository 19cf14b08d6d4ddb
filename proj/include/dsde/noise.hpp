#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "dsde/time_grid.hpp"

namespace dsde {

/// SplitMix64 step; the backbone of counter-based stream derivation.
std::uint64_t mix64(std::uint64_t x);

/// Derives an independent stream seed from a master seed, a purpose tag, and
/// a counter (path index, replicate index, ...). Pure function of its inputs,
/// so the schedule of workers never changes the draw.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t purpose, std::uint64_t counter);

/// One path of driving noise: forward increments dW (steps x d), backward
/// increments dB (steps x l), and raw Poisson counts per mark (steps x J).
/// Rates and dt are carried so the bundle is self-describing.
struct NoiseBundle {
    Eigen::MatrixXd dW;
    Eigen::MatrixXd dB;
    Eigen::MatrixXd counts;
    std::vector<double> rates;
    double dt = 0.0;
    std::uint64_t seed = 0;

    int steps() const { return static_cast<int>(dW.rows()); }
    int dimW() const { return static_cast<int>(dW.cols()); }
    int dimB() const { return static_cast<int>(dB.cols()); }
    int markCount() const { return static_cast<int>(counts.cols()); }
};

NoiseBundle sample_noise(const TimeGrid& grid, int d, int l, const MarkSpace& marks,
                         std::uint64_t seed);

/// Compensated Poisson increment for interval i, mark j:
/// counts(i, j) - rate_j * dt.
double compensated_increment(const NoiseBundle& bundle, int interval, int mark);

/// Which driver, if any, is shared by every path of an ensemble.
enum class FreezeMode { None, FreezeB, FreezeW };

/// Monte Carlo ensemble of noise paths. Under FreezeB all paths carry the
/// same dB block (one backward realization, cross-path variation in W and
/// jumps); FreezeW mirrors that for reversed-time solves.
struct NoiseEnsemble {
    TimeGrid grid;
    int d = 0;
    int l = 0;
    MarkSpace marks;
    FreezeMode freeze = FreezeMode::None;
    std::vector<NoiseBundle> paths;

    int pathCount() const { return static_cast<int>(paths.size()); }
};

NoiseEnsemble sample_ensemble(const TimeGrid& grid, int d, int l, const MarkSpace& marks,
                              std::uint64_t masterSeed, int pathCount, FreezeMode freeze);

/// Exchanges the forward and backward roles and reverses the interval order:
/// interval k of the result is interval steps-1-k of the input, with dW and
/// dB swapped. An involution up to the freeze tag swap.
NoiseBundle reverse_noise(const NoiseBundle& bundle);
NoiseEnsemble reverse_noise(const NoiseEnsemble& ensemble);

} // namespace dsde
