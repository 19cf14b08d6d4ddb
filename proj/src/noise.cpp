#include "dsde/noise.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "dsde/parallel.hpp"

namespace dsde {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t purpose, std::uint64_t counter) {
    return mix64(mix64(master ^ mix64(purpose)) ^ mix64(counter));
}

namespace {

void fill_gaussian_block(Eigen::MatrixXd& block, std::mt19937_64& rng, double sd) {
    std::normal_distribution<double> normal(0.0, sd);
    for (int i = 0; i < block.rows(); ++i)
        for (int j = 0; j < block.cols(); ++j) block(i, j) = normal(rng);
}

} // namespace

NoiseBundle sample_noise(const TimeGrid& grid, int d, int l, const MarkSpace& marks,
                         std::uint64_t seed) {
    if (d < 0 || l < 0) throw std::invalid_argument("sample_noise: negative noise dimension");
    const int steps = grid.steps();
    const double sd = std::sqrt(grid.dt());

    NoiseBundle bundle;
    bundle.dt = grid.dt();
    bundle.rates = marks.rates();
    bundle.seed = seed;
    bundle.dW.resize(steps, d);
    bundle.dB.resize(steps, l);
    bundle.counts.resize(steps, marks.size());

    // Separate sub-streams per driver keep each block invariant when the other
    // dimensions change.
    std::mt19937_64 rngW(derive_seed(seed, 0x57, 0));
    std::mt19937_64 rngB(derive_seed(seed, 0x42, 0));
    std::mt19937_64 rngN(derive_seed(seed, 0x4e, 0));

    fill_gaussian_block(bundle.dW, rngW, sd);
    fill_gaussian_block(bundle.dB, rngB, sd);
    for (int j = 0; j < marks.size(); ++j) {
        std::poisson_distribution<int> pois(marks.rate(j) * grid.dt());
        for (int i = 0; i < steps; ++i) bundle.counts(i, j) = static_cast<double>(pois(rngN));
    }
    return bundle;
}

double compensated_increment(const NoiseBundle& bundle, int interval, int mark) {
    if (interval < 0 || interval >= bundle.steps())
        throw std::out_of_range("compensated_increment: interval out of range");
    if (mark < 0 || mark >= bundle.markCount())
        throw std::out_of_range("compensated_increment: mark out of range");
    return bundle.counts(interval, mark) - bundle.rates[mark] * bundle.dt;
}

NoiseEnsemble sample_ensemble(const TimeGrid& grid, int d, int l, const MarkSpace& marks,
                              std::uint64_t masterSeed, int pathCount, FreezeMode freeze) {
    if (pathCount < 1) throw std::invalid_argument("sample_ensemble: need at least one path");

    NoiseEnsemble ens{grid, d, l, marks, freeze, {}};
    ens.paths.resize(static_cast<std::size_t>(pathCount));
    parallel_for(static_cast<std::size_t>(pathCount), [&](std::size_t r) {
        ens.paths[r] = sample_noise(grid, d, l, marks, derive_seed(masterSeed, 0x70, r));
    });

    if (freeze == FreezeMode::FreezeB && l > 0) {
        // One backward realization shared by the whole ensemble.
        const Eigen::MatrixXd shared =
            sample_noise(grid, 0, l, MarkSpace::empty(), derive_seed(masterSeed, 0x42, 0)).dB;
        for (auto& p : ens.paths) p.dB = shared;
    } else if (freeze == FreezeMode::FreezeW && d > 0) {
        const Eigen::MatrixXd shared =
            sample_noise(grid, d, 0, MarkSpace::empty(), derive_seed(masterSeed, 0x57, 0)).dW;
        for (auto& p : ens.paths) p.dW = shared;
    }
    return ens;
}

NoiseBundle reverse_noise(const NoiseBundle& bundle) {
    NoiseBundle rev;
    rev.dt = bundle.dt;
    rev.rates = bundle.rates;
    rev.seed = bundle.seed;
    rev.dW = bundle.dB.colwise().reverse();
    rev.dB = bundle.dW.colwise().reverse();
    rev.counts = bundle.counts.colwise().reverse();
    return rev;
}

NoiseEnsemble reverse_noise(const NoiseEnsemble& ensemble) {
    NoiseEnsemble rev{ensemble.grid, ensemble.l, ensemble.d, ensemble.marks,
                      ensemble.freeze, {}};
    if (ensemble.freeze == FreezeMode::FreezeB) rev.freeze = FreezeMode::FreezeW;
    else if (ensemble.freeze == FreezeMode::FreezeW) rev.freeze = FreezeMode::FreezeB;
    rev.paths.reserve(ensemble.paths.size());
    for (const auto& p : ensemble.paths) rev.paths.push_back(reverse_noise(p));
    return rev;
}

} // namespace dsde
