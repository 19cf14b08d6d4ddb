#include "dsde/process_path.hpp"

#include <algorithm>
#include <stdexcept>

namespace dsde {

// Per-node blocks are stored column-major so Eigen::Map<MatrixXd> can view
// them without copies.

ProcessPath::ProcessPath(int nodes, int rows, int cols)
    : nodes_(nodes), rows_(rows), cols_(cols) {
    if (nodes < 1 || rows < 0 || cols < 0)
        throw std::invalid_argument("ProcessPath: bad shape");
    data_.assign(static_cast<std::size_t>(nodes) * rows * cols, 0.0);
}

std::size_t ProcessPath::index(int node, int r, int c) const {
    return (static_cast<std::size_t>(node) * cols_ + c) * rows_ + r;
}

Eigen::Map<Eigen::MatrixXd> ProcessPath::mat(int node) {
    return Eigen::Map<Eigen::MatrixXd>(data_.data() + index(node, 0, 0), rows_, cols_);
}

Eigen::Map<const Eigen::MatrixXd> ProcessPath::mat(int node) const {
    return Eigen::Map<const Eigen::MatrixXd>(data_.data() + index(node, 0, 0), rows_, cols_);
}

void ProcessPath::setZero() { std::fill(data_.begin(), data_.end(), 0.0); }

PathEnsemble::PathEnsemble(int pathCount, int nodes, int rows, int cols)
    : pathCount_(pathCount), nodes_(nodes), rows_(rows), cols_(cols) {
    if (pathCount < 0 || nodes < 1 || rows < 0 || cols < 0)
        throw std::invalid_argument("PathEnsemble: bad shape");
    data_.assign(static_cast<std::size_t>(pathCount) * nodes * rows * cols, 0.0);
}

std::size_t PathEnsemble::index(int path, int node, int r, int c) const {
    return ((static_cast<std::size_t>(path) * nodes_ + node) * cols_ + c) * rows_ + r;
}

Eigen::Map<Eigen::MatrixXd> PathEnsemble::mat(int path, int node) {
    return Eigen::Map<Eigen::MatrixXd>(data_.data() + index(path, node, 0, 0), rows_, cols_);
}

Eigen::Map<const Eigen::MatrixXd> PathEnsemble::mat(int path, int node) const {
    return Eigen::Map<const Eigen::MatrixXd>(data_.data() + index(path, node, 0, 0), rows_, cols_);
}

void PathEnsemble::setZero() { std::fill(data_.begin(), data_.end(), 0.0); }

double PathEnsemble::meanSquaredNorm(int node) const {
    if (pathCount_ == 0 || rows_ * cols_ == 0) return 0.0;
    double acc = 0.0;
    for (int p = 0; p < pathCount_; ++p) {
        double s = 0.0;
        const std::size_t base = index(p, node, 0, 0);
        for (int k = 0; k < rows_ * cols_; ++k) {
            const double v = data_[base + k];
            s += v * v;
        }
        acc += s;
    }
    return acc / static_cast<double>(pathCount_);
}

} // namespace dsde
