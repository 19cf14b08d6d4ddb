#pragma once

#include <vector>

#include <Eigen/Dense>

namespace dsde {

/// Node-indexed sample path of an rows x cols matrix process. Node i of an
/// integrand process holds the value used on interval [t_i, t_{i+1}];
/// backward integrands are read at the right endpoint by the caller.
class ProcessPath {
public:
    ProcessPath() = default;
    ProcessPath(int nodes, int rows, int cols = 1);

    int nodes() const { return nodes_; }
    int rows() const { return rows_; }
    int cols() const { return cols_; }

    double& at(int node, int r, int c = 0) { return data_[index(node, r, c)]; }
    double at(int node, int r, int c = 0) const { return data_[index(node, r, c)]; }

    Eigen::Map<Eigen::MatrixXd> mat(int node);
    Eigen::Map<const Eigen::MatrixXd> mat(int node) const;

    void setZero();

private:
    std::size_t index(int node, int r, int c) const;

    int nodes_ = 0, rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

/// Ensemble of M node-indexed paths with a common shape.
class PathEnsemble {
public:
    PathEnsemble() = default;
    PathEnsemble(int pathCount, int nodes, int rows, int cols = 1);

    int pathCount() const { return pathCount_; }
    int nodes() const { return nodes_; }
    int rows() const { return rows_; }
    int cols() const { return cols_; }

    double& at(int path, int node, int r, int c = 0) { return data_[index(path, node, r, c)]; }
    double at(int path, int node, int r, int c = 0) const { return data_[index(path, node, r, c)]; }

    Eigen::Map<Eigen::MatrixXd> mat(int path, int node);
    Eigen::Map<const Eigen::MatrixXd> mat(int path, int node) const;

    void setZero();

    /// Mean over paths of the squared Frobenius norm at a node.
    double meanSquaredNorm(int node) const;

private:
    std::size_t index(int path, int node, int r, int c) const;

    int pathCount_ = 0, nodes_ = 0, rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

} // namespace dsde
