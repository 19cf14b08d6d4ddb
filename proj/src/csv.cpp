#include "dsde/csv.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace dsde {

std::string format_g17(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

namespace {

void block_header(std::ostream& out, const std::string& base, int rows, int cols) {
    for (int c = 0; c < cols; ++c)
        for (int r = 0; r < rows; ++r) {
            out << ',' << base;
            if (rows * cols > 1) out << r << '_' << c;
        }
}

void block_values(std::ostream& out, const Eigen::Map<const Eigen::MatrixXd>& m) {
    for (int c = 0; c < m.cols(); ++c)
        for (int r = 0; r < m.rows(); ++r) out << ',' << format_g17(m(r, c));
}

} // namespace

void write_solution_csv(std::ostream& out, const QuintupleSolution& solution) {
    const int M = solution.pathCount();
    const int nodes = solution.grid.nodes();
    out << "path,node,t";
    block_header(out, "X", solution.X.rows(), solution.X.cols());
    block_header(out, "P", solution.P.rows(), solution.P.cols());
    block_header(out, "Y", solution.Y.rows(), solution.Y.cols());
    block_header(out, "Q", solution.Q.rows(), solution.Q.cols());
    block_header(out, "K", solution.K.rows(), solution.K.cols());
    out << '\n';
    for (int p = 0; p < M; ++p)
        for (int i = 0; i < nodes; ++i) {
            out << p << ',' << i << ',' << format_g17(solution.grid.node(i));
            block_values(out, solution.X.mat(p, i));
            block_values(out, solution.P.mat(p, i));
            block_values(out, solution.Y.mat(p, i));
            block_values(out, solution.Q.mat(p, i));
            block_values(out, solution.K.mat(p, i));
            out << '\n';
        }
}

void write_trace_csv(std::ostream& out, const ConvergenceTrace& trace) {
    out << "step,alpha,delta,inner_iters,last_distance,ratio\n";
    int idx = 0;
    for (const HomotopyStep& step : trace.steps) {
        double last = step.distances.empty() ? std::numeric_limits<double>::quiet_NaN()
                                             : step.distances.back();
        double ratio = std::numeric_limits<double>::quiet_NaN();
        for (double r : step.ratios) ratio = std::isnan(ratio) ? r : std::max(ratio, r);
        out << idx++ << ',' << format_g17(step.alphaReached) << ',' << format_g17(step.delta)
            << ',' << step.innerIterations << ',' << format_g17(last) << ','
            << format_g17(ratio) << '\n';
    }
}

void write_backward_csv(std::ostream& out, const TimeGrid& grid, const PathEnsemble& forward,
                        const BackwardSolution& solution) {
    const int M = solution.P.pathCount();
    out << "path,node,t";
    block_header(out, "X", forward.rows(), forward.cols());
    block_header(out, "P", solution.P.rows(), solution.P.cols());
    block_header(out, "Q", solution.Q.rows(), solution.Q.cols());
    block_header(out, "K", solution.K.rows(), solution.K.cols());
    out << '\n';
    for (int p = 0; p < M; ++p)
        for (int i = 0; i < grid.nodes(); ++i) {
            out << p << ',' << i << ',' << format_g17(grid.node(i));
            block_values(out, forward.mat(p, i));
            block_values(out, solution.P.mat(p, i));
            block_values(out, solution.Q.mat(p, i));
            block_values(out, solution.K.mat(p, i));
            out << '\n';
        }
}

void write_field_csv(std::ostream& out, const FieldEstimate& field) {
    out << "t,x,u,stderr\n";
    for (std::size_t k = 0; k < field.estimates.size(); ++k) {
        out << format_g17(field.t[k]) << ',' << format_g17(field.x[k](0)) << ','
            << format_g17(field.estimates[k].value()(0)) << ','
            << format_g17(field.estimates[k].standardError()(0)) << '\n';
    }
}

void write_comparison_csv(std::ostream& out, const std::vector<ComparisonRow>& rows) {
    out << "t,x,mc,mc_stderr,fd,fd_error_estimate,difference,tolerance,within\n";
    for (const ComparisonRow& row : rows) {
        out << format_g17(row.t) << ',' << format_g17(row.x) << ',' << format_g17(row.mc) << ','
            << format_g17(row.mcStandardError) << ',' << format_g17(row.fd) << ','
            << format_g17(row.fdErrorEstimate) << ',' << format_g17(row.difference) << ','
            << format_g17(row.tolerance) << ',' << (row.withinTolerance ? 1 : 0) << '\n';
    }
}

void write_continuity_csv(std::ostream& out, const ContinuityStudy& study) {
    out << "alpha,distance\n";
    for (const ContinuityRow& row : study.rows)
        out << format_g17(row.alpha) << ',' << format_g17(row.distance) << '\n';
}

void write_hamiltonian_csv(std::ostream& out, const HamiltonianReport& report) {
    out << "t,meanX,meanP,bvpX,bvpP\n";
    for (std::size_t k = 0; k < report.times.size(); ++k) {
        out << format_g17(report.times[k]) << ',' << format_g17(report.meanX[k]) << ','
            << format_g17(report.meanP[k]) << ',' << format_g17(report.bvpX[k]) << ','
            << format_g17(report.bvpP[k]) << '\n';
    }
}

} // namespace dsde
