#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "dsde/backward_solver.hpp"
#include "dsde/experiments.hpp"
#include "dsde/forward_backward.hpp"
#include "dsde/spdie.hpp"

namespace dsde {

/// Shortest round-trip decimal form (printf %.17g); all CSV numbers use it
/// so identical inputs produce byte-identical files.
std::string format_g17(double value);

/// path,node,t, then the X | P | Y | Q | K blocks, matrices flattened
/// column-major with r_c suffixes. Zero-width blocks are omitted.
void write_solution_csv(std::ostream& out, const QuintupleSolution& solution);

/// step,alpha,delta,inner_iters,last_distance,ratio; ratio is the largest
/// measured contraction ratio of the step, nan when only one inner pass ran.
void write_trace_csv(std::ostream& out, const ConvergenceTrace& trace);

/// path,node,t, then X | P | Q | K blocks of a plain backward solve driven
/// by a scalar forward state.
void write_backward_csv(std::ostream& out, const TimeGrid& grid, const PathEnsemble& forward,
                        const BackwardSolution& solution);

/// t,x,u,stderr with one row per evaluation point (scalar systems).
void write_field_csv(std::ostream& out, const FieldEstimate& field);

/// t,x,mc,mc_stderr,fd,fd_error_estimate,difference,tolerance,within.
void write_comparison_csv(std::ostream& out, const std::vector<ComparisonRow>& rows);

/// alpha,distance; failed rows carry nan.
void write_continuity_csv(std::ostream& out, const ContinuityStudy& study);

/// t,meanX,meanP,bvpX,bvpP.
void write_hamiltonian_csv(std::ostream& out, const HamiltonianReport& report);

} // namespace dsde
