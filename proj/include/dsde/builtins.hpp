#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "dsde/backward_solver.hpp"
#include "dsde/coefficients.hpp"
#include "dsde/experiments.hpp"
#include "dsde/process_path.hpp"

namespace dsde {

/// Named reference systems used by the command-line tool and the test
/// suites. Decay and boundary constants are declared where the structure
/// supports them; the `zero` system declares them only to satisfy the
/// structural validator and genuinely fails the decay margin checks.
CoefficientSystem zero_system();
CoefficientSystem monotone_linear_system();
CoefficientSystem coupled_scalar_system();
CoefficientSystem hamiltonian_system();
CoefficientSystem heat_system();
CoefficientSystem transport_system();
CoefficientSystem jump_quadratic_system();
CoefficientSystem martingale_system();

CoefficientSystem builtin_system(const std::string& name);
std::vector<std::string> builtin_system_names();

/// One-parameter deformation of the coupled scalar system: the backward
/// feedback in the forward drift is scaled by (1 + alpha).
ParameterFamily coupled_family(std::vector<double> alphas = {0.1, 0.01, 0.001});

/// A backward problem assembled against a sampled ensemble, together with
/// the forward state its features read. The forward ensemble is shared so
/// the problem's callables stay valid while the run object lives.
struct BackwardCaseRun {
    BackwardProblem problem;
    std::shared_ptr<PathEnsemble> forward; // node-indexed scalar driver state
};

struct BackwardCase {
    std::string name;
    int d = 0;
    int l = 0;
    MarkSpace marks;
    std::function<BackwardCaseRun(const NoiseEnsemble&)> build;
};

/// Linear cases with closed-form solutions: drift-exponential,
/// brownian-terminal, frozen-source, jump-terminal.
BackwardCase builtin_backward_case(const std::string& name);
std::vector<std::string> builtin_backward_case_names();

} // namespace dsde
