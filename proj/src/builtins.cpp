#include "dsde/builtins.hpp"

#include <cmath>
#include <stdexcept>

#include "dsde/errors.hpp"

namespace dsde {

namespace {

std::function<Eigen::VectorXd(double, const Quintuple&)> zero_vec(int rows) {
    return [rows](double, const Quintuple&) { return Eigen::VectorXd::Zero(rows); };
}

std::function<Eigen::MatrixXd(double, const Quintuple&)> zero_mat(int rows, int cols) {
    return [rows, cols](double, const Quintuple&) { return Eigen::MatrixXd::Zero(rows, cols); };
}

std::function<Eigen::VectorXd(double, const Quintuple&, int)> zero_jump(int rows) {
    return [rows](double, const Quintuple&, int) { return Eigen::VectorXd::Zero(rows); };
}

CoefficientSystem scalar_shell() {
    CoefficientSystem sys;
    sys.n = 1;
    sys.m = 1;
    sys.H = Eigen::MatrixXd::Identity(1, 1);
    return sys;
}

} // namespace

CoefficientSystem zero_system() {
    CoefficientSystem sys = scalar_shell();
    sys.name = "zero";
    sys.d = 1;
    sys.l = 1;
    sys.f = zero_vec(1);
    sys.g = zero_mat(1, 1);
    sys.h = zero_jump(1);
    sys.F = zero_vec(1);
    sys.G = zero_mat(1, 1);
    sys.Psi = [](const Eigen::VectorXd& P) { return Eigen::VectorXd::Zero(P.size()); };
    sys.Phi = [](const Eigen::VectorXd& X) { return Eigen::VectorXd::Zero(X.size()); };
    sys.mu1 = 1.0;
    sys.beta1 = 1.0;
    return sys;
}

CoefficientSystem monotone_linear_system() {
    CoefficientSystem sys = scalar_shell();
    sys.name = "monotone-linear";
    sys.d = 1;
    sys.l = 1;
    sys.f = [](double, const Quintuple& U) -> Eigen::VectorXd { return -U.P; };
    sys.g = zero_mat(1, 1);
    sys.h = zero_jump(1);
    sys.F = [](double, const Quintuple& U) -> Eigen::VectorXd { return -U.X; };
    sys.G = [](double, const Quintuple& U) -> Eigen::MatrixXd { return -U.Y; };
    sys.Psi = [](const Eigen::VectorXd& P) { return Eigen::VectorXd::Ones(P.size()); };
    sys.Phi = [](const Eigen::VectorXd& X) -> Eigen::VectorXd { return X; };
    sys.mu1 = 1.0;
    sys.beta1 = 1.0;
    sys.lipC = 1.0;
    sys.lipGamma = 0.5;
    return sys;
}

CoefficientSystem coupled_scalar_system() {
    CoefficientSystem sys = scalar_shell();
    sys.name = "coupled-scalar";
    sys.d = 0;
    sys.l = 0;
    sys.f = [](double, const Quintuple& U) -> Eigen::VectorXd {
        return -U.P + Eigen::VectorXd::Ones(1);
    };
    sys.g = zero_mat(1, 0);
    sys.h = zero_jump(1);
    sys.F = [](double, const Quintuple& U) -> Eigen::VectorXd { return -U.X; };
    sys.G = zero_mat(1, 0);
    sys.Psi = [](const Eigen::VectorXd& P) { return Eigen::VectorXd::Zero(P.size()); };
    sys.Phi = [](const Eigen::VectorXd& X) -> Eigen::VectorXd { return X; };
    sys.mu1 = 1.0;
    sys.beta1 = 1.0;
    return sys;
}

CoefficientSystem hamiltonian_system() {
    QuadraticHamiltonian params;
    params.a = 0.5;
    params.b = 0.5;
    params.d = 1;
    params.l = 1;
    params.marks = MarkSpace({"unit"}, {1.0});
    return build_hamiltonian_system(params);
}

namespace {

CoefficientSystem markovian_shell(const std::string& name) {
    CoefficientSystem sys = scalar_shell();
    sys.name = name;
    sys.F = zero_vec(1);
    sys.Psi = [](const Eigen::VectorXd& P) { return Eigen::VectorXd::Zero(P.size()); };
    sys.h = zero_jump(1);
    sys.mu1 = 1.0;
    sys.beta1 = 1.0;
    return sys;
}

} // namespace

CoefficientSystem heat_system() {
    CoefficientSystem sys = markovian_shell("heat");
    sys.d = 1;
    sys.l = 0;
    sys.f = zero_vec(1);
    sys.g = [](double, const Quintuple&) { return Eigen::MatrixXd::Constant(1, 1, 1.0); };
    sys.G = zero_mat(1, 0);
    sys.Phi = [](const Eigen::VectorXd& X) -> Eigen::VectorXd {
        return X.array().square().matrix();
    };
    return sys;
}

CoefficientSystem transport_system() {
    CoefficientSystem sys = markovian_shell("transport");
    sys.d = 1;
    sys.l = 0;
    sys.f = [](double, const Quintuple&) { return Eigen::VectorXd::Ones(1); };
    sys.g = [](double, const Quintuple&) { return Eigen::MatrixXd::Constant(1, 1, 0.2); };
    sys.G = zero_mat(1, 0);
    sys.Phi = [](const Eigen::VectorXd& X) -> Eigen::VectorXd {
        return X.array().sin().matrix();
    };
    return sys;
}

CoefficientSystem jump_quadratic_system() {
    CoefficientSystem sys = markovian_shell("jump-quadratic");
    sys.d = 0;
    sys.l = 0;
    sys.marks = MarkSpace({"unit"}, {1.0});
    sys.f = zero_vec(1);
    sys.g = zero_mat(1, 0);
    sys.G = zero_mat(1, 0);
    sys.h = [](double, const Quintuple&, int) { return Eigen::VectorXd::Constant(1, 0.5); };
    sys.Phi = [](const Eigen::VectorXd& X) -> Eigen::VectorXd {
        return X.array().square().matrix();
    };
    return sys;
}

CoefficientSystem martingale_system() {
    CoefficientSystem sys = markovian_shell("martingale");
    sys.d = 1;
    sys.l = 0;
    sys.f = zero_vec(1);
    sys.g = [](double, const Quintuple&) { return Eigen::MatrixXd::Constant(1, 1, 1.0); };
    sys.G = zero_mat(1, 0);
    sys.Phi = [](const Eigen::VectorXd& X) -> Eigen::VectorXd { return X; };
    return sys;
}

CoefficientSystem builtin_system(const std::string& name) {
    if (name == "zero") return zero_system();
    if (name == "monotone-linear") return monotone_linear_system();
    if (name == "coupled-scalar") return coupled_scalar_system();
    if (name == "hamiltonian") return hamiltonian_system();
    if (name == "heat") return heat_system();
    if (name == "transport") return transport_system();
    if (name == "jump-quadratic") return jump_quadratic_system();
    if (name == "martingale") return martingale_system();
    throw std::invalid_argument("unknown builtin system: " + name);
}

std::vector<std::string> builtin_system_names() {
    return {"zero",        "monotone-linear", "coupled-scalar", "hamiltonian",
            "heat",        "transport",       "jump-quadratic", "martingale"};
}

ParameterFamily coupled_family(std::vector<double> alphas) {
    ParameterFamily family;
    family.baseline = coupled_scalar_system();
    family.perturbed = [](double alpha) {
        CoefficientSystem sys = coupled_scalar_system();
        sys.name = "coupled-scalar-perturbed";
        sys.f = [alpha](double, const Quintuple& U) -> Eigen::VectorXd {
            return -(1.0 + alpha) * U.P + Eigen::VectorXd::Ones(1);
        };
        return sys;
    };
    family.alphas = std::move(alphas);
    return family;
}

namespace {

// Node-indexed accumulation of one scalar increment stream per path.
std::shared_ptr<PathEnsemble> accumulate_driver(
    const NoiseEnsemble& noise, const std::function<double(const NoiseBundle&, int)>& increment) {
    const int M = noise.pathCount();
    const int N = noise.grid.steps();
    auto state = std::make_shared<PathEnsemble>(M, N + 1, 1);
    for (int p = 0; p < M; ++p) {
        double acc = 0.0;
        state->at(p, 0, 0) = 0.0;
        for (int i = 0; i < N; ++i) {
            acc += increment(noise.paths[p], i);
            state->at(p, i + 1, 0) = acc;
        }
    }
    return state;
}

BackwardCaseRun drift_exponential_build(const NoiseEnsemble& noise) {
    BackwardCaseRun run;
    run.forward = std::make_shared<PathEnsemble>(noise.pathCount(), noise.grid.steps() + 1, 1);
    run.forward->setZero();
    run.problem.dim = 1;
    run.problem.terminal = Eigen::MatrixXd::Ones(1, noise.pathCount());
    run.problem.driverF = [](int, int, const Eigen::VectorXd& P, const Eigen::MatrixXd&,
                             const Eigen::MatrixXd&) -> Eigen::VectorXd { return P; };
    run.problem.estimateJumpCoefficient = false;
    return run;
}

BackwardCaseRun brownian_terminal_build(const NoiseEnsemble& noise) {
    BackwardCaseRun run;
    run.forward = accumulate_driver(noise, [](const NoiseBundle& nb, int i) { return nb.dW(i, 0); });
    run.problem.dim = 1;
    const int M = noise.pathCount();
    run.problem.terminal.resize(1, M);
    for (int p = 0; p < M; ++p) run.problem.terminal(0, p) = run.forward->at(p, noise.grid.steps(), 0);
    run.problem.driverF = [](int, int, const Eigen::VectorXd&, const Eigen::MatrixXd&,
                             const Eigen::MatrixXd&) { return Eigen::VectorXd::Zero(1); };
    auto fwd = run.forward;
    run.problem.features = [fwd](int node, int p) {
        return Eigen::VectorXd::Constant(1, fwd->at(p, node, 0));
    };
    return run;
}

BackwardCaseRun frozen_source_build(const NoiseEnsemble& noise) {
    BackwardCaseRun run;
    run.forward = accumulate_driver(noise, [](const NoiseBundle& nb, int i) { return nb.dW(i, 0); });
    run.problem.dim = 1;
    const int M = noise.pathCount();
    const int N = noise.grid.steps();
    run.problem.terminal.resize(1, M);
    for (int p = 0; p < M; ++p) {
        double bsum = 0.0;
        for (int i = 0; i < N; ++i) bsum += noise.paths[p].dB(i, 0);
        run.problem.terminal(0, p) = 1.0 + bsum;
    }
    run.problem.driverF = [](int, int, const Eigen::VectorXd&, const Eigen::MatrixXd&,
                             const Eigen::MatrixXd&) { return Eigen::VectorXd::Zero(1); };
    run.problem.driverG = [](int, int, const Eigen::VectorXd&, const Eigen::MatrixXd&,
                             const Eigen::MatrixXd&) { return Eigen::MatrixXd::Ones(1, 1); };
    auto fwd = run.forward;
    run.problem.features = [fwd](int node, int p) {
        return Eigen::VectorXd::Constant(1, fwd->at(p, node, 0));
    };
    return run;
}

BackwardCaseRun jump_terminal_build(const NoiseEnsemble& noise) {
    BackwardCaseRun run;
    run.forward = accumulate_driver(
        noise, [](const NoiseBundle& nb, int i) { return compensated_increment(nb, i, 0); });
    run.problem.dim = 1;
    const int M = noise.pathCount();
    run.problem.terminal.resize(1, M);
    for (int p = 0; p < M; ++p) run.problem.terminal(0, p) = run.forward->at(p, noise.grid.steps(), 0);
    run.problem.driverF = [](int, int, const Eigen::VectorXd&, const Eigen::MatrixXd&,
                             const Eigen::MatrixXd&) { return Eigen::VectorXd::Zero(1); };
    auto fwd = run.forward;
    run.problem.features = [fwd](int node, int p) {
        return Eigen::VectorXd::Constant(1, fwd->at(p, node, 0));
    };
    return run;
}

} // namespace

BackwardCase builtin_backward_case(const std::string& name) {
    BackwardCase backwardCase;
    backwardCase.name = name;
    if (name == "drift-exponential") {
        backwardCase.build = drift_exponential_build;
        return backwardCase;
    }
    if (name == "brownian-terminal") {
        backwardCase.d = 1;
        backwardCase.build = brownian_terminal_build;
        return backwardCase;
    }
    if (name == "frozen-source") {
        backwardCase.d = 1;
        backwardCase.l = 1;
        backwardCase.build = frozen_source_build;
        return backwardCase;
    }
    if (name == "jump-terminal") {
        backwardCase.marks = MarkSpace({"unit"}, {1.0});
        backwardCase.build = jump_terminal_build;
        return backwardCase;
    }
    throw std::invalid_argument("unknown backward case: " + name);
}

std::vector<std::string> builtin_backward_case_names() {
    return {"drift-exponential", "brownian-terminal", "frozen-source", "jump-terminal"};
}

} // namespace dsde
