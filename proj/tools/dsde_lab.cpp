#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dsde/builtins.hpp"
#include "dsde/csv.hpp"
#include "dsde/errors.hpp"

using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitSolver = 3;
constexpr int kExitUsage = 64;

const char* kUsage =
    "usage: dsde-lab <subcommand> --config <path> [--seed <u64>] [--out <dir>]\n"
    "subcommands: check solve-bdsdep solve-fbdsdep feynman-kac continuity hamiltonian\n";

struct Invocation {
    std::string configPath;
    std::string outDir = ".";
    std::uint64_t seed = 0;
    bool seedGiven = false;
};

// Failure classification: validation problems exit 2, solver breakdowns 3.
struct Failure {
    int code = kExitSolver;
    json report;
};

Failure classify(const std::exception& e) {
    Failure f;
    f.report["message"] = e.what();
    if (auto* c = dynamic_cast<const dsde::ContinuationError*>(&e)) {
        f.report["type"] = "continuation";
        f.report["alphaReached"] = c->alphaReached();
    } else if (auto* m = dynamic_cast<const dsde::MapDivergenceError*>(&e)) {
        f.report["type"] = "map-divergence";
        f.report["lastDistance"] = m->lastDistance();
    } else if (auto* b = dynamic_cast<const dsde::NumericalBlowupError*>(&e)) {
        f.report["type"] = "numerical-blowup";
        f.report["step"] = b->step();
    } else if (auto* v = dynamic_cast<const dsde::CflViolationError*>(&e)) {
        f.report["type"] = "cfl-violation";
        f.report["requiredDt"] = v->requiredDt();
    } else if (dynamic_cast<const dsde::DomainTooSmallError*>(&e)) {
        f.report["type"] = "domain-too-small";
    } else if (dynamic_cast<const dsde::UnsupportedFunctionError*>(&e)) {
        f.report["type"] = "unsupported-function";
        f.code = kExitValidation;
    } else if (dynamic_cast<const json::exception*>(&e)) {
        f.report["type"] = "config";
        f.code = kExitValidation;
    } else if (dynamic_cast<const std::invalid_argument*>(&e)) {
        // Covers the shape/path-count/system validation family.
        f.report["type"] = "validation";
        f.code = kExitValidation;
    } else {
        f.report["type"] = "runtime";
    }
    return f;
}

void write_error_report(const Invocation& inv, bool outReady, const Failure& f) {
    json wrapper;
    wrapper["error"] = f.report;
    if (outReady) {
        std::ofstream out(std::filesystem::path(inv.outDir) / "error.json");
        out << wrapper.dump(2) << '\n';
    } else {
        std::cerr << wrapper.dump(2) << '\n';
    }
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    return j.at(key).get<T>();
}

dsde::TimeGrid parse_grid(const json& j) {
    json g = j.value("grid", json::object());
    return dsde::TimeGrid(get_or(g, "horizon", 1.0), get_or(g, "steps", 64));
}

dsde::RegressionConfig parse_regression(const json& j) {
    dsde::RegressionConfig cfg;
    json r = j.value("regression", json::object());
    cfg.basisDegree = get_or(r, "basisDegree", cfg.basisDegree);
    cfg.ridge = get_or(r, "ridge", cfg.ridge);
    cfg.minPathsPerCoefficient = get_or(r, "minPathsPerCoefficient", cfg.minPathsPerCoefficient);
    return cfg;
}

dsde::BackwardConfig parse_backward(const json& j) {
    dsde::BackwardConfig cfg;
    cfg.regression = parse_regression(j);
    cfg.blowupThreshold = get_or(j, "blowupThreshold", cfg.blowupThreshold);
    return cfg;
}

dsde::HomotopyConfig parse_homotopy(const json& j) {
    dsde::HomotopyConfig cfg;
    json h = j.value("homotopy", json::object());
    cfg.deltaInit = get_or(h, "deltaInit", cfg.deltaInit);
    cfg.contractionThreshold = get_or(h, "contractionThreshold", cfg.contractionThreshold);
    cfg.maxInner = get_or(h, "maxInner", cfg.maxInner);
    cfg.innerTol = get_or(h, "innerTol", cfg.innerTol);
    cfg.minDelta = get_or(h, "minDelta", cfg.minDelta);
    return cfg;
}

std::uint64_t effective_seed(const json& j, const Invocation& inv) {
    if (inv.seedGiven) return inv.seed;
    return get_or<std::uint64_t>(j, "seed", 1);
}

std::ofstream open_out(const Invocation& inv, const std::string& name) {
    std::ofstream out(std::filesystem::path(inv.outDir) / name, std::ios::binary);
    if (!out) throw std::invalid_argument("cannot open output file " + name);
    return out;
}

json margin_json(const dsde::MarginReport& r) {
    return {{"samples", r.samplesTested},
            {"minMargin", r.minMargin},
            {"violations", r.violationCount}};
}

int run_check(const json& cfg, const Invocation& inv) {
    dsde::CoefficientSystem sys = dsde::builtin_system(cfg.at("system").get<std::string>());
    sys.validate();
    dsde::SamplerConfig sampler;
    sampler.seed = effective_seed(cfg, inv);
    sampler.horizon = get_or(cfg, "horizon", sampler.horizon);
    if (cfg.contains("radii")) sampler.radii = cfg.at("radii").get<std::vector<double>>();
    const int samples = get_or(cfg, "samples", 200);
    const bool primed = get_or(cfg, "primed", false);

    dsde::MarginReport mono = dsde::check_monotonicity(sys, sampler, samples, primed);
    dsde::BoundaryReport boundary = dsde::check_boundary_monotonicity(sys, sampler, samples, primed);
    dsde::LipschitzReport lip = dsde::check_lipschitz(sys, sampler, samples);

    json report;
    report["system"] = sys.name;
    report["samples"] = samples;
    report["primed"] = primed;
    report["monotonicity"] = margin_json(mono);
    report["boundary"]["psi"] = margin_json(boundary.psi);
    report["boundary"]["phi"] = margin_json(boundary.phi);
    report["lipschitz"] = {{"minMargin", lip.minMargin()},
                           {"violations", lip.violationCount()},
                           {"f", margin_json(lip.f)},
                           {"F", margin_json(lip.F)},
                           {"g", margin_json(lip.g)},
                           {"G", margin_json(lip.G)},
                           {"h", margin_json(lip.h)},
                           {"psi", margin_json(lip.psi)},
                           {"phi", margin_json(lip.phi)}};
    auto out = open_out(inv, "check.json");
    out << report.dump(2) << '\n';
    return kExitOk;
}

int run_solve_bdsdep(const json& cfg, const Invocation& inv) {
    dsde::BackwardCase bc = dsde::builtin_backward_case(cfg.at("case").get<std::string>());
    dsde::TimeGrid grid = parse_grid(cfg);
    dsde::NoiseEnsemble noise =
        dsde::sample_ensemble(grid, bc.d, bc.l, bc.marks, effective_seed(cfg, inv),
                              get_or(cfg, "paths", 2000), dsde::FreezeMode::FreezeB);
    dsde::BackwardCaseRun run = bc.build(noise);
    dsde::BackwardSolution sol = dsde::solve_backward(run.problem, noise, parse_backward(cfg));
    auto out = open_out(inv, "solution.csv");
    dsde::write_backward_csv(out, grid, *run.forward, sol);
    return kExitOk;
}

int run_solve_fbdsdep(const json& cfg, const Invocation& inv) {
    dsde::CoefficientSystem sys = dsde::builtin_system(cfg.at("system").get<std::string>());
    dsde::TimeGrid grid = parse_grid(cfg);
    dsde::EnsembleConfig ens{get_or(cfg, "paths", 2000), effective_seed(cfg, inv)};
    dsde::ConvergenceTrace progress;
    try {
        dsde::FbdsdepResult result =
            dsde::solve_fbdsdep(sys, grid, ens, parse_homotopy(cfg), parse_backward(cfg),
                                &progress);
        auto sol = open_out(inv, "solution.csv");
        dsde::write_solution_csv(sol, result.solution);
        auto tr = open_out(inv, "trace.csv");
        dsde::write_trace_csv(tr, result.trace);
        return kExitOk;
    } catch (...) {
        // The partial trace is still a result; persist it before reporting.
        auto tr = open_out(inv, "trace.csv");
        dsde::write_trace_csv(tr, progress);
        throw;
    }
}

int run_feynman_kac(const json& cfg, const Invocation& inv) {
    dsde::CoefficientSystem sys = dsde::builtin_system(cfg.at("system").get<std::string>());
    const double horizon = get_or(cfg, "horizon", 1.0);
    std::vector<double> times = cfg.at("times").get<std::vector<double>>();
    std::vector<double> xs = cfg.at("xs").get<std::vector<double>>();
    std::vector<std::pair<double, double>> points;
    for (double t : times)
        for (double x : xs) points.emplace_back(t, x);

    dsde::FieldConfig field;
    field.paths = get_or(cfg, "paths", field.paths);
    field.bReplicates = get_or(cfg, "bReplicates", field.bReplicates);
    field.seed = effective_seed(cfg, inv);

    dsde::PideConfig pide;
    json pc = cfg.value("pide", json::object());
    pide.xMin = get_or(pc, "xMin", pide.xMin);
    pide.xMax = get_or(pc, "xMax", pide.xMax);
    pide.spatialNodes = get_or(pc, "spatialNodes", pide.spatialNodes);
    pide.cflSafety = get_or(pc, "cflSafety", pide.cflSafety);
    pide.padOverride = get_or(pc, "padOverride", pide.padOverride);
    pide.timeStepOverride = get_or(pc, "timeStepOverride", pide.timeStepOverride);

    std::vector<dsde::ComparisonRow> rows = dsde::compare_feynman_kac(
        sys, horizon, points, get_or(cfg, "mcStepsPerUnitTime", 64), field, parse_backward(cfg),
        pide);

    auto fieldOut = open_out(inv, "field.csv");
    fieldOut << "t,x,u,stderr\n";
    for (const dsde::ComparisonRow& row : rows)
        fieldOut << dsde::format_g17(row.t) << ',' << dsde::format_g17(row.x) << ','
                 << dsde::format_g17(row.mc) << ',' << dsde::format_g17(row.mcStandardError)
                 << '\n';
    auto cmp = open_out(inv, "comparison.csv");
    dsde::write_comparison_csv(cmp, rows);
    return kExitOk;
}

int run_continuity(const json& cfg, const Invocation& inv) {
    const std::string name = get_or<std::string>(cfg, "family", "coupled");
    if (name != "coupled") throw std::invalid_argument("unknown family: " + name);
    dsde::ParameterFamily family = dsde::coupled_family(
        get_or(cfg, "alphas", std::vector<double>{0.1, 0.01, 0.001}));
    dsde::TimeGrid grid = parse_grid(cfg);
    dsde::EnsembleConfig ens{get_or(cfg, "paths", 2000), effective_seed(cfg, inv)};
    dsde::ContinuityStudy study =
        dsde::continuity_study(family, grid, ens, parse_homotopy(cfg), parse_backward(cfg));
    auto out = open_out(inv, "continuity.csv");
    dsde::write_continuity_csv(out, study);
    auto tr = open_out(inv, "trace.csv");
    dsde::write_trace_csv(tr, study.baselineTrace);
    return kExitOk;
}

int run_hamiltonian(const json& cfg, const Invocation& inv) {
    dsde::QuadraticHamiltonian params;
    params.a = get_or(cfg, "a", params.a);
    params.b = get_or(cfg, "b", params.b);
    params.d = get_or(cfg, "d", params.d);
    params.l = get_or(cfg, "l", params.l);
    params.psiOffset = get_or(cfg, "psiOffset", params.psiOffset);
    params.phiOffset = get_or(cfg, "phiOffset", params.phiOffset);
    const double rate = get_or(cfg, "rate", 0.0);
    if (rate > 0.0) params.marks = dsde::MarkSpace({"unit"}, {rate});

    dsde::TimeGrid grid = parse_grid(cfg);
    dsde::EnsembleConfig ens{get_or(cfg, "paths", 2000), effective_seed(cfg, inv)};
    dsde::HamiltonianReport report = dsde::hamiltonian_demo(params, grid, ens, parse_homotopy(cfg),
                                                            parse_backward(cfg));
    auto sol = open_out(inv, "solution.csv");
    dsde::write_solution_csv(sol, report.solution);
    auto tr = open_out(inv, "trace.csv");
    dsde::write_trace_csv(tr, report.trace);
    auto ham = open_out(inv, "hamiltonian.csv");
    dsde::write_hamiltonian_csv(ham, report);
    json summary = {{"initialResidual", report.initialResidual},
                    {"terminalResidual", report.terminalResidual},
                    {"maxDeviationX", report.maxDeviationX},
                    {"maxDeviationP", report.maxDeviationP},
                    {"finalAlpha", report.trace.finalAlpha},
                    {"success", report.trace.success}};
    auto rep = open_out(inv, "report.json");
    rep << summary.dump(2) << '\n';
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    const std::vector<std::string> known = {"check",       "solve-bdsdep", "solve-fbdsdep",
                                            "feynman-kac", "continuity",   "hamiltonian"};
    if (argc < 2) {
        std::cerr << kUsage;
        return kExitUsage;
    }
    const std::string sub = argv[1];
    if (sub != "--help" && sub != "-h" &&
        std::find(known.begin(), known.end(), sub) == known.end()) {
        std::cerr << "unknown subcommand: " << sub << '\n' << kUsage;
        return kExitUsage;
    }

    CLI::App app{"doubly stochastic forward-backward equation lab"};
    app.require_subcommand(1);
    Invocation inv;
    for (const std::string& name : known) {
        CLI::App* s = app.add_subcommand(name);
        s->add_option("--config", inv.configPath)->required();
        s->add_option("--seed", inv.seed);
        s->add_option("--out", inv.outDir);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        std::cout << kUsage;
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        json err = {{"error", {{"type", "usage"}, {"message", e.what()}}}};
        std::cerr << err.dump(2) << '\n';
        return kExitValidation;
    }
    CLI::App* chosen = app.get_subcommands().front();
    inv.seedGiven = chosen->count("--seed") > 0;

    bool outReady = false;
    try {
        std::ifstream cfgFile(inv.configPath);
        if (!cfgFile) throw std::invalid_argument("cannot open config " + inv.configPath);
        json cfg = json::parse(cfgFile);

        std::filesystem::create_directories(inv.outDir);
        outReady = true;

        if (sub == "check") return run_check(cfg, inv);
        if (sub == "solve-bdsdep") return run_solve_bdsdep(cfg, inv);
        if (sub == "solve-fbdsdep") return run_solve_fbdsdep(cfg, inv);
        if (sub == "feynman-kac") return run_feynman_kac(cfg, inv);
        if (sub == "continuity") return run_continuity(cfg, inv);
        return run_hamiltonian(cfg, inv);
    } catch (const std::exception& e) {
        Failure f = classify(e);
        write_error_report(inv, outReady, f);
        return f.code;
    }
}
