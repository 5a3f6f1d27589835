// Command-line benchmark harness: environment generation, ensemble fitting,
// metric reports, Table-style benchmarks, sensitivity sweeps and separation
// assessment. All subcommands consume/produce the JSON schemas documented in
// the README; randomness is controlled by --seed.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "miirl/bench.hpp"
#include "miirl/bounds.hpp"
#include "miirl/element_world.hpp"
#include "miirl/em.hpp"
#include "miirl/metrics.hpp"
#include "miirl/serialization.hpp"

namespace {

using namespace miirl;

int cmd_generate(const std::string& out_path, int elements, double wind, int height, int width,
                 double gamma, std::uint64_t seed, int horizon, int dataset_n, bool print_grid) {
    ElementWorldConfig config;
    config.num_elements = elements;
    config.wind = wind;
    config.height = height;
    config.width = width;
    config.gamma = gamma;
    config.seed = seed;
    config.horizon = horizon;
    ElementWorldInstance instance = generate(config);
    save_json_file(out_path, instance_to_json(instance));
    std::cout << "wrote instance to " << out_path << "\n";
    if (print_grid) std::cout << grid_text(instance);
    if (dataset_n > 0) {
        auto [trajs, labels] = make_dataset(instance, dataset_n, seed);
        std::string data_path = out_path + ".dataset.json";
        save_json_file(data_path,
                       dataset_to_json(trajs, labels, instance.config.effective_horizon()));
        std::cout << "wrote " << dataset_n << " demonstrations to " << data_path << "\n";
    }
    return 0;
}

std::vector<Policy> ground_truth_policies(const ElementWorldInstance& instance, double tol) {
    std::vector<Policy> policies;
    for (const auto& p : instance.ground_truth.params)
        policies.push_back(value_iteration(instance.mdp, p.theta, instance.fmap, tol).policy);
    return policies;
}

int cmd_fit(const std::string& instance_path, const std::string& dataset_path,
            const std::string& algorithm, int k, double epsilon, int max_iters,
            std::uint64_t seed, const std::string& out_path) {
    ElementWorldInstance instance = instance_from_json(load_json_file(instance_path));
    std::vector<Trajectory> trajs;
    std::vector<int> labels;
    int max_len = 0;
    dataset_from_json(load_json_file(dataset_path), trajs, labels, max_len);
    MaxEntModel model(instance.mdp, instance.fmap, max_len);
    if (k <= 0) k = instance.ground_truth.size();

    Algorithm alg = algorithm_from_name(algorithm);
    EmOptions opts;
    opts.epsilon = epsilon;
    opts.max_iters = max_iters;

    RewardEnsemble ensemble;
    ResponsibilityMatrix responsibilities;
    json trace;
    if (alg == Algorithm::Supervised) {
        if (labels.empty())
            throw ValidationError("fit: supervised algorithm needs a labeled dataset");
        ensemble = supervised_baseline(model, trajs, labels);
        responsibilities = e_step(ensemble, model, trajs);
    } else if (alg == Algorithm::Random) {
        RunEmResult em = run_em(model, trajs, random_init(model.feature_dim(), k, seed), opts);
        ensemble = std::move(em.ensemble);
        responsibilities = std::move(em.responsibilities);
        trace = em_trace_to_json(em.trace);
    } else {
        ClusterMethod method =
            (alg == Algorithm::LimiirlGmmMle || alg == Algorithm::LimiirlGmmMean)
                ? ClusterMethod::Gmm
                : ClusterMethod::KMeans;
        InitMethod init = (alg == Algorithm::LimiirlMle || alg == Algorithm::LimiirlGmmMle)
                              ? InitMethod::Mle
                              : InitMethod::Mean;
        WarmStartResult ws = warmstart(model, trajs, k, method, init, seed);
        opts.initial_u = ws.memberships;
        RunEmResult em = run_em(model, trajs, ws.ensemble, opts);
        ensemble = std::move(em.ensemble);
        responsibilities = std::move(em.responsibilities);
        trace = em_trace_to_json(em.trace);
    }

    json out{{"algorithm", algorithm},
             {"ensemble", ensemble_to_json(ensemble)},
             {"responsibilities", responsibilities_to_json(responsibilities)},
             {"train_nll", mixture_nll(ensemble, model, trajs)}};
    if (!trace.is_null()) out["trace"] = trace;
    save_json_file(out_path, out);
    std::cout << "wrote fit to " << out_path << "\n";
    return 0;
}

int cmd_eval(const std::string& instance_path, const std::string& fit_path,
             const std::string& dataset_path, double tol, int mc_samples, std::uint64_t seed,
             const std::string& out_path) {
    ElementWorldInstance instance = instance_from_json(load_json_file(instance_path));
    json fit = load_json_file(fit_path);
    RewardEnsemble learned = ensemble_from_json(fit.at("ensemble"));

    GevdReport gevd_report =
        gevd(instance.mdp, instance.fmap, instance.ground_truth, learned, tol);
    json out{{"gevd", gevd_report_to_json(gevd_report)}};
    std::cout << pairing_table_text(gevd_report);

    if (!dataset_path.empty()) {
        std::vector<Trajectory> trajs;
        std::vector<int> labels;
        int max_len = 0;
        dataset_from_json(load_json_file(dataset_path), trajs, labels, max_len);
        if (!labels.empty()) {
            MaxEntModel model(instance.mdp, instance.fmap, max_len);
            ResponsibilityMatrix u = e_step(learned, model, trajs);
            ResponsibilityMatrix v =
                ResponsibilityMatrix::from_labels(labels, instance.ground_truth.size());
            AnidReport anid_report = anid(u, v, mc_samples, seed);
            out["anid"] = anid_report_to_json(anid_report);
            std::cout << "anid = " << anid_report.anid << " (I = "
                      << anid_report.mutual_information << ", E[I'] = " << anid_report.expected_mi
                      << ")\n";
        }
    }
    if (!out_path.empty()) {
        save_json_file(out_path, out);
        std::cout << "wrote reports to " << out_path << "\npairing table above\n";
    }
    return 0;
}

int cmd_bench(const std::string& config_path, const std::string& out_prefix,
              std::uint64_t seed_override, bool has_seed) {
    ExperimentConfig config = experiment_config_from_json(load_json_file(config_path));
    if (has_seed) {
        std::vector<std::uint64_t> seeds;
        for (std::size_t i = 0; i < config.seeds.size(); ++i)
            seeds.push_back(seed_override + static_cast<std::uint64_t>(i));
        config.seeds = std::move(seeds);
    }
    BenchResult result = run_experiment(config);
    std::cout << bench_table_text(result);
    std::string prefix = out_prefix.empty() ? config.output_path : out_prefix;
    if (!prefix.empty()) {
        save_json_file(prefix + ".json", bench_to_json(result));
        std::ofstream csv(prefix + ".csv");
        csv << bench_to_csv(result);
        std::cout << "wrote " << prefix << ".json and " << prefix << ".csv\n";
    }
    return result.any_failed ? 1 : 0;
}

int cmd_sweep(const std::string& config_path, const std::string& axis,
              const std::vector<std::string>& values, const std::string& out_prefix,
              std::uint64_t seed_override, bool has_seed) {
    ExperimentConfig config = experiment_config_from_json(load_json_file(config_path));
    if (has_seed) {
        std::vector<std::uint64_t> seeds;
        for (std::size_t i = 0; i < config.seeds.size(); ++i)
            seeds.push_back(seed_override + static_cast<std::uint64_t>(i));
        config.seeds = std::move(seeds);
    }
    SweepResult sweep = run_sweep(config, sweep_axis_from_name(axis), values);
    std::string csv = sweep_to_csv(sweep);
    bool failed = false;
    for (const auto& cell : sweep.cells) {
        std::cout << "=== " << axis << " = " << cell.axis_value
                  << " (margin " << cell.mean_intercluster_margin << ") ===\n"
                  << bench_table_text(cell.result);
        failed = failed || cell.result.any_failed;
    }
    std::string prefix = out_prefix.empty() ? config.output_path : out_prefix;
    if (!prefix.empty()) {
        std::ofstream out(prefix + ".csv");
        out << csv;
        std::cout << "wrote " << prefix << ".csv\n";
    }
    return failed ? 1 : 0;
}

int cmd_assess(const std::string& instance_path, const std::string& dataset_path, int k,
               double atypical_fraction, std::uint64_t seed, const std::string& out_path) {
    ElementWorldInstance instance = instance_from_json(load_json_file(instance_path));
    std::vector<Trajectory> trajs;
    std::vector<int> labels;
    int max_len = 0;
    dataset_from_json(load_json_file(dataset_path), trajs, labels, max_len);
    if (labels.empty()) throw ValidationError("assess: dataset must carry intent labels");
    MaxEntModel model(instance.mdp, instance.fmap, max_len);
    if (k <= 0) k = instance.ground_truth.size();

    VerifyBoundOptions opts;
    opts.split.atypical_fraction = atypical_fraction;
    opts.expert_policies = ground_truth_policies(instance, 1e-8);
    VerifyBoundResult res = verify_bound_on_instance(model, trajs, labels, k, seed, opts);

    const auto& rep = res.report;
    std::cout << "assumption 1(a) " << (rep.assumption1a_holds ? "holds" : "violated")
              << ": d = " << rep.d << ", gamma = " << rep.gamma_margin << ", zeta = " << rep.zeta
              << "\n";
    std::cout << "assumption 1(b) " << (rep.assumption1b_holds ? "holds" : "violated")
              << ": radii max = " << (rep.radii.size() ? rep.radii.maxCoeff() : 0.0) << "\n";
    std::cout << "assumption 2   " << (rep.assumption2_holds ? "holds" : "violated")
              << ": delta = " << rep.delta << "\n";
    std::cout << "q-masses " << (rep.empirical_q ? "empirical" : "exact") << "\n";
    std::cout << "epsilon bound = " << res.epsilon_bound
              << ", observed first-step change = " << res.observed_first_step_change << " -> "
              << (res.certified
                      ? (res.observed_first_step_change <= res.epsilon_bound ? "bound holds"
                                                                             : "BOUND VIOLATED")
                      : "bound not guaranteed (assumptions not certified)")
              << "\n";
    if (!out_path.empty()) {
        json out{{"report", separation_report_to_json(rep)},
                 {"epsilon_bound", res.epsilon_bound},
                 {"observed_first_step_change", res.observed_first_step_change},
                 {"certified", res.certified}};
        save_json_file(out_path, out);
        std::cout << "wrote report to " << out_path << "\n";
    }
    if (res.certified && res.observed_first_step_change > res.epsilon_bound) return 2;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multiple-intent IRL benchmark harness"};
    app.require_subcommand(1);

    std::uint64_t seed = 0;
    app.add_option("--seed", seed, "global seed; per-component seeds derive from it");

    // generate
    auto* gen = app.add_subcommand("generate", "generate an ElementWorld instance");
    std::string gen_out = "instance.json";
    int gen_e = 3, gen_h = 6, gen_w = 0, gen_horizon = 0, gen_n = 0;
    double gen_wind = 0.1, gen_gamma = 0.99;
    bool gen_grid = false;
    gen->add_option("-o,--out", gen_out, "output instance path");
    gen->add_option("-E,--elements", gen_e, "number of elements");
    gen->add_option("-w,--wind", gen_wind, "wind probability");
    gen->add_option("--height", gen_h, "grid height");
    gen->add_option("--width", gen_w, "grid width (0 = 4E)");
    gen->add_option("--gamma", gen_gamma, "discount");
    gen->add_option("--horizon", gen_horizon, "demonstration length bound (0 = 3h)");
    gen->add_option("-n,--dataset", gen_n, "also sample a demonstration dataset of this size");
    gen->add_flag("--grid", gen_grid, "print the cell-type grid");

    // fit
    auto* fit = app.add_subcommand("fit", "fit a reward ensemble to a dataset");
    std::string fit_instance, fit_dataset, fit_alg = "limiirl-mle", fit_out = "fit.json";
    int fit_k = 0, fit_iters = 100;
    double fit_eps = 1e-2;
    fit->add_option("--instance", fit_instance, "instance JSON")->required();
    fit->add_option("--dataset", fit_dataset, "dataset JSON")->required();
    fit->add_option("--algorithm", fit_alg,
                    "limiirl-mle|limiirl-mean|limiirl-gmm-mle|limiirl-gmm-mean|random|supervised");
    fit->add_option("-K", fit_k, "number of learned intents (0 = ground-truth E)");
    fit->add_option("--epsilon", fit_eps, "EM convergence threshold");
    fit->add_option("--max-iters", fit_iters, "EM iteration cap");
    fit->add_option("-o,--out", fit_out, "output path");

    // eval
    auto* ev = app.add_subcommand("eval", "GEVD/ANID reports for a fitted ensemble");
    std::string ev_instance, ev_fit, ev_dataset, ev_out;
    double ev_tol = 1e-7;
    int ev_mc = 1000;
    ev->add_option("--instance", ev_instance, "instance JSON")->required();
    ev->add_option("--fit", ev_fit, "fit JSON (from the fit subcommand)")->required();
    ev->add_option("--dataset", ev_dataset, "labeled dataset for ANID");
    ev->add_option("--tol", ev_tol, "planner tolerance");
    ev->add_option("--mc-samples", ev_mc, "ANID Monte Carlo samples");
    ev->add_option("-o,--out", ev_out, "output report path");

    // bench
    auto* bench = app.add_subcommand("bench", "run a Table-style benchmark from a config");
    std::string bench_config, bench_out;
    bench->add_option("--config", bench_config, "experiment config JSON")->required();
    bench->add_option("-o,--out", bench_out, "output prefix (.json/.csv)");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "run a sensitivity sweep");
    std::string sweep_config, sweep_axis, sweep_out;
    std::vector<std::string> sweep_values;
    sweep->add_option("--config", sweep_config, "experiment config JSON")->required();
    sweep->add_option("--axis", sweep_axis,
                      "n_demos|wind|K|E|imbalance_p|clustering_method")
        ->required();
    sweep->add_option("--values", sweep_values, "axis values")->required();
    sweep->add_option("-o,--out", sweep_out, "output prefix (.csv)");

    // assess
    auto* assess = app.add_subcommand("assess", "separation report and Theorem-style bound check");
    std::string as_instance, as_dataset, as_out;
    int as_k = 0;
    double as_zeta = 0.0;
    assess->add_option("--instance", as_instance, "instance JSON")->required();
    assess->add_option("--dataset", as_dataset, "labeled dataset JSON")->required();
    assess->add_option("-K", as_k, "number of clusters (0 = ground-truth E)");
    assess->add_option("--atypical-fraction", as_zeta, "typical split rule");
    assess->add_option("-o,--out", as_out, "output report path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed())
            return cmd_generate(gen_out, gen_e, gen_wind, gen_h, gen_w, gen_gamma, seed,
                                gen_horizon, gen_n, gen_grid);
        if (fit->parsed())
            return cmd_fit(fit_instance, fit_dataset, fit_alg, fit_k, fit_eps, fit_iters, seed,
                           fit_out);
        if (ev->parsed())
            return cmd_eval(ev_instance, ev_fit, ev_dataset, ev_tol, ev_mc, seed, ev_out);
        if (bench->parsed())
            return cmd_bench(bench_config, bench_out, seed, app.count("--seed") > 0);
        if (sweep->parsed())
            return cmd_sweep(sweep_config, sweep_axis, sweep_values, sweep_out, seed,
                             app.count("--seed") > 0);
        if (assess->parsed())
            return cmd_assess(as_instance, as_dataset, as_k, as_zeta, seed, as_out);
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 0;
}
