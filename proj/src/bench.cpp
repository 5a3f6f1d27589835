#include "miirl/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "miirl/bounds.hpp"
#include "miirl/parallel.hpp"
#include "miirl/rng.hpp"

namespace miirl {

std::string algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::LimiirlMle: return "limiirl-mle";
        case Algorithm::LimiirlMean: return "limiirl-mean";
        case Algorithm::LimiirlGmmMle: return "limiirl-gmm-mle";
        case Algorithm::LimiirlGmmMean: return "limiirl-gmm-mean";
        case Algorithm::Random: return "random";
        case Algorithm::Supervised: return "supervised";
    }
    return "unknown";
}

Algorithm algorithm_from_name(const std::string& name) {
    if (name == "limiirl-mle") return Algorithm::LimiirlMle;
    if (name == "limiirl-mean") return Algorithm::LimiirlMean;
    if (name == "limiirl-gmm-mle") return Algorithm::LimiirlGmmMle;
    if (name == "limiirl-gmm-mean") return Algorithm::LimiirlGmmMean;
    if (name == "random") return Algorithm::Random;
    if (name == "supervised") return Algorithm::Supervised;
    throw ValidationError("unknown algorithm: " + name);
}

void ExperimentConfig::validate() const {
    if (instance_path.empty()) environment.validate();
    if (algorithms.empty()) throw ValidationError("ExperimentConfig: no algorithms");
    if (seeds.empty()) throw ValidationError("ExperimentConfig: seeds must be non-empty");
    if (n_train < 1 || n_test < 1)
        throw ValidationError("ExperimentConfig: dataset sizes must be positive");
    if (!(em_epsilon > 0.0)) throw ValidationError("ExperimentConfig: epsilon must be positive");
    if (!(planner_tol > 0.0))
        throw ValidationError("ExperimentConfig: planner_tol must be positive");
    if (!(imbalance_p >= 0.0 && imbalance_p < 1.0))
        throw ValidationError("ExperimentConfig: imbalance_p must lie in [0, 1)");
}

ExperimentConfig experiment_config_from_json(const json& j) {
    ExperimentConfig c;
    if (j.contains("environment")) {
        const auto& env = j.at("environment");
        if (env.contains("instance_path"))
            c.instance_path = env.at("instance_path").get<std::string>();
        else
            c.environment = element_world_config_from_json(env);
    }
    c.algorithms.clear();
    if (j.contains("algorithms"))
        for (const auto& a : j.at("algorithms"))
            c.algorithms.push_back(algorithm_from_name(a.get<std::string>()));
    else if (j.contains("algorithm"))
        c.algorithms.push_back(algorithm_from_name(j.at("algorithm").get<std::string>()));
    else
        c.algorithms.push_back(Algorithm::LimiirlMle);
    c.num_clusters = j.value("K", 0);
    c.n_train = j.value("n_train", c.n_train);
    c.n_test = j.value("n_test", c.n_test);
    c.em_epsilon = j.value("epsilon", c.em_epsilon);
    c.em_max_iters = j.value("em_max_iters", c.em_max_iters);
    c.planner_tol = j.value("planner_tol", c.planner_tol);
    c.imbalance_p = j.value("imbalance_p", c.imbalance_p);
    if (j.contains("seeds")) {
        c.seeds.clear();
        for (const auto& s : j.at("seeds")) c.seeds.push_back(s.get<std::uint64_t>());
    } else if (j.contains("num_seeds")) {
        c.seeds.clear();
        std::uint64_t base = j.value("base_seed", static_cast<std::uint64_t>(0));
        for (int i = 0; i < j.at("num_seeds").get<int>(); ++i)
            c.seeds.push_back(base + static_cast<std::uint64_t>(i));
    }
    c.compute_anid = j.value("compute_anid", true);
    c.compute_gevd = j.value("compute_gevd", true);
    c.anid_mc_samples = j.value("anid_mc_samples", c.anid_mc_samples);
    c.workers = j.value("workers", 0);
    c.output_path = j.value("output_path", std::string());
    c.validate();
    return c;
}

json experiment_config_to_json(const ExperimentConfig& config) {
    json algs = json::array();
    for (Algorithm a : config.algorithms) algs.push_back(algorithm_name(a));
    json env = config.instance_path.empty()
                   ? element_world_config_to_json(config.environment)
                   : json{{"instance_path", config.instance_path}};
    return json{{"environment", std::move(env)},
                {"algorithms", std::move(algs)},
                {"K", config.num_clusters},
                {"n_train", config.n_train},
                {"n_test", config.n_test},
                {"epsilon", config.em_epsilon},
                {"em_max_iters", config.em_max_iters},
                {"planner_tol", config.planner_tol},
                {"imbalance_p", config.imbalance_p},
                {"seeds", config.seeds},
                {"compute_anid", config.compute_anid},
                {"compute_gevd", config.compute_gevd},
                {"anid_mc_samples", config.anid_mc_samples},
                {"workers", config.workers},
                {"output_path", config.output_path}};
}

namespace {

ElementWorldInstance instance_for_seed(const ExperimentConfig& config, std::uint64_t seed) {
    if (!config.instance_path.empty())
        return instance_from_json(load_json_file(config.instance_path));
    ElementWorldConfig env = config.environment;
    env.seed = derive_seed(seed, {seed_stream::kInstance});
    return generate(env);
}

RunRecord run_single(const ExperimentConfig& config, Algorithm algorithm, std::uint64_t seed) {
    RunRecord rec;
    rec.algorithm = algorithm;
    rec.seed = seed;

    ElementWorldInstance instance = instance_for_seed(config, seed);
    const int e = instance.ground_truth.size();
    Eigen::VectorXd weights = config.imbalance_p > 0.0
                                  ? geometric_weights(e, config.imbalance_p)
                                  : instance.ground_truth.weights;
    auto [train, train_labels] =
        make_dataset(instance, config.n_train, derive_seed(seed, {seed_stream::kTrainData}),
                     weights);
    auto [test, test_labels] =
        make_dataset(instance, config.n_test, derive_seed(seed, {seed_stream::kTestData}),
                     weights);
    MaxEntModel model(instance.mdp, instance.fmap, instance.config.effective_horizon());

    const int k = config.num_clusters > 0 ? config.num_clusters : e;
    const std::uint64_t algo_seed = derive_seed(seed, {seed_stream::kAlgorithm});

    EmOptions em_opts;
    em_opts.epsilon = config.em_epsilon;
    em_opts.max_iters = config.em_max_iters;

    auto started = std::chrono::steady_clock::now();
    RewardEnsemble ensemble;
    if (algorithm == Algorithm::Supervised) {
        ensemble = supervised_baseline(model, train, train_labels);
        rec.iterations = 0;  // no EM loop; reported as N/A
        rec.converged = true;
    } else if (algorithm == Algorithm::Random) {
        RunEmResult em = run_em(model, train, random_init(model.feature_dim(), k, algo_seed),
                                em_opts);
        ensemble = std::move(em.ensemble);
        rec.iterations = em.trace.iterations;
        rec.converged = em.trace.converged;
    } else {
        ClusterMethod method = (algorithm == Algorithm::LimiirlGmmMle ||
                                algorithm == Algorithm::LimiirlGmmMean)
                                   ? ClusterMethod::Gmm
                                   : ClusterMethod::KMeans;
        InitMethod init = (algorithm == Algorithm::LimiirlMle ||
                           algorithm == Algorithm::LimiirlGmmMle)
                              ? InitMethod::Mle
                              : InitMethod::Mean;
        WarmStartResult ws = warmstart(model, train, k, method, init, algo_seed);
        em_opts.initial_u = ws.memberships;
        RunEmResult em = run_em(model, train, ws.ensemble, em_opts);
        ensemble = std::move(em.ensemble);
        rec.iterations = em.trace.iterations;
        rec.converged = em.trace.converged;
    }
    rec.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    rec.test_nll = mixture_nll(ensemble, model, test);
    if (config.compute_anid) {
        ResponsibilityMatrix u = e_step(ensemble, model, test);
        ResponsibilityMatrix v = ResponsibilityMatrix::from_labels(test_labels, e);
        rec.anid = anid(u, v, config.anid_mc_samples, derive_seed(seed, {seed_stream::kAnid}))
                       .anid;
    }
    if (config.compute_gevd) {
        RewardEnsemble gt = instance.ground_truth;
        gt.weights = weights;  // the intent distribution the data was drawn from
        GevdReport report = gevd(instance.mdp, instance.fmap, gt, ensemble, config.planner_tol);
        rec.gevd = report.gevd;
        rec.normalized_gevd = report.normalized_gevd;
    }
    rec.ensemble = std::move(ensemble);
    return rec;
}

MetricAggregate aggregate(const std::vector<double>& xs) {
    MetricAggregate agg;
    if (xs.empty()) return agg;
    for (double x : xs) agg.mean += x;
    agg.mean /= static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double var = 0.0;
        for (double x : xs) var += (x - agg.mean) * (x - agg.mean);
        var /= static_cast<double>(xs.size() - 1);
        agg.ci95 = 1.96 * std::sqrt(var / static_cast<double>(xs.size()));
    }
    return agg;
}

AlgorithmSummary summarize(Algorithm algorithm, const std::vector<RunRecord>& records) {
    AlgorithmSummary s;
    s.algorithm = algorithm;
    std::vector<double> iters, wall, nll, anid_v, gevd_v, ngevd;
    for (const auto& r : records) {
        if (r.algorithm != algorithm) continue;
        ++s.runs;
        if (r.failed) {
            ++s.failures;
            continue;
        }
        iters.push_back(r.iterations);
        wall.push_back(r.wall_time_s);
        nll.push_back(r.test_nll);
        anid_v.push_back(r.anid);
        gevd_v.push_back(r.gevd);
        ngevd.push_back(r.normalized_gevd);
    }
    s.iterations = aggregate(iters);
    s.wall_time_s = aggregate(wall);
    s.test_nll = aggregate(nll);
    s.anid = aggregate(anid_v);
    s.gevd = aggregate(gevd_v);
    s.normalized_gevd = aggregate(ngevd);
    return s;
}

}  // namespace

BenchResult run_experiment(const ExperimentConfig& config) {
    config.validate();
    const int jobs = static_cast<int>(config.algorithms.size() * config.seeds.size());
    BenchResult result;
    result.records.resize(static_cast<std::size_t>(jobs));
    int workers = config.workers > 0 ? config.workers : default_worker_count();
    parallel_for(jobs, workers, [&](int idx) {
        Algorithm alg = config.algorithms[static_cast<std::size_t>(idx) % config.algorithms.size()];
        std::uint64_t seed = config.seeds[static_cast<std::size_t>(idx) / config.algorithms.size()];
        try {
            result.records[static_cast<std::size_t>(idx)] = run_single(config, alg, seed);
        } catch (const std::exception& ex) {
            RunRecord rec;
            rec.algorithm = alg;
            rec.seed = seed;
            rec.failed = true;
            rec.error = ex.what();
            result.records[static_cast<std::size_t>(idx)] = std::move(rec);
        }
    });
    for (const auto& r : result.records) result.any_failed = result.any_failed || r.failed;
    for (Algorithm a : config.algorithms)
        result.summaries.push_back(summarize(a, result.records));
    return result;
}

SweepAxis sweep_axis_from_name(const std::string& name) {
    if (name == "n_demos") return SweepAxis::NumDemos;
    if (name == "wind") return SweepAxis::Wind;
    if (name == "K") return SweepAxis::NumClusters;
    if (name == "E") return SweepAxis::NumElements;
    if (name == "imbalance_p") return SweepAxis::ImbalanceP;
    if (name == "clustering_method") return SweepAxis::ClusteringMethod;
    throw ValidationError("unknown sweep axis: " + name);
}

std::string sweep_axis_name(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::NumDemos: return "n_demos";
        case SweepAxis::Wind: return "wind";
        case SweepAxis::NumClusters: return "K";
        case SweepAxis::NumElements: return "E";
        case SweepAxis::ImbalanceP: return "imbalance_p";
        case SweepAxis::ClusteringMethod: return "clustering_method";
    }
    return "unknown";
}

namespace {

ExperimentConfig apply_axis(const ExperimentConfig& base, SweepAxis axis,
                            const std::string& value) {
    ExperimentConfig c = base;
    switch (axis) {
        case SweepAxis::NumDemos:
            c.n_train = std::stoi(value);
            break;
        case SweepAxis::Wind:
            c.environment.wind = std::stod(value);
            break;
        case SweepAxis::NumClusters:
            c.num_clusters = std::stoi(value);
            break;
        case SweepAxis::NumElements:
            c.environment.num_elements = std::stoi(value);
            break;
        case SweepAxis::ImbalanceP:
            c.imbalance_p = std::stod(value);
            break;
        case SweepAxis::ClusteringMethod: {
            const bool gmm = value == "gmm";
            if (!gmm && value != "kmeans")
                throw ValidationError("clustering_method axis takes kmeans or gmm");
            for (auto& a : c.algorithms) {
                if (a == Algorithm::LimiirlMle || a == Algorithm::LimiirlGmmMle)
                    a = gmm ? Algorithm::LimiirlGmmMle : Algorithm::LimiirlMle;
                if (a == Algorithm::LimiirlMean || a == Algorithm::LimiirlGmmMean)
                    a = gmm ? Algorithm::LimiirlGmmMean : Algorithm::LimiirlMean;
            }
            break;
        }
    }
    return c;
}

double cell_margin(const ExperimentConfig& config) {
    // Mean inter-cluster feature margin of the cell's training datasets,
    // averaged over seeds.
    double total = 0.0;
    int count = 0;
    for (std::uint64_t seed : config.seeds) {
        ElementWorldInstance instance = instance_for_seed(config, seed);
        Eigen::VectorXd weights =
            config.imbalance_p > 0.0
                ? geometric_weights(instance.ground_truth.size(), config.imbalance_p)
                : instance.ground_truth.weights;
        auto [train, labels] = make_dataset(instance, config.n_train,
                                            derive_seed(seed, {seed_stream::kTrainData}),
                                            weights);
        Eigen::MatrixXd features(static_cast<long>(train.size()), instance.fmap.dim());
        for (std::size_t i = 0; i < train.size(); ++i)
            features.row(static_cast<long>(i)) =
                trajectory_features(instance.mdp, instance.fmap, train[i]).transpose();
        bool all_intents = true;
        for (int c = 0; c < instance.ground_truth.size(); ++c)
            all_intents = all_intents &&
                          std::count(labels.begin(), labels.end(), c) > 0;
        if (!all_intents) continue;
        total += mean_intercluster_margin(features, labels);
        ++count;
    }
    return count > 0 ? total / count : 0.0;
}

}  // namespace

SweepResult run_sweep(const ExperimentConfig& base, SweepAxis axis,
                      const std::vector<std::string>& values) {
    if (values.empty()) throw ValidationError("run_sweep: empty value list");
    SweepResult sweep;
    sweep.axis = axis;
    for (const auto& value : values) {
        ExperimentConfig config = apply_axis(base, axis, value);
        SweepCell cell;
        cell.axis_value = value;
        cell.result = run_experiment(config);
        cell.mean_intercluster_margin = cell_margin(config);
        sweep.cells.push_back(std::move(cell));
    }
    return sweep;
}

namespace {

std::string csv_header(bool with_axis) {
    std::string head;
    if (with_axis) head += "axis,value,";
    head +=
        "algorithm,seed,kind,iterations,wall_time_s,test_nll,anid,gevd,normalized_gevd,"
        "margin,converged,failed\n";
    return head;
}

void append_record_row(std::string& out, const std::string& prefix, const RunRecord& r,
                       double margin) {
    char line[512];
    std::snprintf(line, sizeof(line), "%s%s,%llu,run,%d,%.6f,%.12g,%.12g,%.12g,%.12g,%.12g,%d,%d\n",
                  prefix.c_str(), algorithm_name(r.algorithm).c_str(),
                  static_cast<unsigned long long>(r.seed), r.iterations, r.wall_time_s,
                  r.test_nll, r.anid, r.gevd, r.normalized_gevd, margin, r.converged ? 1 : 0,
                  r.failed ? 1 : 0);
    out += line;
}

void append_summary_rows(std::string& out, const std::string& prefix,
                         const AlgorithmSummary& s, double margin) {
    char line[512];
    std::snprintf(line, sizeof(line),
                  "%s%s,-1,mean,%.6f,%.6f,%.12g,%.12g,%.12g,%.12g,%.12g,-1,%d\n", prefix.c_str(),
                  algorithm_name(s.algorithm).c_str(), s.iterations.mean, s.wall_time_s.mean,
                  s.test_nll.mean, s.anid.mean, s.gevd.mean, s.normalized_gevd.mean, margin,
                  s.failures);
    out += line;
    std::snprintf(line, sizeof(line),
                  "%s%s,-1,ci95,%.6f,%.6f,%.12g,%.12g,%.12g,%.12g,%.12g,-1,%d\n", prefix.c_str(),
                  algorithm_name(s.algorithm).c_str(), s.iterations.ci95, s.wall_time_s.ci95,
                  s.test_nll.ci95, s.anid.ci95, s.gevd.ci95, s.normalized_gevd.ci95, margin,
                  s.failures);
    out += line;
}

}  // namespace

std::string bench_to_csv(const BenchResult& result) {
    std::string out = csv_header(false);
    for (const auto& r : result.records) append_record_row(out, "", r, 0.0);
    for (const auto& s : result.summaries) append_summary_rows(out, "", s, 0.0);
    return out;
}

std::string sweep_to_csv(const SweepResult& sweep) {
    std::string out = csv_header(true);
    const std::string axis = sweep_axis_name(sweep.axis);
    for (const auto& cell : sweep.cells) {
        std::string prefix = axis + "," + cell.axis_value + ",";
        for (const auto& r : cell.result.records)
            append_record_row(out, prefix, r, cell.mean_intercluster_margin);
        for (const auto& s : cell.result.summaries)
            append_summary_rows(out, prefix, s, cell.mean_intercluster_margin);
    }
    return out;
}

std::string bench_table_text(const BenchResult& result) {
    std::ostringstream out;
    out << "Algorithm            Iterations        Duration (s)      NLL               ANID "
           "             GEVD\n";
    for (const auto& s : result.summaries) {
        char iters[48];
        if (s.algorithm == Algorithm::Supervised)
            std::snprintf(iters, sizeof(iters), "%-17s", "N/A");
        else
            std::snprintf(iters, sizeof(iters), "%6.2f +- %-7.2f", s.iterations.mean,
                          s.iterations.ci95);
        char line[512];
        std::snprintf(line, sizeof(line), "%-20s %s %6.2f +- %-7.2f %6.2f +- %-7.2f "
                      "%5.3f +- %-6.3f %6.2f +- %-6.2f\n",
                      algorithm_name(s.algorithm).c_str(), iters, s.wall_time_s.mean,
                      s.wall_time_s.ci95, s.test_nll.mean, s.test_nll.ci95, s.anid.mean,
                      s.anid.ci95, s.gevd.mean, s.gevd.ci95);
        out << line;
    }
    return out.str();
}

json bench_to_json(const BenchResult& result) {
    json records = json::array();
    for (const auto& r : result.records) {
        json rec{{"algorithm", algorithm_name(r.algorithm)},
                 {"seed", r.seed},
                 {"iterations", r.iterations},
                 {"wall_time_s", r.wall_time_s},
                 {"test_nll", r.test_nll},
                 {"anid", r.anid},
                 {"gevd", r.gevd},
                 {"normalized_gevd", r.normalized_gevd},
                 {"converged", r.converged},
                 {"failed", r.failed}};
        if (r.failed) rec["error"] = r.error;
        if (!r.failed) rec["ensemble"] = ensemble_to_json(r.ensemble);
        records.push_back(std::move(rec));
    }
    json summaries = json::array();
    for (const auto& s : result.summaries) {
        auto agg = [](const MetricAggregate& a) {
            return json{{"mean", a.mean}, {"ci95", a.ci95}};
        };
        summaries.push_back(json{{"algorithm", algorithm_name(s.algorithm)},
                                 {"runs", s.runs},
                                 {"failures", s.failures},
                                 {"iterations", agg(s.iterations)},
                                 {"wall_time_s", agg(s.wall_time_s)},
                                 {"test_nll", agg(s.test_nll)},
                                 {"anid", agg(s.anid)},
                                 {"gevd", agg(s.gevd)},
                                 {"normalized_gevd", agg(s.normalized_gevd)}});
    }
    return json{{"records", std::move(records)},
                {"summaries", std::move(summaries)},
                {"any_failed", result.any_failed}};
}

}  // namespace miirl
