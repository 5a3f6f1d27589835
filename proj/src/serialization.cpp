#include "miirl/serialization.hpp"

#include <fstream>

namespace miirl {

json to_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (long i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

json to_json(const Eigen::MatrixXd& m) {
    json out = json::array();
    for (long i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (long j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        out.push_back(std::move(row));
    }
    return out;
}

Eigen::VectorXd vector_from_json(const json& j) {
    Eigen::VectorXd v(static_cast<long>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<long>(i)] = j[i].get<double>();
    return v;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    const long rows = static_cast<long>(j.size());
    if (rows == 0) return Eigen::MatrixXd(0, 0);
    const long cols = static_cast<long>(j[0].size());
    Eigen::MatrixXd m(rows, cols);
    for (long i = 0; i < rows; ++i) {
        if (static_cast<long>(j[static_cast<std::size_t>(i)].size()) != cols)
            throw ValidationError("matrix_from_json: ragged rows");
        for (long c = 0; c < cols; ++c)
            m(i, c) = j[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)].get<double>();
    }
    return m;
}

json mdp_to_json(const TabularMdp& mdp) {
    json transitions = json::array();
    for (const auto& t : mdp.transition) transitions.push_back(to_json(t));
    return json{{"num_states", mdp.num_states},
                {"num_actions", mdp.num_actions},
                {"discount", mdp.discount},
                {"start_dist", to_json(mdp.start_dist)},
                {"terminal_states", mdp.terminal_states()},
                {"transition", std::move(transitions)}};
}

TabularMdp mdp_from_json(const json& j) {
    TabularMdp mdp;
    mdp.num_states = j.at("num_states").get<int>();
    mdp.num_actions = j.at("num_actions").get<int>();
    mdp.discount = j.at("discount").get<double>();
    mdp.start_dist = vector_from_json(j.at("start_dist"));
    mdp.terminal.assign(static_cast<std::size_t>(mdp.num_states), 0);
    for (const auto& s : j.at("terminal_states"))
        mdp.terminal.at(s.get<std::size_t>()) = 1;
    for (const auto& t : j.at("transition")) mdp.transition.push_back(matrix_from_json(t));
    mdp.validate();
    return mdp;
}

json feature_map_to_json(const FeatureMap& fmap) {
    return json{{"dim", fmap.dim()},
                {"kind", fmap.is_state_based() ? "state" : "transition"},
                {"centered", fmap.centered()},
                {"num_states", fmap.num_states()},
                {"num_actions", fmap.num_actions()},
                {"values", to_json(fmap.raw_values())}};
}

FeatureMap feature_map_from_json(const json& j) {
    Eigen::MatrixXd values = matrix_from_json(j.at("values"));
    FeatureMap fmap;
    if (j.at("kind").get<std::string>() == "state")
        fmap = FeatureMap::from_state_features(std::move(values));
    else
        fmap = FeatureMap::from_transition_features(j.at("num_states").get<int>(),
                                                    j.at("num_actions").get<int>(),
                                                    std::move(values));
    fmap.mark_centered(j.value("centered", false));
    return fmap;
}

json trajectory_to_json(const Trajectory& traj) {
    return json{{"states", traj.states}, {"actions", traj.actions}};
}

Trajectory trajectory_from_json(const json& j) {
    Trajectory traj;
    traj.states = j.at("states").get<std::vector<int>>();
    traj.actions = j.at("actions").get<std::vector<int>>();
    return traj;
}

json dataset_to_json(const std::vector<Trajectory>& trajs, const std::vector<int>& labels,
                     int max_len) {
    json arr = json::array();
    for (const auto& t : trajs) arr.push_back(trajectory_to_json(t));
    json out{{"max_len", max_len}, {"trajectories", std::move(arr)}};
    if (!labels.empty()) out["labels"] = labels;
    return out;
}

void dataset_from_json(const json& j, std::vector<Trajectory>& trajs, std::vector<int>& labels,
                       int& max_len) {
    max_len = j.at("max_len").get<int>();
    trajs.clear();
    for (const auto& t : j.at("trajectories")) trajs.push_back(trajectory_from_json(t));
    labels.clear();
    if (j.contains("labels")) labels = j.at("labels").get<std::vector<int>>();
}

json ensemble_to_json(const RewardEnsemble& ensemble) {
    json params = json::array();
    for (const auto& p : ensemble.params) params.push_back(to_json(p.theta));
    return json{{"weights", to_json(ensemble.weights)}, {"params", std::move(params)}};
}

RewardEnsemble ensemble_from_json(const json& j) {
    RewardEnsemble e;
    e.weights = vector_from_json(j.at("weights"));
    for (const auto& p : j.at("params")) e.params.push_back({vector_from_json(p)});
    e.validate();
    return e;
}

json responsibilities_to_json(const ResponsibilityMatrix& u) {
    return json{{"u", to_json(u.u)}};
}

ResponsibilityMatrix responsibilities_from_json(const json& j) {
    ResponsibilityMatrix r;
    r.u = matrix_from_json(j.at("u"));
    r.validate();
    return r;
}

json element_world_config_to_json(const ElementWorldConfig& config) {
    json out{{"num_elements", config.num_elements}, {"wind", config.wind},
             {"height", config.height},           {"width", config.width},
             {"seed", config.seed},               {"gamma", config.gamma},
             {"horizon", config.horizon}};
    if (config.cluster_weights.size() != 0)
        out["cluster_weights"] = to_json(config.cluster_weights);
    return out;
}

ElementWorldConfig element_world_config_from_json(const json& j) {
    ElementWorldConfig c;
    c.num_elements = j.value("num_elements", c.num_elements);
    c.wind = j.value("wind", c.wind);
    c.height = j.value("height", c.height);
    c.width = j.value("width", 0);
    c.seed = j.value("seed", static_cast<std::uint64_t>(0));
    c.gamma = j.value("gamma", c.gamma);
    c.horizon = j.value("horizon", 0);
    if (j.contains("cluster_weights")) c.cluster_weights = vector_from_json(j.at("cluster_weights"));
    c.validate();
    return c;
}

json instance_to_json(const ElementWorldInstance& instance) {
    return json{{"config", element_world_config_to_json(instance.config)},
                {"mdp", mdp_to_json(instance.mdp)},
                {"feature_map", feature_map_to_json(instance.fmap)},
                {"ground_truth", ensemble_to_json(instance.ground_truth)},
                {"cell_types", instance.cell_types}};
}

ElementWorldInstance instance_from_json(const json& j) {
    ElementWorldInstance inst;
    inst.config = element_world_config_from_json(j.at("config"));
    inst.mdp = mdp_from_json(j.at("mdp"));
    inst.fmap = feature_map_from_json(j.at("feature_map"));
    inst.ground_truth = ensemble_from_json(j.at("ground_truth"));
    inst.cell_types = j.at("cell_types").get<std::vector<std::vector<int>>>();
    return inst;
}

json em_trace_to_json(const EmTrace& trace) {
    json rows = json::array();
    for (const auto& r : trace.rows)
        rows.push_back(json{{"iteration", r.iteration},
                            {"responsibility_change", r.responsibility_change},
                            {"train_nll", r.train_nll},
                            {"wall_time_s", r.wall_time_s},
                            {"estep_fallback", r.estep_fallback},
                            {"mstep_degenerate", r.mstep_degenerate},
                            {"mstep_nonconverged", r.mstep_nonconverged}});
    return json{{"rows", std::move(rows)},
                {"initial_nll", trace.initial_nll},
                {"iterations", trace.iterations},
                {"converged", trace.converged},
                {"final_change", trace.final_change}};
}

json gevd_report_to_json(const GevdReport& report) {
    return json{{"pairwise_evd", to_json(report.pairwise_evd)},
                {"flow", to_json(report.flow)},
                {"gevd", report.gevd},
                {"normalizer", report.normalizer},
                {"normalized_gevd", report.normalized_gevd},
                {"degenerate_normalizer", report.degenerate_normalizer},
                {"clipped", report.clipped}};
}

json anid_report_to_json(const AnidReport& report) {
    return json{{"mutual_information", report.mutual_information},
                {"entropy_u", report.entropy_u},
                {"entropy_v", report.entropy_v},
                {"expected_mi", report.expected_mi},
                {"mc_stderr", report.mc_stderr},
                {"anid", report.anid},
                {"clipped", report.clipped},
                {"degenerate", report.degenerate},
                {"mc_samples", report.mc_samples},
                {"mc_seed", report.mc_seed}};
}

json separation_report_to_json(const SeparationReport& report) {
    json phi_bar = json::array();
    for (const auto& p : report.phi_bar) phi_bar.push_back(to_json(p));
    return json{{"num_intents", report.num_intents},
                {"d", report.d},
                {"gamma_margin", report.gamma_margin},
                {"zeta", report.zeta},
                {"delta", report.delta},
                {"radii", to_json(report.radii)},
                {"d_tilde", report.d_tilde},
                {"gamma_tilde", report.gamma_tilde},
                {"beta", std::isinf(report.beta) ? json("inf") : json(report.beta)},
                {"epsilon_bound", report.epsilon_bound},
                {"q_masses", to_json(report.q_masses)},
                {"q_not_masses", to_json(report.q_not_masses)},
                {"phi_bar", std::move(phi_bar)},
                {"cluster_sizes", to_json(report.cluster_sizes)},
                {"cone_angles", to_json(report.cone_angles)},
                {"assumption1a_holds", report.assumption1a_holds},
                {"assumption1b_holds", report.assumption1b_holds},
                {"assumption2_holds", report.assumption2_holds},
                {"empirical_q", report.empirical_q}};
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open file: " + path);
    json j;
    in >> j;
    return j;
}

void save_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write file: " + path);
    out << j.dump(2) << "\n";
}

}  // namespace miirl
