#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "miirl/bounds.hpp"
#include "miirl/element_world.hpp"
#include "miirl/em.hpp"
#include "miirl/ensemble.hpp"
#include "miirl/mdp.hpp"
#include "miirl/metrics.hpp"

namespace miirl {

using json = nlohmann::json;

json to_json(const Eigen::VectorXd& v);
json to_json(const Eigen::MatrixXd& m);
Eigen::VectorXd vector_from_json(const json& j);
Eigen::MatrixXd matrix_from_json(const json& j);

// States and actions serialize as integer indices; trajectories as parallel
// index arrays; tensors as nested arrays.
json mdp_to_json(const TabularMdp& mdp);
TabularMdp mdp_from_json(const json& j);

json feature_map_to_json(const FeatureMap& fmap);
FeatureMap feature_map_from_json(const json& j);

json trajectory_to_json(const Trajectory& traj);
Trajectory trajectory_from_json(const json& j);

json dataset_to_json(const std::vector<Trajectory>& trajs, const std::vector<int>& labels,
                     int max_len);
void dataset_from_json(const json& j, std::vector<Trajectory>& trajs, std::vector<int>& labels,
                       int& max_len);

json ensemble_to_json(const RewardEnsemble& ensemble);
RewardEnsemble ensemble_from_json(const json& j);

json responsibilities_to_json(const ResponsibilityMatrix& u);
ResponsibilityMatrix responsibilities_from_json(const json& j);

json instance_to_json(const ElementWorldInstance& instance);
ElementWorldInstance instance_from_json(const json& j);

json element_world_config_to_json(const ElementWorldConfig& config);
ElementWorldConfig element_world_config_from_json(const json& j);

json em_trace_to_json(const EmTrace& trace);

json gevd_report_to_json(const GevdReport& report);
json anid_report_to_json(const AnidReport& report);
json separation_report_to_json(const SeparationReport& report);

json load_json_file(const std::string& path);
void save_json_file(const std::string& path, const json& j);

}  // namespace miirl
