#pragma once

#include "stfm/dataset.hpp"
#include "stfm/factor.hpp"
#include "stfm/forecast.hpp"
#include "stfm/sieve.hpp"
#include "stfm/simgen.hpp"

#include "json.hpp"

#include <filesystem>

namespace stfm {

using Json = nlohmann::json;

// Matrices are written as flat row-major arrays next to explicit dimension fields.
Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j, Eigen::Index rows, Eigen::Index cols);

Json to_json(const FactorFit& fit);
FactorFit factor_fit_from_json(const Json& j);

Json to_json(const SieveFit& fit);
SieveFit sieve_fit_from_json(const Json& j);

Json to_json(const VarModel& model);
Json to_json(const MarModel& model);
Json to_json(const TemporalModel& model);
TemporalModel temporal_model_from_json(const Json& j);

Json to_json(const ScalingParams& params);
ScalingParams scaling_params_from_json(const Json& j);

Json to_json(const CoefficientField& field);
CoefficientField coefficient_field_from_json(const Json& j);

Json to_json(const SimConfig& config);
/// Missing keys keep their defaults; unknown keys are rejected.
SimConfig sim_config_from_json(const Json& j);
Json to_json(const SimGroundTruth& truth);

Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& j);

}  // namespace stfm
