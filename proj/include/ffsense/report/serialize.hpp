#pragma once

#include <json.hpp>

#include "ffsense/metrics/metrics.hpp"

// JSON form of the metric reports, as written by `ffsense analyze` and read
// back by `ffsense report`. Doubles round-trip exactly.
namespace ffsense::report {

nlohmann::json to_json(const metrics::ClassificationReport& r);
nlohmann::json to_json(const metrics::RegressionReport& r);
nlohmann::json to_json(const metrics::FilterDistortionReport& r);
nlohmann::json to_json(const metrics::AgeDeviationReport& r);
nlohmann::json to_json(const metrics::ConfusionMatrix& m);
nlohmann::json to_json(const metrics::MispredictionTable& t);

// Throw DomainError on a missing or mistyped field.
metrics::ClassificationReport classification_from_json(const nlohmann::json& j);
metrics::RegressionReport regression_from_json(const nlohmann::json& j);
metrics::FilterDistortionReport distortion_from_json(const nlohmann::json& j);
metrics::AgeDeviationReport age_deviation_from_json(const nlohmann::json& j);
metrics::ConfusionMatrix confusion_from_json(const nlohmann::json& j);
metrics::MispredictionTable mispredictions_from_json(const nlohmann::json& j);

}  // namespace ffsense::report
