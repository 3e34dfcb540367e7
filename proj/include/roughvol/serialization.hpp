#pragma once

// JSON forms of the public records (nlohmann ADL hooks).

#include "roughvol/bootstrap.hpp"
#include "roughvol/calibrator.hpp"
#include "roughvol/stat_tests.hpp"

#include <nlohmann/json.hpp>

namespace roughvol {

using Json = nlohmann::ordered_json;

void to_json(Json& j, const ModelParams& p);
void from_json(const Json& j, ModelParams& p);

void to_json(Json& j, const MarketEnv& e);
void from_json(const Json& j, MarketEnv& e);

void to_json(Json& j, const ParamBounds& b);
void from_json(const Json& j, ParamBounds& b);

// Missing keys keep their defaults.
void to_json(Json& j, const CalibrationConfig& c);
void from_json(const Json& j, CalibrationConfig& c);

void to_json(Json& j, const PricingSettings& s);
void from_json(const Json& j, PricingSettings& s);

void to_json(Json& j, const FitMetrics& m);
void from_json(const Json& j, FitMetrics& m);

void to_json(Json& j, const CalibrationDiagnostics& d);
void from_json(const Json& j, CalibrationDiagnostics& d);

void to_json(Json& j, const CalibrationResult& r);
void from_json(const Json& j, CalibrationResult& r);

void to_json(Json& j, const BootstrapReport& r);
void from_json(const Json& j, BootstrapReport& r);

void to_json(Json& j, const KsResult& r);
void to_json(Json& j, const TTestResult& r);
void to_json(Json& j, const SensitivityResult& r);
void to_json(Json& j, const SignificanceResult& r);

}  // namespace roughvol
