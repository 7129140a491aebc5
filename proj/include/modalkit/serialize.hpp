#pragma once

#include <string>

#include <json.hpp>

#include "modalkit/bandwidth.hpp"
#include "modalkit/metrics.hpp"
#include "modalkit/modes.hpp"
#include "modalkit/uncertainty.hpp"

namespace modalkit::io {

using json = nlohmann::ordered_json;

json to_json(const modes::ModalCurve& curve);
json to_json(const bandwidth::BandwidthChoice& choice);
json to_json(const uncertainty::PredictionBand& band);
json to_json(const uncertainty::ConfidenceBand& band);
json to_json(const metrics::ErrorReport& report);

// Serializes with every floating-point number printed as %.17g so that equal
// inputs produce byte-identical documents. Rejects non-finite numbers.
std::string dump_json(const json& value, int indent = 2);

}  // namespace modalkit::io
