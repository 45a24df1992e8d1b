#pragma once

#include "mpdccp/metrics.hpp"
#include "mpdccp/scenario.hpp"

namespace mpdccp {

/// Runs one scenario to completion and returns everything it recorded.
///
/// Traffic stops at the scenario duration; the run then continues until no
/// events remain or the drain limit (duration + largest path latency +
/// reorder max_hold + drain) passes. Packets still queued at that point are
/// counted as undelivered. Identical (config, seed) give identical logs.
///
/// Throws ValidationError for an invalid config before any event runs.
MetricsLog run(const ScenarioConfig& config);

}  // namespace mpdccp
