#pragma once

// One simulated approach of a CAV towards the no-AD zone, plus batches of
// them. A run ticks at cfg.timestep: messages sent during a tick are encoded
// on the bus and delivered at the start of the next one.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tocsim/cav_agent.hpp"
#include "tocsim/core_model.hpp"
#include "tocsim/messages.hpp"
#include "tocsim/rng.hpp"
#include "tocsim/scenario.hpp"

namespace tocsim {

enum class Outcome {
    parked,
    stopped_on_lane,
    no_toc,           // never received a TOR before the zone (lossy channel)
    driver_takeover,
};

std::string_view to_string(Outcome outcome) noexcept;

enum class TraceLevel { none, error, info, debug };

/// Level named by SIM_LOG (error, info or debug); info when unset, none for
/// "none" or "off".
TraceLevel trace_level_from_env();

struct TraceEvent {
    double t = 0.0;
    std::string entity;
    std::string kind;
    double x = 0.0;
    double v = 0.0;
    std::string detail;

    friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

struct RunResult {
    Scheme scheme = Scheme::denm;
    Variant variant = Variant::denm_zero;
    int layout_id = 0;
    std::uint64_t seed = 0;
    std::optional<double> toc_x;
    Outcome outcome = Outcome::stopped_on_lane;
    std::optional<double> stop_x;
    double dist_at_mrm_speed = 0.0;
    std::optional<int> parked_window;
    std::vector<TraceEvent> trace;

    friend bool operator==(const RunResult&, const RunResult&) = default;
};

struct RunOptions {
    CalibrationProfile profile;
    int layout_id = 0;
    TraceLevel trace = TraceLevel::info;
    std::optional<double> driver_response_time;
};

/// Initial distance of the CAV from the zone.
double start_position(const ScenarioConfig& cfg) noexcept;

/// Throws Error(stuck_run) if the CAV has not reached a terminal mode after
/// ten times the expected duration of the approach.
RunResult run(const ScenarioConfig& cfg, const EmergencyLaneOccupancy& layout, std::uint64_t seed,
              const RunOptions& opts = {});

// ---------------------------------------------------------------------------
// Channel

enum class Entity : std::size_t { rsu = 0, cav = 1 };
inline constexpr std::size_t entity_count = 2;

std::string_view to_string(Entity entity) noexcept;

struct Envelope {
    Entity from = Entity::rsu;
    std::vector<std::uint8_t> bytes;
};

struct ChannelConfig {
    double comm_range = std::numeric_limits<double>::infinity();
    double p_loss = 0.0;
};

using Inboxes = std::array<std::vector<Message>, entity_count>;

/// Broadcast delivery: each envelope reaches every other entity strictly
/// closer than comm_range, dropped independently with probability p_loss.
/// The loss stream is only drawn from when 0 < p_loss < 1.
Inboxes deliver(std::span<const Envelope> bus, const std::array<double, entity_count>& positions,
                const ChannelConfig& channel, Rng& loss_rng);

/// Same as deliver, reusing the inbox buffers of `out`.
void deliver_into(std::span<const Envelope> bus, const std::array<double, entity_count>& positions,
                  const ChannelConfig& channel, Rng& loss_rng, Inboxes& out);

// ---------------------------------------------------------------------------
// Batches

struct BatchMode {
    enum class Kind { enumerate, monte_carlo };
    Kind kind = Kind::enumerate;
    int runs = 0;  // monte_carlo only

    static BatchMode enumerate() { return {}; }
    static BatchMode monte_carlo(int runs) { return {Kind::monte_carlo, runs}; }
};

struct BatchOptions {
    RunOptions run;
    /// Worker threads; 0 uses the hardware concurrency.
    unsigned threads = 0;
};

/// enumerate: one run per candidate layout, or cfg.replicates runs per layout
/// when the variant draws random TOR positions. monte_carlo: runs draws of
/// (layout, schedule). Run i uses run_seed(seed, i); results are in run
/// index order whatever the thread count.
std::vector<RunResult> batch(const ScenarioConfig& cfg, BatchMode mode, std::uint64_t seed,
                             const BatchOptions& opts = {});

/// Header row first, one row per run.
void write_runs_csv(std::ostream& os, const ScenarioConfig& cfg, const std::vector<RunResult>& results);

/// One JSON object per trace event, tagged with the run's index.
void write_trace_jsonl(std::ostream& os, const std::vector<RunResult>& results);

}  // namespace tocsim
