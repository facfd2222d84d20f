#include "tocsim/sim_engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "tocsim/error.hpp"
#include "tocsim/rsu_agent.hpp"

namespace tocsim {

std::string_view to_string(Outcome outcome) noexcept {
    switch (outcome) {
        case Outcome::parked: return "parked";
        case Outcome::stopped_on_lane: return "stopped_on_lane";
        case Outcome::no_toc: return "no_toc";
        case Outcome::driver_takeover: return "driver_takeover";
    }
    return "unknown";
}

std::string_view to_string(Entity entity) noexcept { return entity == Entity::rsu ? "rsu" : "cav"; }

TraceLevel trace_level_from_env() {
    const char* raw = std::getenv("SIM_LOG");
    if (raw == nullptr) return TraceLevel::info;
    const std::string_view v(raw);
    if (v == "none" || v == "off") return TraceLevel::none;
    if (v == "error") return TraceLevel::error;
    if (v == "debug") return TraceLevel::debug;
    return TraceLevel::info;
}

double start_position(const ScenarioConfig& cfg) noexcept { return cfg.max_toc_range + 100.0; }

void deliver_into(std::span<const Envelope> bus, const std::array<double, entity_count>& positions,
                  const ChannelConfig& channel, Rng& loss_rng, Inboxes& out) {
    for (auto& inbox : out) inbox.clear();
    if (channel.p_loss >= 1.0) return;
    for (const auto& env : bus) {
        const auto from = static_cast<std::size_t>(env.from);
        std::optional<Message> msg;
        for (std::size_t to = 0; to < entity_count; ++to) {
            if (to == from) continue;
            if (!(std::abs(positions[to] - positions[from]) < channel.comm_range)) continue;
            if (channel.p_loss > 0.0 && loss_rng.uniform01() < channel.p_loss) continue;
            if (!msg) msg = decode(env.bytes);
            out[to].push_back(*msg);
        }
    }
}

Inboxes deliver(std::span<const Envelope> bus, const std::array<double, entity_count>& positions,
                const ChannelConfig& channel, Rng& loss_rng) {
    Inboxes out;
    deliver_into(bus, positions, channel, loss_rng, out);
    return out;
}

namespace {

class Tracer {
public:
    explicit Tracer(TraceLevel level) : level_(level) {}

    bool enabled(TraceLevel level) const noexcept { return level_ != TraceLevel::none && level <= level_; }

    void add(TraceLevel level, double t, Entity entity, std::string_view kind, double x, double v,
             std::string detail = {}) {
        if (!enabled(level)) return;
        events_.push_back({t, std::string(to_string(entity)), std::string(kind), x, v, std::move(detail)});
    }

    std::vector<TraceEvent> take() { return std::move(events_); }

private:
    TraceLevel level_;
    std::vector<TraceEvent> events_;
};

std::string mode_change_detail(const ModeChange& c) {
    return fmt::format("{}>{}", to_string(c.from), to_string(c.to));
}

}  // namespace

RunResult run(const ScenarioConfig& cfg, const EmergencyLaneOccupancy& layout, std::uint64_t seed,
              const RunOptions& opts) {
    cfg.validate();
    opts.profile.validate(cfg.spot_length());

    const double dt = cfg.timestep;
    CavContext ctx{cfg, opts.profile, 7, SaeLevel::l3, opts.driver_response_time};
    VehicleState initial;
    initial.x = start_position(cfg);
    initial.v = opts.profile.v_drive;
    CavAgent cav(ctx, initial);
    RsuAgent rsu(cfg, opts.profile, layout, seed);
    Rng loss_rng(seed, StreamTag::channel);
    const ChannelConfig channel{cfg.comm_range, cfg.p_loss};
    Tracer tracer(opts.trace);

    // Slowest possible approach: everything at v_mrm plus the TOR lead time.
    const double expected = start_position(cfg) / opts.profile.v_mrm + opts.profile.t_tor;
    const auto max_ticks = static_cast<std::int64_t>(std::ceil(10.0 * expected / dt));

    // Envelopes are recycled across ticks; only the first bus_len are live.
    std::vector<Envelope> bus;
    std::size_t bus_len = 0;
    Inboxes inboxes;
    std::size_t planned = 0;
    RunResult result;
    result.scheme = cfg.scheme;
    result.variant = variant_of(cfg);
    result.layout_id = opts.layout_id;
    result.seed = seed;

    for (std::int64_t k = 0;; ++k) {
        if (k > max_ticks) {
            throw Error(ErrorKind::stuck_run, fmt::format("no terminal mode after {:.1f} s (x = {:.2f}, mode {})",
                                                          static_cast<double>(k) * dt, cav.state().x,
                                                          to_string(cav.state().mode)));
        }
        const double now = static_cast<double>(k) * dt;

        deliver_into(std::span<const Envelope>(bus.data(), bus_len), {rsu.position(), cav.state().x}, channel,
                     loss_rng, inboxes);
        bus_len = 0;
        for (const auto& m : inboxes[static_cast<std::size_t>(Entity::rsu)]) {
            tracer.add(TraceLevel::debug, now, Entity::rsu, "rx", cav.state().x, cav.state().v,
                       std::string(message_name(m)));
            rsu.receive(m, now);
        }
        for (; planned < rsu.assignments().size(); ++planned) {
            const auto& a = rsu.assignments()[planned];
            tracer.add(TraceLevel::info, now, Entity::rsu, "plan", a.cav_x, 0.0,
                       fmt::format("window={} tor_x={:.3f}", a.window, a.tor_x));
        }
        for (const auto& m : inboxes[static_cast<std::size_t>(Entity::cav)]) {
            tracer.add(TraceLevel::debug, now, Entity::cav, "rx", cav.state().x, cav.state().v,
                       std::string(message_name(m)));
            cav.receive(m);
        }

        const auto send = [&](Entity from, const Message& m) {
            tracer.add(TraceLevel::debug, now, from, "tx", cav.state().x, cav.state().v,
                       std::string(message_name(m)));
            if (bus_len == bus.size()) bus.emplace_back();
            bus[bus_len].from = from;
            encode_into(m, bus[bus_len].bytes);
            ++bus_len;
        };
        for (const auto& m : rsu.tick(now)) send(Entity::rsu, m);
        if (auto cam = cav.emit_cam(now)) send(Entity::cav, *cam);
        if (auto mcm = cav.emit_mcm(now)) send(Entity::cav, *mcm);

        cav.step(dt, layout);
        for (const auto& c : cav.take_mode_changes()) {
            tracer.add(TraceLevel::info, c.t, Entity::cav, "mode", c.x, c.v, mode_change_detail(c));
        }

        const auto& s = cav.state();
        if (s.mode == Mode::automated && s.x <= 1e-6) {
            result.outcome = Outcome::no_toc;
            tracer.add(TraceLevel::error, s.t, Entity::cav, "no_toc", s.x, s.v);
            break;
        }
        if (is_terminal(s.mode)) {
            if (s.mode == Mode::parked_in_safe_spot) {
                result.outcome = Outcome::parked;
            } else if (s.mode == Mode::manual) {
                result.outcome = Outcome::driver_takeover;
            } else {
                result.outcome = Outcome::stopped_on_lane;
            }
            break;
        }
    }

    const auto& s = cav.state();
    result.toc_x = s.toc_x;
    if (result.outcome == Outcome::stopped_on_lane) result.stop_x = s.stop_x;
    result.dist_at_mrm_speed = s.dist_at_mrm_speed;
    if (result.outcome == Outcome::parked) result.parked_window = s.parked_window;
    tracer.add(TraceLevel::info, s.t, Entity::cav, "outcome", s.x, s.v, std::string(to_string(result.outcome)));
    result.trace = tracer.take();
    return result;
}

std::vector<RunResult> batch(const ScenarioConfig& cfg, BatchMode mode, std::uint64_t seed,
                             const BatchOptions& opts) {
    cfg.validate();
    const auto layouts = candidate_layouts(cfg);
    const bool replicated = uses_rng(variant_of(cfg));

    std::size_t total = 0;
    if (mode.kind == BatchMode::Kind::enumerate) {
        total = layouts.size() * static_cast<std::size_t>(replicated ? cfg.replicates : 1);
    } else {
        if (mode.runs < 0) throw Error(ErrorKind::invalid_parameter, "monte_carlo runs must be non-negative");
        total = static_cast<std::size_t>(mode.runs);
    }

    std::vector<RunResult> results(total);
    const auto one = [&](std::size_t i) {
        const std::uint64_t s = run_seed(seed, i);
        std::size_t li = 0;
        if (mode.kind == BatchMode::Kind::enumerate) {
            li = replicated ? i / static_cast<std::size_t>(cfg.replicates) : i;
        } else {
            Rng pick(s, StreamTag::layout);
            li = static_cast<std::size_t>(pick.below(layouts.size()));
        }
        RunOptions ro = opts.run;
        ro.layout_id = static_cast<int>(li);
        results[i] = run(cfg, layouts[li], s, ro);
    };

    unsigned threads = opts.threads != 0 ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(1, total / 64)));
    if (threads <= 1) {
        for (std::size_t i = 0; i < total; ++i) one(i);
        return results;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < total; i = next++) {
                try {
                    one(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    next = total;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    return results;
}

namespace {

std::string opt_num(const std::optional<double>& v) { return v ? fmt::format("{:.3f}", *v) : std::string(); }

}  // namespace

void write_runs_csv(std::ostream& os, const ScenarioConfig& cfg, const std::vector<RunResult>& results) {
    os << "scheme,variant,d_mrm,spot_count,layout_id,seed,toc_x,outcome,stop_x,dist_mrm_speed,parked_window\n";
    const std::string d_mrm = cfg.scheme == Scheme::denm ? std::string(to_string(cfg.denm_d_mrm)) : std::string();
    for (const auto& r : results) {
        os << fmt::format("{},{},{},{},{},{},{},{},{},{:.3f},{}\n", to_string(r.scheme), to_string(r.variant), d_mrm,
                          cfg.spot_count, r.layout_id, r.seed, opt_num(r.toc_x), to_string(r.outcome),
                          opt_num(r.stop_x), r.dist_at_mrm_speed,
                          r.parked_window ? std::to_string(*r.parked_window) : std::string());
    }
}

void write_trace_jsonl(std::ostream& os, const std::vector<RunResult>& results) {
    for (std::size_t i = 0; i < results.size(); ++i) {
        for (const auto& e : results[i].trace) {
            nlohmann::ordered_json j;
            j["run"] = i;
            j["t"] = std::round(e.t * 1e6) / 1e6;
            j["entity"] = e.entity;
            j["event"] = e.kind;
            j["payload"] = {{"x", std::round(e.x * 1e3) / 1e3}, {"v", std::round(e.v * 1e3) / 1e3}, {"detail", e.detail}};
            os << j.dump() << '\n';
        }
    }
}

}  // namespace tocsim
