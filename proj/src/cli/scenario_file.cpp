#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "tocsim/cli.hpp"
#include "tocsim/error.hpp"

namespace tocsim::cli {

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

struct LineError {
    std::string what;
};

double parse_double(std::string_view v) {
    if (v == "inf" || v == "infinity") return std::numeric_limits<double>::infinity();
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) throw LineError{fmt::format("'{}' is not a number", v)};
    return out;
}

int parse_int(std::string_view v) {
    int out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) throw LineError{fmt::format("'{}' is not an integer", v)};
    return out;
}

Placement parse_placement(std::string_view v) {
    if (v == "grid_enumerate") return {PlacementKind::grid_enumerate, {}};
    if (v == "grid_random") return {PlacementKind::grid_random, {}};
    if (v.starts_with("explicit:")) v.remove_prefix(9);
    Placement p{PlacementKind::explicit_windows, {}};
    while (!v.empty()) {
        const auto comma = v.find(',');
        p.windows.push_back(parse_int(trim(v.substr(0, comma))));
        if (comma == std::string_view::npos) break;
        v.remove_prefix(comma + 1);
    }
    if (p.windows.empty()) throw LineError{"placement needs grid_enumerate, grid_random or window indices"};
    return p;
}

std::string format_placement(const Placement& p) {
    switch (p.kind) {
        case PlacementKind::grid_enumerate: return "grid_enumerate";
        case PlacementKind::grid_random: return "grid_random";
        case PlacementKind::explicit_windows: return fmt::format("{}", fmt::join(p.windows, ","));
    }
    return {};
}

void apply(ScenarioFile& sf, std::string_view key, std::string_view v) {
    auto& c = sf.cfg;
    auto& p = sf.profile;
    if (key == "relevance_distance") c.relevance_distance = parse_double(v);
    else if (key == "max_toc_range") c.max_toc_range = parse_double(v);
    else if (key == "s_len") c.s_len = parse_double(v);
    else if (key == "n_sections") c.n_sections = parse_int(v);
    else if (key == "spot_sections") c.spot_sections = parse_int(v);
    else if (key == "spot_count") c.spot_count = parse_int(v);
    else if (key == "placement") c.placement = parse_placement(v);
    else if (key == "scheme") {
        if (v == "denm") c.scheme = Scheme::denm;
        else if (v == "mcm") c.scheme = Scheme::mcm;
        else throw LineError{"scheme must be denm or mcm"};
    } else if (key == "denm_d_mrm") {
        if (v == "zero" || v == "0") c.denm_d_mrm = DenmDmrm::zero;
        else if (v == "fifty" || v == "50") c.denm_d_mrm = DenmDmrm::fifty;
        else if (v == "unlimited") c.denm_d_mrm = DenmDmrm::unlimited;
        else throw LineError{"denm_d_mrm must be zero, fifty or unlimited"};
    } else if (key == "mcm_rsu_option") {
        if (v == "min_dmrm") c.mcm_rsu_option = RsuOption::min_dmrm;
        else if (v == "distr_toc") c.mcm_rsu_option = RsuOption::distr_toc;
        else throw LineError{"mcm_rsu_option must be min_dmrm or distr_toc"};
    } else if (key == "mcm_cav_option") {
        if (v == "rsu_advice") c.mcm_cav_option = CavOption::rsu_advice;
        else if (v == "cav_decision") c.mcm_cav_option = CavOption::cav_decision;
        else throw LineError{"mcm_cav_option must be rsu_advice or cav_decision"};
    }
    else if (key == "y_margin") c.y_margin = parse_double(v);
    else if (key == "timestep") c.timestep = parse_double(v);
    else if (key == "comm_range") c.comm_range = parse_double(v);
    else if (key == "p_loss") c.p_loss = parse_double(v);
    else if (key == "sensor_range") c.sensor_range = parse_double(v);
    else if (key == "replicates") c.replicates = parse_int(v);
    else if (key == "v_drive_kmh") p.v_drive = parse_double(v) / 3.6;
    else if (key == "v_mrm_kmh") p.v_mrm = parse_double(v) / 3.6;
    else if (key == "t_tor") p.t_tor = parse_double(v);
    else if (key == "d_2speedmrm") p.d_2speedmrm = parse_double(v);
    else if (key == "d_2stop") p.d_2stop = parse_double(v);
    else if (key == "d_lc") p.d_lc = parse_double(v);
    else if (key == "theta_park") p.theta_park = parse_double(v);
    else throw LineError{fmt::format("unknown key '{}'", key)};
}

std::string_view rsu_name(RsuOption o) { return o == RsuOption::min_dmrm ? "min_dmrm" : "distr_toc"; }
std::string_view cav_name(CavOption o) { return o == CavOption::rsu_advice ? "rsu_advice" : "cav_decision"; }
std::string_view d_mrm_name(DenmDmrm d) {
    return d == DenmDmrm::zero ? "zero" : d == DenmDmrm::fifty ? "fifty" : "unlimited";
}

}  // namespace

ScenarioFile parse_scenario(std::string_view text, std::string_view source) {
    ScenarioFile sf;
    std::set<std::string, std::less<>> seen;
    int lineno = 0;
    while (!text.empty()) {
        ++lineno;
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw Error(ErrorKind::invalid_config, fmt::format("{}:{}: expected key = value", source, lineno));
        }
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        if (!seen.insert(std::string(key)).second) {
            throw Error(ErrorKind::invalid_config, fmt::format("{}:{}: {}: duplicate key", source, lineno, key));
        }
        try {
            apply(sf, key, value);
        } catch (const LineError& e) {
            throw Error(ErrorKind::invalid_config, fmt::format("{}:{}: {}: {}", source, lineno, key, e.what));
        }
    }
    return sf;
}

ScenarioFile load_scenario(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::invalid_config, fmt::format("cannot read scenario file '{}'", path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str(), path.string());
}

std::string format_scenario(const ScenarioFile& sf) {
    const auto& c = sf.cfg;
    const auto& p = sf.profile;
    std::string s;
    auto line = [&](std::string_view key, const auto& value) { s += fmt::format("{} = {}\n", key, value); };
    s += "# road geometry\n";
    line("relevance_distance", c.relevance_distance);
    line("max_toc_range", c.max_toc_range);
    line("s_len", c.s_len);
    line("n_sections", c.n_sections);
    line("spot_sections", c.spot_sections);
    line("spot_count", c.spot_count);
    line("placement", format_placement(c.placement));
    s += "\n# management scheme\n";
    line("scheme", to_string(c.scheme));
    line("denm_d_mrm", d_mrm_name(c.denm_d_mrm));
    line("mcm_rsu_option", rsu_name(c.mcm_rsu_option));
    line("mcm_cav_option", cav_name(c.mcm_cav_option));
    line("y_margin", c.y_margin);
    s += "\n# simulation\n";
    line("timestep", c.timestep);
    line("comm_range", std::isinf(c.comm_range) ? std::string("inf") : fmt::format("{}", c.comm_range));
    line("p_loss", c.p_loss);
    line("sensor_range", c.sensor_range);
    line("replicates", c.replicates);
    s += "\n# vehicle calibration\n";
    line("v_drive_kmh", fmt::format("{:.10g}", p.v_drive * 3.6));
    line("v_mrm_kmh", fmt::format("{:.10g}", p.v_mrm * 3.6));
    line("t_tor", p.t_tor);
    line("d_2speedmrm", p.d_2speedmrm);
    line("d_2stop", p.d_2stop);
    line("d_lc", p.d_lc);
    line("theta_park", p.theta_park);
    return s;
}

}  // namespace tocsim::cli
