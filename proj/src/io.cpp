#include "gatesim/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace gatesim {

std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ConfigError("cannot open '" + path.string() + "' for writing");
    }
    out << text;
}

static std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ParseError("cannot open '" + path.string() + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------
// INI-style key/value parsing
// ---------------------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

// section -> key -> value, flat and order-insensitive
using KeyValues = std::map<std::string, std::map<std::string, std::string>>;

KeyValues parse_ini(const std::string& text, const std::string& origin) {
    KeyValues out;
    std::istringstream in(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']') {
                throw ParseError(origin + ": malformed section at line " + std::to_string(line_no));
            }
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ParseError(origin + ": expected key = value at line " + std::to_string(line_no));
        }
        out[section][trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
    }
    return out;
}

double parse_number(const KeyValues& kv, const std::string& section,
                    const std::string& key, double fallback, const std::string& origin) {
    auto s = kv.find(section);
    if (s == kv.end()) return fallback;
    auto k = s->second.find(key);
    if (k == s->second.end()) return fallback;
    try {
        size_t pos = 0;
        const double v = std::stod(k->second, &pos);
        if (pos != k->second.size()) throw std::invalid_argument(k->second);
        return v;
    } catch (const std::exception&) {
        throw ParseError(origin + ": bad numeric value for " + section + "." + key);
    }
}

} // namespace

ChipConfig parse_chip_config(const std::string& text, const std::string& origin) {
    const KeyValues kv = parse_ini(text, origin);
    ChipConfig c;
    c.main_width_um = parse_number(kv, "geometry", "main_width_um", c.main_width_um, origin);
    c.main_height_um = parse_number(kv, "geometry", "main_height_um", c.main_height_um, origin);
    c.feed_length_um = parse_number(kv, "geometry", "feed_length_um", c.feed_length_um, origin);
    c.mixer_width_um = parse_number(kv, "geometry", "mixer_width_um", c.mixer_width_um, origin);
    c.mixer_length_um = parse_number(kv, "geometry", "mixer_length_um", c.mixer_length_um, origin);
    c.mixer_step_um = parse_number(kv, "geometry", "mixer_step_um", c.mixer_step_um, origin);
    c.propagation_length_um =
        parse_number(kv, "geometry", "propagation_length_um", c.propagation_length_um, origin);
    c.viscosity_mPas = parse_number(kv, "fluid", "viscosity_mPas", c.viscosity_mPas, origin);
    c.diffusivity_m2s = parse_number(kv, "fluid", "diffusivity_m2s", c.diffusivity_m2s, origin);
    c.sample_start_um = parse_number(kv, "sample_points", "start_um", c.sample_start_um, origin);
    c.sample_spacing_um =
        parse_number(kv, "sample_points", "spacing_um", c.sample_spacing_um, origin);
    c.sample_count = int(parse_number(kv, "sample_points", "count", c.sample_count, origin));
    return c;
}

ChipConfig load_chip_config(const std::filesystem::path& path) {
    return parse_chip_config(read_text_file(path), path.string());
}

std::string serialize_chip_config(const ChipConfig& c) {
    std::ostringstream out;
    out << "[geometry]\n";
    out << "main_width_um = " << format_double(c.main_width_um) << "\n";
    out << "main_height_um = " << format_double(c.main_height_um) << "\n";
    out << "feed_length_um = " << format_double(c.feed_length_um) << "\n";
    out << "mixer_width_um = " << format_double(c.mixer_width_um) << "\n";
    out << "mixer_length_um = " << format_double(c.mixer_length_um) << "\n";
    out << "mixer_step_um = " << format_double(c.mixer_step_um) << "\n";
    out << "propagation_length_um = " << format_double(c.propagation_length_um) << "\n";
    out << "\n[fluid]\n";
    out << "viscosity_mPas = " << format_double(c.viscosity_mPas) << "\n";
    out << "diffusivity_m2s = " << format_double(c.diffusivity_m2s) << "\n";
    out << "\n[sample_points]\n";
    out << "start_um = " << format_double(c.sample_start_um) << "\n";
    out << "spacing_um = " << format_double(c.sample_spacing_um) << "\n";
    out << "count = " << c.sample_count << "\n";
    return out.str();
}

// ---------------------------------------------------------------------------
// Calibration parameter file
// ---------------------------------------------------------------------------

CalibrationResult load_calibration(const std::filesystem::path& path) {
    const KeyValues kv = parse_ini(read_text_file(path), path.string());
    CalibrationResult r;
    r.mixer_timeconstant = parse_number(kv, "", "tau_m_s", 0.0, path.string());
    r.dispersion_scale = parse_number(kv, "", "dispersion_scale", 1.0, path.string());
    r.amplitude_scale = parse_number(kv, "", "amplitude_scale", 1.0, path.string());
    r.objective = parse_number(kv, "", "objective", 0.0, path.string());
    r.iterations = int(parse_number(kv, "", "iterations", 0, path.string()));
    r.converged = parse_number(kv, "", "converged", 0, path.string()) != 0.0;
    if (!(r.mixer_timeconstant >= 0.0) || !(r.dispersion_scale > 0.0)) {
        throw ParseError(path.string() + ": invalid calibration parameters");
    }
    return r;
}

void save_calibration(const std::filesystem::path& path, const CalibrationResult& r) {
    std::ostringstream out;
    out << "tau_m_s = " << format_double(r.mixer_timeconstant) << "\n";
    out << "dispersion_scale = " << format_double(r.dispersion_scale) << "\n";
    out << "amplitude_scale = " << format_double(r.amplitude_scale) << "\n";
    out << "objective = " << format_double(r.objective) << "\n";
    out << "iterations = " << r.iterations << "\n";
    out << "converged = " << (r.converged ? 1 : 0) << "\n";
    write_text_file(path, out.str());
}

// ---------------------------------------------------------------------------
// Schedule CSV
// ---------------------------------------------------------------------------

std::string serialize_schedule_csv(const GatingSchedule& schedule) {
    schedule.validate();
    std::ostringstream out;
    out << "t_s,inlet_dye_mbar,inlet_gate_mbar\n";
    for (const auto& step : schedule.steps) {
        const auto& p = step.assignment.pressures_mbar;
        auto get = [&](const char* key) {
            auto it = p.find(key);
            return it == p.end() ? 0.0 : it->second;
        };
        out << format_double(step.t) << "," << format_double(get("inlet_dye")) << ","
            << format_double(get("inlet_gate")) << "\n";
    }
    return out.str();
}

GatingSchedule parse_schedule_csv(const std::string& text) {
    GatingSchedule schedule;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        if (line_no == 1) {
            if (trim(line) != "t_s,inlet_dye_mbar,inlet_gate_mbar") {
                throw ParseError("schedule CSV: unexpected header");
            }
            continue;
        }
        std::istringstream ss(line);
        std::string t_str, dye_str, gate_str;
        if (!std::getline(ss, t_str, ',') || !std::getline(ss, dye_str, ',') ||
            !std::getline(ss, gate_str)) {
            throw ParseError("schedule CSV: malformed row at line " + std::to_string(line_no));
        }
        try {
            ScheduleStep step;
            step.t = std::stod(t_str);
            step.assignment.pressures_mbar = {{"inlet_dye", std::stod(dye_str)},
                                              {"inlet_gate", std::stod(gate_str)}};
            schedule.steps.push_back(step);
        } catch (const std::exception&) {
            throw ParseError("schedule CSV: malformed row at line " + std::to_string(line_no));
        }
    }
    if (schedule.steps.empty()) {
        throw ParseError("schedule CSV: no steps");
    }
    schedule.duration = schedule.steps.back().t;
    return schedule;
}

// ---------------------------------------------------------------------------
// Trace / metrics CSVs
// ---------------------------------------------------------------------------

void write_trace_csv(const std::filesystem::path& path, const ConcentrationTrace& trace) {
    std::ostringstream out;
    out << "t_s,concentration\n";
    for (size_t i = 0; i < trace.samples.size(); ++i) {
        out << format_double(trace.time(i)) << "," << format_double(trace.samples[i]) << "\n";
    }
    write_text_file(path, out.str());
}

void write_pulse_metrics_csv(const std::filesystem::path& path,
                             const std::vector<PulseMetrics>& pulses) {
    std::ostringstream out;
    out << "pulse_idx,peak_t_s,peak_v,w_p_s,resolved\n";
    for (size_t i = 0; i < pulses.size(); ++i) {
        out << i << "," << format_double(pulses[i].peak_time) << ","
            << format_double(pulses[i].peak_value) << "," << format_double(pulses[i].width)
            << "," << (pulses[i].resolved ? 1 : 0) << "\n";
    }
    write_text_file(path, out.str());
}

void write_train_metrics_csv(const std::filesystem::path& path, const TrainMetrics& tm) {
    std::ostringstream out;
    out << "k,T_pm_s,isi_ratio,distinguishable\n";
    for (size_t k = 0; k < tm.inter_pulse.size(); ++k) {
        out << k << "," << format_double(tm.inter_pulse[k]) << ","
            << format_double(tm.isi_ratio[k]) << "," << (tm.distinguishable[k] ? 1 : 0)
            << "\n";
    }
    write_text_file(path, out.str());
}

void write_sweep_csv(const std::filesystem::path& path, const std::string& variable,
                     const std::vector<SweepCell>& cells) {
    std::ostringstream out;
    out << "sweep_variable,value,point_id,mean_w_p_s,mean_T_pm_s,frac_distinguishable\n";
    for (const auto& c : cells) {
        out << variable << "," << format_double(c.value) << "," << c.point_id << ","
            << format_double(c.mean_width) << "," << format_double(c.mean_inter_pulse)
            << "," << format_double(c.frac_distinguishable) << "\n";
    }
    write_text_file(path, out.str());
}

void write_sweep_fits_csv(const std::filesystem::path& path,
                          const std::map<std::string, LinearFit>& fits) {
    std::ostringstream out;
    out << "point_id,slope,intercept,r2,n_points\n";
    for (const auto& [point, fit] : fits) {
        out << point << "," << format_double(fit.slope) << "," << format_double(fit.intercept)
            << "," << format_double(fit.r2) << "," << fit.n_points << "\n";
    }
    write_text_file(path, out.str());
}

void write_metadata(const std::filesystem::path& path,
                    const std::vector<std::pair<std::string, std::string>>& entries) {
    std::ostringstream out;
    out << "{\n";
    for (size_t i = 0; i < entries.size(); ++i) {
        out << "  \"" << entries[i].first << "\": " << entries[i].second;
        out << (i + 1 < entries.size() ? ",\n" : "\n");
    }
    out << "}\n";
    write_text_file(path, out.str());
}

} // namespace gatesim
