#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "gatesim/io.hpp"

namespace fs = std::filesystem;
using namespace gatesim;

namespace {

struct CommonOptions {
    std::string chip_config_path;
    std::string calibration_path;
    std::string out_dir;
    std::vector<std::string> points;
    double gating_time = 0.1;
    double inter_pulse = 8.0;
    int n_pulses = 5;
    double equilibration = 5.0;
    double tail = 25.0;
    double dye_mbar = 100.0;
    double gate_on_mbar = 180.0;
    double gate_off_mbar = 60.0;
    double dt = 0.005;
};

void add_train_flags(CLI::App* cmd, CommonOptions& opt) {
    cmd->add_option("--tg", opt.gating_time, "Gating time T_g, s");
    cmd->add_option("--tpi", opt.inter_pulse, "Input inter-pulse duration T_pi, s");
    cmd->add_option("--pulses", opt.n_pulses, "Number of pulses");
    cmd->add_option("--equilibration", opt.equilibration, "Hold in ON state before the first pulse, s");
    cmd->add_option("--tail", opt.tail, "Hold in ON state after the last pulse, s");
    cmd->add_option("--dye-mbar", opt.dye_mbar, "Dye inlet pressure, mbar");
    cmd->add_option("--gate-on-mbar", opt.gate_on_mbar, "Gate inlet pressure in gating-ON mode, mbar");
    cmd->add_option("--gate-off-mbar", opt.gate_off_mbar, "Gate inlet pressure in gating-OFF mode, mbar");
}

ChipNetwork load_chip(const CommonOptions& opt) {
    ChipConfig config;
    if (!opt.chip_config_path.empty()) {
        config = load_chip_config(opt.chip_config_path);
    }
    return build_default_chip(config);
}

PulseTrainSpec make_spec(const CommonOptions& opt) {
    PulseTrainSpec spec;
    spec.gating_time = opt.gating_time;
    spec.inter_pulse = opt.inter_pulse;
    spec.n_pulses = opt.n_pulses;
    spec.equilibration = opt.equilibration;
    spec.tail = opt.tail;
    spec.p_on.pressures_mbar = {{"inlet_dye", opt.dye_mbar}, {"inlet_gate", opt.gate_on_mbar}};
    spec.p_off.pressures_mbar = {{"inlet_dye", opt.dye_mbar}, {"inlet_gate", opt.gate_off_mbar}};
    return spec;
}

TransportOverrides make_overrides(const CommonOptions& opt) {
    TransportOverrides ov;
    ov.dt = opt.dt;
    if (!opt.calibration_path.empty()) {
        const CalibrationResult cal = load_calibration(opt.calibration_path);
        ov.mixer_timeconstant = cal.mixer_timeconstant;
        ov.dispersion_scale = cal.dispersion_scale;
        ov.amplitude_scale = cal.amplitude_scale;
    }
    return ov;
}

std::string q(const std::string& s) { return "\"" + s + "\""; }

std::vector<std::pair<std::string, std::string>>
effective_config(const CommonOptions& opt, const TransportOverrides& ov) {
    return {
        {"chip_config", q(opt.chip_config_path.empty() ? "<defaults>" : opt.chip_config_path)},
        {"calibration", q(opt.calibration_path.empty() ? "<defaults>" : opt.calibration_path)},
        {"T_g_s", format_double(opt.gating_time)},
        {"T_pi_s", format_double(opt.inter_pulse)},
        {"n_pulses", std::to_string(opt.n_pulses)},
        {"equilibration_s", format_double(opt.equilibration)},
        {"tail_s", format_double(opt.tail)},
        {"dye_mbar", format_double(opt.dye_mbar)},
        {"gate_on_mbar", format_double(opt.gate_on_mbar)},
        {"gate_off_mbar", format_double(opt.gate_off_mbar)},
        {"dt_s", format_double(ov.dt)},
        {"tau_m_s", format_double(ov.mixer_timeconstant)},
        {"dispersion_scale", format_double(ov.dispersion_scale)},
        {"amplitude_scale", format_double(ov.amplitude_scale)},
        {"solver", q("analytic-superposition")},
        {"determinism", q("seed-free; outputs independent of --jobs")},
    };
}

void write_point_outputs(const fs::path& out_dir, const std::string& point_id,
                         const ConcentrationTrace& trace,
                         const std::vector<std::pair<std::string, std::string>>& meta,
                         double min_separation) {
    const NcipTrace ncip = normalize_ncip(trace);
    DetectorConfig det;
    det.min_separation = min_separation;
    const auto pulses = detect_pulses(ncip, det);
    const auto tm = train_metrics(pulses, ncip);

    const fs::path trace_path = out_dir / ("trace_" + point_id + ".csv");
    write_trace_csv(trace_path, trace);
    write_pulse_metrics_csv(out_dir / ("pulse_metrics_" + point_id + ".csv"), pulses);
    write_train_metrics_csv(out_dir / ("train_metrics_" + point_id + ".csv"), tm);

    auto sidecar = meta;
    sidecar.emplace_back("point_id", q(point_id));
    sidecar.emplace_back("x_m", format_double(trace.x));
    write_metadata(out_dir / ("trace_" + point_id + ".meta.json"), sidecar);
}

int cmd_simulate(const CommonOptions& opt) {
    const ChipNetwork chip = load_chip(opt);
    const PulseTrainSpec spec = make_spec(opt);
    const TransportOverrides ov = make_overrides(opt);
    const GatingSchedule schedule = build_train(spec);
    const SimulationResult sim = simulate(schedule, chip, ov);

    fs::create_directories(opt.out_dir);
    auto meta = effective_config(opt, ov);
    meta.emplace_back("u_propagation_m_s", format_double(sim.derived.u_propagation));
    meta.emplace_back("D_eff_m2_s", format_double(sim.derived.d_eff));
    meta.emplace_back("phi_off", format_double(sim.derived.phi_off));
    meta.emplace_back("reynolds", format_double(sim.derived.reynolds));

    for (const auto& [point, trace] : sim.traces) {
        if (!opt.points.empty() &&
            std::find(opt.points.begin(), opt.points.end(), point) == opt.points.end()) {
            continue;
        }
        write_point_outputs(opt.out_dir, point, trace, meta, spec.gating_time);
    }
    write_metadata(fs::path(opt.out_dir) / "run_metadata.json", meta);
    return 0;
}

int cmd_sweep(const CommonOptions& opt, const std::string& variable, double from,
              double to, double step, int jobs) {
    const ChipNetwork chip = load_chip(opt);

    SweepSpec spec;
    spec.base = make_spec(opt);
    spec.overrides = make_overrides(opt);
    spec.points = opt.points;
    spec.jobs = jobs;
    if (variable == "tg") {
        spec.variable = SweepVariable::GatingTime;
        spec.values = sweep_range(from > 0 ? from : 0.08, to > 0 ? to : 0.2,
                                  step > 0 ? step : 0.01);
    } else if (variable == "tpi") {
        spec.variable = SweepVariable::InterPulse;
        spec.values = sweep_range(from > 0 ? from : 3.6, to > 0 ? to : 20.0,
                                  step > 0 ? step : 0.8);
    } else {
        throw ConfigError("sweep variable must be 'tg' or 'tpi'");
    }

    const SweepResult result = run_sweep(chip, spec);

    fs::create_directories(opt.out_dir);
    const std::string var_name = variable == "tg" ? "T_g" : "T_pi";
    write_sweep_csv(fs::path(opt.out_dir) / "sweep.csv", var_name, result.cells);
    write_sweep_fits_csv(fs::path(opt.out_dir) / "sweep_fits.csv", result.fits);

    auto meta = effective_config(opt, spec.overrides);
    meta.emplace_back("sweep_variable", q(var_name));
    meta.emplace_back("sweep_from", format_double(spec.values.front()));
    meta.emplace_back("sweep_to", format_double(spec.values.back()));
    meta.emplace_back("sweep_n_values", std::to_string(spec.values.size()));
    write_metadata(fs::path(opt.out_dir) / "sweep.meta.json", meta);
    return 0;
}

int cmd_calibrate(const CommonOptions& opt, const std::string& targets_arg,
                  const std::string& out_file, const std::string& point, int max_iter) {
    const ChipNetwork chip = load_chip(opt);
    PulseTrainSpec base = make_spec(opt);

    std::vector<CalibrationTarget> targets;
    std::istringstream ss(targets_arg);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("calibration target must look like '0.09=3.28'");
        }
        try {
            targets.push_back({std::stod(item.substr(0, eq)), std::stod(item.substr(eq + 1))});
        } catch (const std::exception&) {
            throw ConfigError("bad calibration target '" + item + "'");
        }
    }

    NelderMeadOptions nm;
    nm.max_iterations = max_iter;
    const CalibrationResult result = calibrate(targets, chip, base, {}, point, nm);
    save_calibration(out_file, result);

    std::cout << "calibrated tau_m=" << format_double(result.mixer_timeconstant)
              << " s, dispersion_scale=" << format_double(result.dispersion_scale)
              << ", objective=" << format_double(result.objective)
              << (result.converged ? "" : " (NotConverged)") << "\n";
    if (!result.converged) {
        std::cerr << "warning: calibration objective above 0.10; parameters written anyway\n";
    }
    return 0;
}

int cmd_analyze(const std::vector<std::string>& files, const std::string& out_dir,
                const DetectorConfig& det) {
    fs::create_directories(out_dir);
    int failures = 0;
    for (const auto& file : files) {
        try {
            const IngestResult ingest = ingest_trace(file);
            const NcipTrace ncip = normalize_ncip(ingest.trace);
            const auto pulses = detect_pulses(ncip, det);
            const auto tm = train_metrics(pulses, ncip);
            const std::string stem = fs::path(file).stem().string();
            write_pulse_metrics_csv(fs::path(out_dir) / ("pulse_metrics_" + stem + ".csv"), pulses);
            write_train_metrics_csv(fs::path(out_dir) / ("train_metrics_" + stem + ".csv"), tm);
            write_metadata(fs::path(out_dir) / ("analysis_" + stem + ".meta.json"),
                           {{"input", q(file)},
                            {"dt_s", format_double(ingest.trace.dt)},
                            {"clamped_negatives", std::to_string(ingest.clamped_negatives)},
                            {"resampled", ingest.resampled ? "true" : "false"},
                            {"min_prominence", format_double(det.min_prominence)},
                            {"min_separation_s", format_double(det.min_separation)}});
        } catch (const std::exception& e) {
            std::cerr << "analyze: " << file << ": " << e.what() << "\n";
            ++failures; // keep going with the remaining files
        }
    }
    return failures == 0 ? 0 : 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Microfluidic hydrodynamic-gating transmitter simulator"};
    app.require_subcommand(1);

    CommonOptions opt;
    std::string variable = "tg";
    double from = 0.0, to = 0.0, step = 0.0;
    int jobs = 1;
    std::string targets = "0.09=3.28,0.12=4.07,0.15=4.7";
    std::string cal_out = "calibration.txt";
    std::string cal_point = "p1";
    int max_iter = 500;
    std::vector<std::string> analyze_files;
    DetectorConfig det;
    std::string schedule_out = "schedule.csv";

    auto add_common = [&](CLI::App* cmd, bool with_out) {
        cmd->add_option("--config", opt.chip_config_path, "Chip configuration file");
        cmd->add_option("--calibration", opt.calibration_path, "Calibration-parameter file");
        cmd->add_option("--points", opt.points, "Sampling points, e.g. p1,p2,p3")->delimiter(',');
        cmd->add_option("--dt", opt.dt, "Output sample interval, s");
        if (with_out) {
            cmd->add_option("--out", opt.out_dir, "Output directory")->required();
        }
    };

    auto* sim = app.add_subcommand("simulate", "Run one pulse-train simulation");
    add_common(sim, true);
    add_train_flags(sim, opt);

    auto* swp = app.add_subcommand("sweep", "Parameter sweep over T_g or T_pi");
    add_common(swp, true);
    add_train_flags(swp, opt);
    swp->add_option("--variable", variable, "Sweep variable: tg or tpi");
    swp->add_option("--from", from, "Sweep start, s");
    swp->add_option("--to", to, "Sweep end, s");
    swp->add_option("--step", step, "Sweep step, s");
    swp->add_option("--jobs", jobs, "Worker threads");

    auto* cal = app.add_subcommand("calibrate", "Fit tau_m and dispersion scale to target widths");
    cal->add_option("--config", opt.chip_config_path, "Chip configuration file");
    cal->add_option("--targets", targets, "Targets as Tg=w_p pairs, e.g. 0.09=3.28,0.12=4.07");
    cal->add_option("--out", cal_out, "Calibration-parameter file to write");
    cal->add_option("--point", cal_point, "Sampling point to fit at");
    cal->add_option("--max-iter", max_iter, "Simplex iteration budget");
    cal->add_option("--dt", opt.dt, "Output sample interval, s");
    add_train_flags(cal, opt);

    auto* ana = app.add_subcommand("analyze", "Run the measurement pipeline on trace CSVs");
    ana->add_option("files", analyze_files, "Trace CSV files (t_s,intensity)")->required();
    ana->add_option("--out", opt.out_dir, "Output directory")->required();
    ana->add_option("--min-prominence", det.min_prominence, "Peak prominence threshold, NCIP units");
    ana->add_option("--min-separation", det.min_separation, "Minimum peak separation, s");

    auto* exp = app.add_subcommand("export-schedule", "Write a pressure-controller command file");
    exp->add_option("--out", schedule_out, "Schedule CSV to write")->required();
    add_train_flags(exp, opt);

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return cmd_simulate(opt);
        if (swp->parsed()) return cmd_sweep(opt, variable, from, to, step, jobs);
        if (cal->parsed()) return cmd_calibrate(opt, targets, cal_out, cal_point, max_iter);
        if (ana->parsed()) return cmd_analyze(analyze_files, opt.out_dir, det);
        if (exp->parsed()) {
            write_text_file(schedule_out, serialize_schedule_csv(build_train(make_spec(opt))));
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "error (configuration): " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
