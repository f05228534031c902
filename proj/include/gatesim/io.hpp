#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gatesim/analysis.hpp"
#include "gatesim/calibration.hpp"
#include "gatesim/chip.hpp"
#include "gatesim/schedule.hpp"
#include "gatesim/sweep.hpp"

namespace gatesim {

// Shortest round-trippable decimal form; all numeric output goes through
// this so repeated runs are byte-identical.
std::string format_double(double v);

// Chip configuration file ---------------------------------------------------
//
// Flat INI-style key/value document, lengths in micrometers:
//
//   [geometry]
//   main_width_um = 200
//   ...
//   [fluid]
//   viscosity_mPas = 1
//   diffusivity_m2s = 5e-10
//   [sample_points]
//   start_um = 0
//   spacing_um = 3000
//   count = 3

ChipConfig parse_chip_config(const std::string& text, const std::string& origin = "config");
ChipConfig load_chip_config(const std::filesystem::path& path);
std::string serialize_chip_config(const ChipConfig& config);

// Calibration parameter file (key = value lines)
CalibrationResult load_calibration(const std::filesystem::path& path);
void save_calibration(const std::filesystem::path& path, const CalibrationResult& result);

// Schedule export: `t_s,inlet_dye_mbar,inlet_gate_mbar`, one row per step.
std::string serialize_schedule_csv(const GatingSchedule& schedule);
GatingSchedule parse_schedule_csv(const std::string& text);

// Trace / metrics CSVs ------------------------------------------------------

void write_trace_csv(const std::filesystem::path& path, const ConcentrationTrace& trace);

// `pulse_idx,peak_t_s,peak_v,w_p_s,resolved`
void write_pulse_metrics_csv(const std::filesystem::path& path,
                             const std::vector<PulseMetrics>& pulses);

// `k,T_pm_s,isi_ratio,distinguishable`
void write_train_metrics_csv(const std::filesystem::path& path, const TrainMetrics& tm);

// `sweep_variable,value,point_id,mean_w_p_s,mean_T_pm_s,frac_distinguishable`
void write_sweep_csv(const std::filesystem::path& path, const std::string& variable,
                     const std::vector<SweepCell>& cells);

void write_sweep_fits_csv(const std::filesystem::path& path,
                          const std::map<std::string, LinearFit>& fits);

// JSON metadata sidecar with the complete effective configuration.
void write_metadata(const std::filesystem::path& path,
                    const std::vector<std::pair<std::string, std::string>>& entries);

void write_text_file(const std::filesystem::path& path, const std::string& text);

} // namespace gatesim
