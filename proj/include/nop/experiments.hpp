#pragma once

#include "nop/driver.hpp"
#include "nop/signal_model.hpp"
#include "nop/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace nop {

enum class ExperimentId {
  fig1_gap_sweep,
  fig2_sample_sweep,
  fig3_close_freq,
  fig4_crossover,
  fig5_shapes,
  custom
};

ExperimentId parse_experiment_id(const std::string& name); // throws on unknown id
std::string experiment_id_name(ExperimentId id);

struct ExperimentSpec {
  ExperimentId id = ExperimentId::fig1_gap_sweep;
  std::string signal;             // builtin id; defaulted per experiment
  std::vector<double> delta0;     // cycles/s
  std::vector<double> sigma;      // noise standard deviations
  std::vector<Index> n_samples;   // 0 entries select the signal's default
  int realizations = 1;
  std::uint64_t seed = 0;
  std::vector<std::string> methods; // subset of {nop, music, esprit, me, fft}

  void validate() const;
};

/// The declared parameter grids of each study.
ExperimentSpec default_experiment(ExperimentId id);

/// Line-oriented config: `[experiment]` section, `key = value` pairs, comma
/// lists for grids. Keys: id, signal, delta0, sigma, n, realizations, seed,
/// methods.
ExperimentSpec parse_experiment_config(const std::string& path);

struct ErrorRow {
  std::string experiment;
  std::string method;
  double delta0 = 0.0;
  double sigma = 0.0;
  Index n = 0;
  std::string realization; // "0".."R-1", or "mean"/"variance" aggregates
  std::string metric;
  double value = 0.0;
  std::string note; // error tag on failed runs
};

struct ErrorReport {
  std::vector<ErrorRow> rows;
};

/// Long-format CSV: experiment,method,delta0,sigma,n,realization,metric,value,note.
void write_error_report(const std::string& path, const ErrorReport& report);

/// Every grid cell x realization x method, metrics per run, NaN + note on
/// failure, mean/variance aggregate rows appended, rows sorted.
ErrorReport run_experiment(const ExperimentSpec& spec);

// Metrics. Frequencies in cycles/s unless stated; phases in radians.

/// Mean absolute difference after sorting both sides (relabeling-invariant).
double matched_frequency_error(const Vec& est, const Vec& truth);

/// Circular mean of the wrapped differences.
double circular_offset(const Vec& est, const Vec& truth);

/// Wrapped residual est - truth - offset in (-pi, pi], offset the circular
/// mean over the alignment window [a, b) (whole record by default).
Vec aligned_phase_residual(const Vec& est, const Vec& truth, Index a = 0, Index b = -1);

/// Mean absolute aligned residual over the record.
double aligned_phase_error(const Vec& est, const Vec& truth);

/// Offset anchored on the first decile; ratio of mean absolute residual in
/// the last decile to the first. Values near 1 mean no drift.
double accumulation_ratio(const Vec& est, const Vec& truth);

/// Nystrom mean of the landmark field over one period.
Vec shape_on_grid(const PatternInducingPoints& pts, Index grid_size = 512);

/// RMSE against the reference waveform, minimized over circular shifts.
double shape_rmse(const PatternInducingPoints& est, const ShapeFunction& truth,
                  Index grid_size = 512);

/// Max over components of RMSE between reconstructed a_k s_k(phi_k) and the
/// noiseless truth, matched by mean frequency.
double component_rmse(const NopResult& result, const std::vector<ComponentSpec>& truth,
                      const Vec& times);

/// Fraction of samples (outside +-guard around the true crossing) where the
/// per-sample assignment of est columns to truth columns is the identity.
double crossover_label_accuracy(const Mat& est, const Mat& truth, Index guard = 3);

/// Per-experiment NOP wiring: config defaults and initial tracks.
struct NopSetup {
  NopConfig config;
  NopInit init;
};

NopSetup configure_nop(BuiltinSignal id, const SampledSignal& signal, double sigma_noise,
                       std::uint64_t seed);

/// Ridge extraction + pairwise relabeling + integration, the crossover
/// experiment's initialization path.
struct CrossoverInit {
  StageOneResult tracks;
  Mat ridge_freq_cps; // per-sample, after relabeling
  std::vector<Index> switches;
};

CrossoverInit crossover_ridge_init(const SampledSignal& signal);

} // namespace nop
