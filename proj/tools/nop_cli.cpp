#include "nop/baselines.hpp"
#include "nop/csv_io.hpp"
#include "nop/driver.hpp"
#include "nop/experiments.hpp"
#include "nop/prediction.hpp"
#include "nop/signal_model.hpp"

#include "CLI11.hpp"

#include <Eigen/Core>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

namespace {

constexpr const char* kSchemas = R"(CSV schemas:
  signal:       header `t,y`, one sample per row
  tracks.csv:   `t,phi_k,amp_k,phi_var_k,amp_var_k` per component k (1-based)
  shape_k.csv:  `z,alpha_u,var_u` landmark rows
  diagnostics:  `j,eps1,eps2,stage1_residual,stage2_residual`
  spectrum:     `freq,power` (freq in cycles/sample)
  frequencies:  `component,freq_cps,amplitude`
  prediction:   `t0,mean,var`
  error report: `experiment,method,delta0,sigma,n,realization,metric,value,note`
All floating-point values carry 12 significant digits.
Exit codes: 0 success, 1 usage error, 2 numerical failure.
Env: NOP_THREADS caps internal parallelism (default 1).
)";

void apply_thread_cap() {
  int threads = 1;
  if (const char* env = std::getenv("NOP_THREADS")) {
    threads = std::max(1, std::atoi(env));
  }
  Eigen::setNbThreads(threads);
}

int cmd_generate(const std::string& signal_name, double delta0, nop::Index n, double sigma,
                 const std::string& noise_kind, std::uint64_t seed, const std::string& out) {
  nop::BuiltinConfig cfg;
  cfg.delta0 = delta0;
  cfg.n = n;
  const nop::GeneratedSignal gen =
      nop::builtin_experiment_signal(nop::parse_builtin_signal(signal_name), cfg);

  nop::NoiseSpec noise;
  noise.sigma = sigma;
  noise.seed = seed;
  if (sigma > 0.0)
    noise.kind = noise_kind == "phase" ? nop::NoiseKind::phase_uniform
                                       : nop::NoiseKind::additive_gaussian;
  const nop::SampledSignal sig = nop::synthesize(gen.components, gen.times, noise);
  nop::write_signal_csv(out, sig);
  std::cout << "wrote " << out << " (" << sig.size() << " samples at " << sig.sample_rate
            << " Hz)\n";
  return 0;
}

int cmd_decompose(const std::string& input, nop::Index k, int iters, double eps, int degree,
                  const std::string& init_kind, std::uint64_t seed, const std::string& out) {
  const nop::SampledSignal sig = nop::read_signal_csv(input);

  nop::NopConfig config;
  config.K = k;
  config.J = iters;
  config.eps = eps;
  config.degree = degree;
  config.seed = seed;
  config.optimizer.seed = seed;

  nop::StageOneResult init = init_kind == "tf" ? nop::init_bandpass_tf(sig, k)
                                               : nop::init_periodogram(sig, k);
  nop::NopInit ni;
  ni.phi0 = init.phi;
  ni.amp0 = init.amp;

  const nop::NopResult result = nop::run_nop(sig, config, ni);
  nop::write_result_bundle(out, sig, result);

  std::cout << "iterations: " << result.iterations_used
            << (result.converged ? " (converged)" : " (iteration cap)") << "\n";
  if (!result.warning.empty()) std::cout << "warning: " << result.warning << "\n";
  const nop::Vec freqs = nop::mean_frequencies(result.tracks, sig.times);
  for (nop::Index c = 0; c < k; ++c)
    std::cout << "component " << c + 1 << ": mean frequency "
              << nop::format_significant(freqs(c), 6) << " cycles/s\n";
  std::cout << "wrote " << out << "/tracks.csv\n";
  return 0;
}

int cmd_superres(const std::string& input, const std::string& method, nop::Index k,
                 const std::string& out, const std::string& spectrum_out) {
  const nop::SampledSignal sig = nop::read_signal_csv(input);

  nop::FrequencyEstimate est;
  nop::Spectrum spectrum;
  bool have_spectrum = false;
  if (method == "music") {
    est = nop::music(sig.values, k);
  } else if (method == "esprit") {
    est = nop::esprit(sig.values, k);
  } else if (method == "me") {
    const nop::BurgResult burg = nop::burg_me(sig.values, -1, 1 << 14, k);
    est = burg.peaks;
    spectrum = burg.spectrum;
    have_spectrum = true;
  } else if (method == "fft") {
    est = nop::periodogram_peaks(sig.values, k);
  } else {
    throw CLI::ValidationError("--method", "expected one of nop|music|esprit|me|fft");
  }

  std::ofstream f(out);
  if (!f) throw std::runtime_error("cannot open for write: " + out);
  f << "component,freq_cps,amplitude\n";
  for (nop::Index c = 0; c < est.frequencies.size(); ++c) {
    const double amp = est.amplitudes.size() > c ? est.amplitudes(c) : 0.0;
    f << c + 1 << ',' << nop::format_significant(est.frequencies(c) * sig.sample_rate) << ','
      << nop::format_significant(amp) << '\n';
  }
  if (est.under_resolved) std::cout << "note: spectrum under-resolved at K=" << k << "\n";

  if (have_spectrum && !spectrum_out.empty()) {
    nop::CsvTable table;
    table.columns = {"freq", "power"};
    table.data.resize(spectrum.freq.size(), 2);
    table.data.col(0) = spectrum.freq;
    table.data.col(1) = spectrum.power;
    nop::write_csv(spectrum_out, table);
  }
  std::cout << "wrote " << out << "\n";
  return 0;
}

int cmd_experiment(const std::string& config_path, const std::string& out_dir) {
  const nop::ExperimentSpec spec = nop::parse_experiment_config(config_path);
  const nop::ErrorReport report = nop::run_experiment(spec);
  std::filesystem::create_directories(out_dir);
  const std::string out = out_dir + "/" + nop::experiment_id_name(spec.id) + ".csv";
  nop::write_error_report(out, report);
  std::cout << "wrote " << out << " (" << report.rows.size() << " rows)\n";
  return 0;
}

int cmd_predict(const std::string& bundle, double from, double to, nop::Index count,
                nop::Index draws, std::uint64_t seed, const std::string& out) {
  nop::NopConfig config;
  nop::SampledSignal sig;
  const nop::NopResult result = nop::read_result_bundle(bundle, config, &sig);

  if (count < 2) throw CLI::ValidationError("--count", "need at least 2 points");
  if (to <= from) {
    from = sig.times(0);
    to = sig.times(sig.times.size() - 1);
  }
  const nop::Vec t0 = nop::Vec::LinSpaced(count, from, to);

  const nop::PredictiveGaussian pred = nop::predict_signal(t0, sig.times, result);
  nop::CsvTable table;
  table.columns = {"t0", "mean", "var"};
  table.data.resize(count, 3);
  table.data.col(0) = t0;
  table.data.col(1) = pred.mean;
  table.data.col(2) = pred.covariance.diagonal();
  nop::write_csv(out, table);
  std::cout << "wrote " << out << "\n";

  if (draws > 0) {
    const nop::Mat samples = nop::sample_signal(t0, sig.times, result, draws, seed);
    nop::CsvTable stab;
    stab.columns = {"t0"};
    for (nop::Index d = 0; d < draws; ++d) stab.columns.push_back("draw_" + std::to_string(d + 1));
    stab.data.resize(count, 1 + draws);
    stab.data.col(0) = t0;
    for (nop::Index d = 0; d < draws; ++d) stab.data.col(1 + d) = samples.row(d).transpose();
    const std::string sample_path = out + ".samples.csv";
    nop::write_csv(sample_path, stab);
    std::cout << "wrote " << sample_path << "\n";
  }
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  apply_thread_cap();

  CLI::App app{"nop: oscillatory-signal decomposition and super-resolution toolkit"};
  app.footer(kSchemas);
  app.require_subcommand(1);

  // generate
  std::string g_signal = "f1_cos", g_noise = "additive", g_out = "signal.csv";
  double g_delta0 = 10.0 / 1024.0, g_sigma = 0.0;
  nop::Index g_n = 0;
  std::uint64_t g_seed = 0;
  auto* gen = app.add_subcommand("generate", "Write a builtin synthetic signal to CSV");
  gen->add_option("--signal", g_signal,
                  "builtin id: f1_cos|f1_shape|f2|f3_cos|f3_shape|f4_close|f5_cross|f6");
  gen->add_option("--delta0", g_delta0, "spectral gap parameter (cycles/s)");
  gen->add_option("--n", g_n, "sample count (0 = experiment default)");
  gen->add_option("--sigma", g_sigma, "noise standard deviation");
  gen->add_option("--noise", g_noise, "noise kind: additive|phase");
  gen->add_option("--seed", g_seed, "noise seed");
  gen->add_option("--out", g_out, "output CSV path");

  // decompose
  std::string d_input, d_out = "result", d_init = "fft";
  nop::Index d_k = 2;
  int d_iters = 20, d_degree = 1;
  double d_eps = 1e-4;
  std::uint64_t d_seed = 0;
  auto* dec = app.add_subcommand("decompose", "Run the decomposition on a signal CSV");
  dec->add_option("--input", d_input, "signal CSV (header t,y)")->required();
  dec->add_option("--k", d_k, "component count");
  dec->add_option("--iters", d_iters, "max outer iterations");
  dec->add_option("--eps", d_eps, "convergence tolerance");
  dec->add_option("--degree", d_degree, "local polynomial degree")->check(CLI::Range(0, 2));
  dec->add_option("--init", d_init, "initialization: fft|tf");
  dec->add_option("--seed", d_seed, "optimizer seed");
  dec->add_option("--out", d_out, "output bundle directory");

  // superres
  std::string s_input, s_method = "music", s_out = "frequencies.csv", s_spectrum;
  nop::Index s_k = 2;
  auto* sup = app.add_subcommand("superres", "Run one classical frequency estimator");
  sup->add_option("--input", s_input, "signal CSV")->required();
  sup->add_option("--method", s_method, "music|esprit|me|fft");
  sup->add_option("--k", s_k, "component count");
  sup->add_option("--out", s_out, "frequency table output");
  sup->add_option("--spectrum", s_spectrum, "optional spectrum CSV (me only)");

  // experiment
  std::string e_config, e_out = "results";
  auto* exp = app.add_subcommand("experiment", "Run an experiment config, write an error table");
  exp->add_option("--config", e_config, "experiment config file")->required();
  exp->add_option("--out", e_out, "output directory");

  // predict
  std::string p_bundle, p_out = "prediction.csv";
  double p_from = 0.0, p_to = 0.0;
  nop::Index p_count = 200, p_draws = 0;
  std::uint64_t p_seed = 0;
  auto* pre = app.add_subcommand("predict", "Posterior prediction from a result bundle");
  pre->add_option("--bundle", p_bundle, "result bundle directory")->required();
  pre->add_option("--from", p_from, "first prediction time");
  pre->add_option("--to", p_to, "last prediction time (defaults to the record span)");
  pre->add_option("--count", p_count, "number of prediction points");
  pre->add_option("--samples", p_draws, "posterior draws to write alongside");
  pre->add_option("--seed", p_seed, "sampling seed");
  pre->add_option("--out", p_out, "prediction CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed())
      return cmd_generate(g_signal, g_delta0, g_n, g_sigma, g_noise, g_seed, g_out);
    if (dec->parsed())
      return cmd_decompose(d_input, d_k, d_iters, d_eps, d_degree, d_init, d_seed, d_out);
    if (sup->parsed()) return cmd_superres(s_input, s_method, s_k, s_out, s_spectrum);
    if (exp->parsed()) return cmd_experiment(e_config, e_out);
    if (pre->parsed()) return cmd_predict(p_bundle, p_from, p_to, p_count, p_draws, p_seed, p_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
