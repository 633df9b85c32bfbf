// Command-line front end: simulate / fit / select / decode / cutoffs /
// experiment. Every run is deterministic given its options and seed; data
// goes to files, diagnostics to stderr.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mixhmm/em.hpp"
#include "mixhmm/inference.hpp"
#include "mixhmm/markov.hpp"
#include "mixhmm/model_io.hpp"
#include "mixhmm/selection.hpp"
#include "mixhmm/sequences.hpp"
#include "mixhmm/simulate.hpp"

namespace fs = std::filesystem;
using namespace mixhmm;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  const auto colon = text.find(':');
  if (colon != std::string::npos) {  // a:b:step
    int lo, hi, step = 1;
    std::istringstream in(text);
    char c1, c2;
    in >> lo >> c1 >> hi;
    if (in >> c2 >> step) {}
    if (step < 1 || hi < lo) throw InputError("bad range: " + text);
    for (int v = lo; v <= hi; v += step) out.push_back(v);
    return out;
  }
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(std::stoi(item));
  if (out.empty()) throw InputError("empty integer list: " + text);
  return out;
}

std::vector<std::string> parse_string_list(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

// Flat key=value file applied wherever the command line did not set the
// option; unknown keys are rejected.
class ConfigurableCommand {
 public:
  explicit ConfigurableCommand(CLI::App* cmd) : cmd_(cmd) {
    cmd->add_option("--config", config_path_,
                    "flat key=value file with defaults for this command");
  }

  template <class T>
  CLI::Option* add(const std::string& flag, T& var, const std::string& desc) {
    CLI::Option* opt = cmd_->add_option(flag, var, desc);
    std::string key = flag;
    while (!key.empty() && key.front() == '-') key.erase(key.begin());
    setters_[key] = [&var, flag](const std::string& text) {
      std::istringstream in(text);
      T value;
      if constexpr (std::is_same_v<T, std::string>) {
        value = text;
      } else if constexpr (std::is_same_v<T, bool>) {
        value = (text == "1" || text == "true" || text == "on");
        if (!value && !(text == "0" || text == "false" || text == "off"))
          throw InputError("config: bad boolean for " + flag + ": " + text);
      } else {
        if (!(in >> value) || !in.eof())
          throw InputError("config: bad value for " + flag + ": " + text);
      }
      var = value;
    };
    options_[key] = opt;
    return opt;
  }

  void apply_config() {
    if (config_path_.empty()) return;
    std::ifstream in(config_path_);
    if (!in) throw InputError("cannot open config file: " + config_path_);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        std::ostringstream msg;
        msg << config_path_ << ":" << line_no << ": expected key=value";
        throw InputError(msg.str());
      }
      const std::string key = line.substr(0, eq);
      const std::string value = line.substr(eq + 1);
      const auto it = setters_.find(key);
      if (it == setters_.end())
        throw InputError("config: unknown key '" + key + "'");
      if (options_[key]->count() == 0) it->second(value);
    }
  }

 private:
  CLI::App* cmd_;
  std::string config_path_;
  std::map<std::string, std::function<void(const std::string&)>> setters_;
  std::map<std::string, CLI::Option*> options_;
};


ShortGapPolicy policy_from_string(const std::string& name) {
  if (name == "split") return ShortGapPolicy::split;
  if (name == "bridge") return ShortGapPolicy::bridge;
  if (name == "error") return ShortGapPolicy::error;
  throw InputError("short-gap policy must be split, bridge, or error");
}

std::ofstream open_output(const fs::path& dir, const std::string& name) {
  std::ofstream out(dir / name);
  if (!out) throw InputError("cannot write " + (dir / name).string());
  return out;
}

nlohmann::ordered_json gap_report_json(const GapValidityReport& report) {
  nlohmann::ordered_json j;
  j["vacuous"] = report.vacuous;
  j["pass"] = report.pass;
  j["d_min"] = report.d_min;
  j["eta"] = report.eta;
  j["bounds"] = report.bounds;
  j["tv_at_dmin"] = report.tv_at_dmin;
  j["failing_components"] = report.failing_components;
  return j;
}

void write_tau_csv(std::ostream& out,
                   const std::vector<SegmentedSubject>& subjects,
                   const Matrix& tau) {
  out << "subject_id";
  for (Index k = 0; k < tau.cols(); ++k) out << ",tau_" << k + 1;
  out << '\n';
  for (Index i = 0; i < tau.rows(); ++i) {
    out << subjects[i].subject_id;
    for (Index k = 0; k < tau.cols(); ++k) out << ',' << fmt(tau(i, k));
    out << '\n';
  }
}

std::map<std::string, int> read_truth_z(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open truth file: " + path);
  std::string line;
  if (!std::getline(in, line) ||
      (line != "subject_id,z" && line != "subject_id,z\r"))
    throw InputError("truth file must have header subject_id,z");
  std::map<std::string, int> out;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw InputError("truth file: expected subject_id,z rows");
    out[line.substr(0, comma)] = std::stoi(line.substr(comma + 1));
  }
  return out;
}

struct EmOptions {
  int max_iter = 500;
  double rel_tol = 1e-8;
  int restarts = 50;
  std::uint64_t seed = 0;
  bool stationary_init = true;
  double min_state_occupancy = 1e-6;
  int threads = 1;

  void attach(ConfigurableCommand& cmd, bool with_seed_and_threads = true) {
    cmd.add("--max-iter", max_iter, "EM iteration cap");
    cmd.add("--rel-tol", rel_tol, "relative log-likelihood stop tolerance");
    cmd.add("--restarts", restarts, "independent EM initializations");
    cmd.add("--stationary-init", stationary_init,
            "tie initial laws to the stationary law after each M-step");
    cmd.add("--min-state-occupancy", min_state_occupancy,
            "degeneracy floor on expected state occupancy");
    if (with_seed_and_threads) {
      cmd.add("--seed", seed, "root random seed");
      cmd.add("--threads", threads, "worker thread cap (outputs identical)");
    }
  }

  EmConfig to_config() const {
    EmConfig config;
    config.max_iter = max_iter;
    config.rel_tol = rel_tol;
    config.restarts = restarts;
    config.seed = seed;
    config.stationary_init = stationary_init;
    config.min_state_occupancy = min_state_occupancy;
    config.threads = threads;
    return config;
  }
};

// ----- simulate ------------------------------------------------------------

struct SimulateOptions {
  std::string case_name = "easy";
  std::string model_path;
  int n = 10;
  int T = 100;
  std::string missingness = "none";
  std::uint64_t seed = 0;
  std::string out_dir = ".";
};

void run_simulate(const SimulateOptions& opt) {
  ScenarioSpec spec;
  if (!opt.model_path.empty())
    spec.theta = load_model_json_file(opt.model_path);
  else
    spec.theta = scenario_params(scenario_case_from_string(opt.case_name));
  spec.n = opt.n;
  spec.T = opt.T;
  spec.seed = opt.seed;
  spec.missingness = missingness_from_string(opt.missingness);

  Rng rng(spec.seed);
  Dataset data = sample_dataset(spec, rng);
  apply_missingness(data, spec.missingness, rng);

  const fs::path dir(opt.out_dir);
  fs::create_directories(dir);
  {
    auto out = open_output(dir, "data.csv");
    write_long_csv(out, data.series);
  }
  {
    auto out = open_output(dir, "truth_z.csv");
    out << "subject_id,z\n";
    for (std::size_t i = 0; i < data.series.size(); ++i)
      out << data.series[i].subject_id << ',' << data.z[i] + 1 << '\n';
  }
  {
    auto out = open_output(dir, "truth_x.csv");
    out << "subject_id,t,x\n";
    for (std::size_t i = 0; i < data.series.size(); ++i)
      for (std::size_t t = 0; t < data.x[i].size(); ++t)
        out << data.series[i].subject_id << ',' << t << ','
            << data.x[i][t] + 1 << '\n';
  }
}

// ----- fit -----------------------------------------------------------------

struct FitOptions {
  std::string data_path;
  int K = 1;
  int M = 1;
  long min_gap = 1;
  std::string short_gap_policy = "split";
  double eta = 1e-2;
  std::string truth_z_path;
  std::string out_dir = ".";
  EmOptions em;
};

void run_fit(const FitOptions& opt) {
  const auto series = parse_long_csv_file(opt.data_path);
  std::vector<SegmentedSubject> subjects;
  subjects.reserve(series.size());
  const ShortGapPolicy policy = policy_from_string(opt.short_gap_policy);
  for (const auto& s : series)
    subjects.push_back(segment_on_missing(s, opt.min_gap, policy));

  const FitResult result = fit(subjects, opt.K, opt.M, opt.em.to_config());
  const GapValidityReport gap =
      validate_gap_assumption(subjects, result.params, opt.eta);

  const fs::path dir(opt.out_dir);
  fs::create_directories(dir);
  save_model_json_file((dir / "model.json").string(), result.params);
  {
    auto out = open_output(dir, "tau.csv");
    write_tau_csv(out, subjects, result.tau);
  }
  {
    auto out = open_output(dir, "partition.csv");
    out << "subject_id,map_class\n";
    for (std::size_t i = 0; i < subjects.size(); ++i)
      out << subjects[i].subject_id << ',' << result.partition[i] + 1 << '\n';
  }

  nlohmann::ordered_json report;
  report["loglik"] = result.loglik;
  report["n_iterations"] = result.n_iterations;
  report["converged"] = result.converged;
  report["restart_index"] = result.restart_index;
  report["n_obs"] = observation_count(subjects);
  report["nu_K"] = parameter_count(opt.K, opt.M);
  report["bic"] = bic(result, subjects);
  report["entropy"] = map_entropy(result);
  report["icl"] = icl(result, subjects);
  report["gap_validity"] = gap_report_json(gap);
  report["loglik_trace"] = result.loglik_trace;
  if (!opt.truth_z_path.empty()) {
    const auto truth = read_truth_z(opt.truth_z_path);
    std::vector<int> z;
    z.reserve(subjects.size());
    for (const auto& subject : subjects) {
      const auto it = truth.find(subject.subject_id);
      if (it == truth.end())
        throw InputError("truth file misses subject " + subject.subject_id);
      z.push_back(it->second);
    }
    report["ari_vs_truth"] = adjusted_rand_index(result.partition, z);
  }
  auto out = open_output(dir, "fit.json");
  out << report.dump(2) << '\n';
}

// ----- select ----------------------------------------------------------------

struct SelectOptions {
  std::string data_path;
  int k_min = 1;
  int k_max = 3;
  int M = 1;
  long min_gap = 1;
  std::string short_gap_policy = "split";
  std::string out_dir = ".";
  EmOptions em;
};

void run_select(const SelectOptions& opt) {
  const auto series = parse_long_csv_file(opt.data_path);
  const ShortGapPolicy policy = policy_from_string(opt.short_gap_policy);
  std::vector<SegmentedSubject> subjects;
  for (const auto& s : series)
    subjects.push_back(segment_on_missing(s, opt.min_gap, policy));

  std::vector<int> k_range;
  for (int k = opt.k_min; k <= opt.k_max; ++k) k_range.push_back(k);
  const SelectionResult result =
      select_components(subjects, k_range, opt.M, opt.em.to_config());

  const fs::path dir(opt.out_dir);
  fs::create_directories(dir);
  {
    auto out = open_output(dir, "selection.csv");
    out << "K,loglik,nu_K,bic,icl,entropy\n";
    for (const auto& row : result.rows)
      out << row.K << ',' << fmt(row.loglik) << ',' << row.nu_K << ','
          << fmt(row.bic) << ',' << fmt(row.icl) << ',' << fmt(row.entropy)
          << '\n';
  }
  nlohmann::ordered_json best;
  best["best_bic_K"] = result.best_bic_K;
  best["best_icl_K"] = result.best_icl_K;
  auto out = open_output(dir, "selection.json");
  out << best.dump(2) << '\n';
}

// ----- decode ----------------------------------------------------------------

struct DecodeOptions {
  std::string model_path;
  std::string data_path;
  long min_gap = 1;
  std::string short_gap_policy = "split";
  std::string out_dir = ".";
};

void run_decode(const DecodeOptions& opt) {
  const MixtureHmmParams params = load_model_json_file(opt.model_path);
  const auto series = parse_long_csv_file(opt.data_path);

  const fs::path dir(opt.out_dir);
  fs::create_directories(dir);
  auto out = open_output(dir, "decoded.csv");
  out << "subject_id,segment,t,map_state";
  for (int h = 0; h < params.num_states(); ++h) out << ",eta_" << h + 1;
  out << ",map_class\n";

  const ShortGapPolicy policy = policy_from_string(opt.short_gap_policy);
  for (const auto& s : series) {
    const auto subject = segment_on_missing(s, opt.min_gap, policy);
    const auto decode = decode_subject(subject, params);
    for (std::size_t seg = 0; seg < subject.segments.size(); ++seg) {
      const long start = subject.segment_start_times[seg];
      for (std::size_t t = 0; t < decode.paths[seg].size(); ++t) {
        out << subject.subject_id << ',' << seg << ','
            << start + static_cast<long>(t) << ','
            << decode.paths[seg][t] + 1;
        for (int h = 0; h < params.num_states(); ++h)
          out << ',' << fmt(decode.eta[seg](t, h));
        out << ',' << decode.map_class + 1 << '\n';
      }
    }
  }
}

// ----- cutoffs ---------------------------------------------------------------

struct CutoffOptions {
  std::string model_path;
  std::string out_dir = ".";
};

void run_cutoffs(const CutoffOptions& opt) {
  const MixtureHmmParams params = load_model_json_file(opt.model_path);
  const CutoffResult cuts = marginal_cutoffs(params);
  const Matrix occupancy = mean_time_per_state(params);

  const fs::path dir(opt.out_dir);
  fs::create_directories(dir);
  {
    auto out = open_output(dir, "cutoffs.csv");
    out << "kind,state,lower,upper\n";
    out << "zero_atom," << cuts.zero_state + 1 << ",0,0\n";
    for (std::size_t i = 0; i < cuts.interval_states.size(); ++i) {
      const double lower = i == 0 ? 0.0 : cuts.boundaries[i - 1];
      out << "interval," << cuts.interval_states[i] + 1 << ','
          << fmt(lower) << ',';
      if (i < cuts.boundaries.size()) out << fmt(cuts.boundaries[i]);
      else out << "inf";
      out << '\n';
    }
    if (!cuts.adjacency_ok)
      std::cerr << "warning: more than M-1 argmax changes found\n";
  }
  {
    auto out = open_output(dir, "mean_time.csv");
    out << "class";
    for (Index h = 0; h < occupancy.cols(); ++h) out << ",state_" << h + 1;
    out << '\n';
    for (Index k = 0; k < occupancy.rows(); ++k) {
      out << k + 1;
      for (Index h = 0; h < occupancy.cols(); ++h)
        out << ',' << fmt(occupancy(k, h));
      out << '\n';
    }
  }
}

// ----- experiment ------------------------------------------------------------

struct ExperimentOptions {
  std::string kind = "decay";
  std::string case_name = "easy";
  int n = 10;
  int T = 100;
  int replicates = 100;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string t_grid = "10:100:10";
  std::string n_list = "10";
  std::string t_list = "100";
  std::string missingness_list = "none";
  std::string out_dir = ".";
  EmOptions em;
};

void run_experiment(const ExperimentOptions& opt) {
  const fs::path dir(opt.out_dir);
  fs::create_directories(dir);
  ScenarioSpec spec =
      make_scenario(scenario_case_from_string(opt.case_name), opt.n, opt.T,
                    Missingness::none, opt.replicates, opt.seed);

  if (opt.kind == "decay") {
    const auto points = misclassification_experiment(
        spec, parse_int_list(opt.t_grid), opt.threads);
    auto out = open_output(dir, "decay.csv");
    out << "T,median,q05,q95,error_rate\n";
    for (const auto& p : points)
      out << p.T << ',' << fmt(p.median) << ',' << fmt(p.q05) << ','
          << fmt(p.q95) << ',' << fmt(p.error_rate) << '\n';
    return;
  }
  if (opt.kind == "convergence") {
    std::vector<ConvergenceCellSpec> cells;
    for (int n : parse_int_list(opt.n_list))
      for (int T : parse_int_list(opt.t_list))
        for (const auto& m : parse_string_list(opt.missingness_list))
          cells.push_back({n, T, missingness_from_string(m)});
    const auto rows =
        convergence_experiment(spec, cells, opt.em.to_config(), opt.threads);
    auto out = open_output(dir, "convergence.csv");
    out << "n,T,missingness,ari_partition,ari_states,mse_A,mse_epsilon,"
           "mse_shape,mse_rate,mse_delta,replicates_used,degenerate\n";
    for (const auto& cell : rows)
      out << cell.n << ',' << cell.T << ',' << to_string(cell.missingness)
          << ',' << fmt(cell.ari_partition) << ',' << fmt(cell.ari_states)
          << ',' << fmt(cell.mse.trans) << ',' << fmt(cell.mse.epsilon) << ','
          << fmt(cell.mse.shape) << ',' << fmt(cell.mse.rate) << ','
          << fmt(cell.mse.delta) << ',' << cell.replicates_used << ','
          << cell.degenerate << '\n';
    return;
  }
  throw InputError("experiment kind must be decay or convergence");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixture of hidden Markov models for accelerometer-style "
               "time series"};
  app.require_subcommand(1);

  SimulateOptions sim;
  auto* sim_cmd = app.add_subcommand("simulate", "sample a dataset");
  ConfigurableCommand sim_cfg(sim_cmd);
  sim_cfg.add("--case", sim.case_name,
              "hard | medium-hard | medium-easy | easy");
  sim_cfg.add("--model", sim.model_path, "custom parameters (model.json)");
  sim_cfg.add("--n", sim.n, "subjects");
  sim_cfg.add("--T", sim.T, "last time index (observations at 0..T)");
  sim_cfg.add("--missingness", sim.missingness, "none | mcar1 | mcar2 | mnar");
  sim_cfg.add("--seed", sim.seed, "random seed");
  sim_cfg.add("--out", sim.out_dir, "output directory");

  FitOptions fit_opt;
  auto* fit_cmd = app.add_subcommand("fit", "estimate parameters by EM");
  ConfigurableCommand fit_cfg(fit_cmd);
  fit_cfg.add("--data", fit_opt.data_path, "long-format csv")->required();
  fit_cfg.add("--K", fit_opt.K, "number of components");
  fit_cfg.add("--M", fit_opt.M, "number of states");
  fit_cfg.add("--min-gap", fit_opt.min_gap, "smallest expected missing run");
  fit_cfg.add("--short-gap-policy", fit_opt.short_gap_policy,
              "split | bridge | error for runs below min-gap");
  fit_cfg.add("--eta", fit_opt.eta, "gap validity tolerance");
  fit_cfg.add("--truth-z", fit_opt.truth_z_path,
              "optional truth_z.csv for an ARI report");
  fit_cfg.add("--out", fit_opt.out_dir, "output directory");
  fit_opt.em.attach(fit_cfg);

  SelectOptions sel;
  auto* sel_cmd = app.add_subcommand("select", "rank component counts");
  ConfigurableCommand sel_cfg(sel_cmd);
  sel_cfg.add("--data", sel.data_path, "long-format csv")->required();
  sel_cfg.add("--K-min", sel.k_min, "smallest K");
  sel_cfg.add("--K-max", sel.k_max, "largest K");
  sel_cfg.add("--M", sel.M, "number of states");
  sel_cfg.add("--min-gap", sel.min_gap, "smallest expected missing run");
  sel_cfg.add("--short-gap-policy", sel.short_gap_policy,
              "split | bridge | error for runs below min-gap");
  sel_cfg.add("--out", sel.out_dir, "output directory");
  sel.em.attach(sel_cfg);

  DecodeOptions dec;
  auto* dec_cmd = app.add_subcommand("decode", "classify and decode states");
  ConfigurableCommand dec_cfg(dec_cmd);
  dec_cfg.add("--model", dec.model_path, "fitted model.json")->required();
  dec_cfg.add("--data", dec.data_path, "long-format csv")->required();
  dec_cfg.add("--min-gap", dec.min_gap, "smallest expected missing run");
  dec_cfg.add("--short-gap-policy", dec.short_gap_policy,
              "split | bridge | error for runs below min-gap");
  dec_cfg.add("--out", dec.out_dir, "output directory");

  CutoffOptions cut;
  auto* cut_cmd =
      app.add_subcommand("cutoffs", "marginal cutoffs and state occupancy");
  ConfigurableCommand cut_cfg(cut_cmd);
  cut_cfg.add("--model", cut.model_path, "fitted model.json")->required();
  cut_cfg.add("--out", cut.out_dir, "output directory");

  ExperimentOptions exp;
  auto* exp_cmd = app.add_subcommand("experiment", "simulation studies");
  ConfigurableCommand exp_cfg(exp_cmd);
  exp_cfg.add("--kind", exp.kind, "decay | convergence");
  exp_cfg.add("--case", exp.case_name, "scenario case");
  exp_cfg.add("--n", exp.n, "subjects per replicate (decay ignores)");
  exp_cfg.add("--T", exp.T, "default sequence length");
  exp_cfg.add("--replicates", exp.replicates, "replicates per grid point");
  exp_cfg.add("--T-grid", exp.t_grid, "decay grid, e.g. 10:100:10");
  exp_cfg.add("--n-list", exp.n_list, "convergence n values, e.g. 10,100");
  exp_cfg.add("--T-list", exp.t_list, "convergence T values, e.g. 100,500");
  exp_cfg.add("--missingness-list", exp.missingness_list,
              "e.g. none,mcar1,mcar2,mnar");
  exp_cfg.add("--out", exp.out_dir, "output directory");
  exp_cfg.add("--seed", exp.seed, "scenario seed");
  exp_cfg.add("--threads", exp.threads, "replicate-level workers");
  exp.em.attach(exp_cfg, /*with_seed_and_threads=*/false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim_cmd->parsed()) {
      sim_cfg.apply_config();
      run_simulate(sim);
    } else if (fit_cmd->parsed()) {
      fit_cfg.apply_config();
      run_fit(fit_opt);
    } else if (sel_cmd->parsed()) {
      sel_cfg.apply_config();
      run_select(sel);
    } else if (dec_cmd->parsed()) {
      dec_cfg.apply_config();
      run_decode(dec);
    } else if (cut_cmd->parsed()) {
      cut_cfg.apply_config();
      run_cutoffs(cut);
    } else if (exp_cmd->parsed()) {
      exp_cfg.apply_config();
      run_experiment(exp);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
