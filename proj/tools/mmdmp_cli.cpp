// mmdmp-cli: train deep kernels and run two-sample tests, single-instance
// detection and variance diagnostics from the command line. Results are JSON
// on stdout (or --out); failures print {"error": ...} on stderr.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mmdmp/mmdmp.hpp"

namespace {

using nlohmann::json;
using namespace mmdmp;

/// Flags that mirror RunConfig keys. They are applied after --config, so an
/// explicit flag always wins.
class ConfigFlags {
 public:
  void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    auto& slot = slots_[key];
    slot.option = app->add_option(flag, slot.value, help);
  }

  void add_config(CLI::App* app) { app->add_option("--config", config_path_, "key = value config file"); }

  [[nodiscard]] RunConfig resolve(RunConfig base) const {
    if (!config_path_.empty()) base = load_run_config(config_path_, std::move(base));
    for (const auto& [key, slot] : slots_) {
      if (slot.option->count() > 0) {
        try {
          base.set(key, slot.value);
        } catch (const InvalidInput& e) {
          throw InvalidInput(slot.option->get_name() + ": " + e.what());
        }
      }
    }
    base.validate();
    return base;
  }

 private:
  struct Slot {
    std::string value;
    CLI::Option* option = nullptr;
  };
  std::map<std::string, Slot> slots_;
  std::string config_path_;
};

void add_training_flags(ConfigFlags& f, CLI::App* app) {
  f.add(app, "--objective", "objective", "mmd-d | mmd-mp | mpp-only | mmd-mp-star");
  f.add(app, "--lambda", "lambda", "variance regularizer");
  f.add(app, "--lr", "learning_rate", "Adam learning rate");
  f.add(app, "--max-steps", "max_steps", "training steps");
  f.add(app, "--batch-size", "batch_size", "instances per population per step");
  f.add(app, "--seed", "seed", "seed for every random stream");
}

json config_json(const RunConfig& cfg) {
  json j = json::object();
  for (const auto& [k, v] : cfg.entries()) j[k] = v;
  return j;
}

json record_json(const TrainRecord& r) {
  return {{"step", r.step},   {"objective", r.objective}, {"estimate", r.estimate},
          {"variance", r.variance}, {"mmd_u", r.mmd_u},       {"e_kxx", r.e_kxx},
          {"e_kyy", r.e_kyy}, {"e_kxy", r.e_kxy},         {"elapsed_ms", r.elapsed_ms}};
}

json decomposition_json(const VarianceDecomposition& d) {
  return {{"batches", d.batches},
          {"mean_kxx", d.mean_kxx},
          {"mean_kyy", d.mean_kyy},
          {"mean_kxy", d.mean_kxy},
          {"mean_mmd", d.mean_mmd},
          {"var_kxx", d.var_kxx},
          {"var_2kxy", d.var_2kxy},
          {"cov_kxx_2kxy", d.cov_kxx_2kxy},
          {"var_hstar", d.var_hstar},
          {"var_kyy", d.var_kyy},
          {"cov_hstar_kyy", d.cov_hstar_kyy},
          {"component_sum", d.component_sum},
          {"proxy_variance", d.proxy_variance},
          {"mmd_variance", d.mmd_variance}};
}

std::vector<SampleSet> load_all(const std::vector<std::string>& paths) {
  std::vector<SampleSet> out;
  for (const auto& p : paths) out.push_back(load_embeddings(p));
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw FormatError("failed writing '" + path + "'");
}

struct Invocation {
  std::string command;
  std::string argv;
  std::string out_path;
};

void emit(const Invocation& inv, const RunConfig* cfg, json metrics, json outputs) {
  json r;
  r["command"] = inv.command;
  r["argv"] = inv.argv;
  if (cfg) {
    r["config"] = config_json(*cfg);
    r["seed"] = cfg->seed();
  }
  r["metrics"] = std::move(metrics);
  r["outputs"] = std::move(outputs);
  const std::string text = r.dump(2) + "\n";
  if (inv.out_path.empty()) {
    std::cout << text;
  } else {
    write_text(inv.out_path, text);
  }
}

// synth-gen -------------------------------------------------------------

struct SynthGenArgs {
  ConfigFlags flags;
  int n = 200;
  int center = -1;
  std::uint64_t index = synth_index::held_out;
  std::string out_p, out_q;
};

void run_synth_gen(SynthGenArgs& a, Invocation& inv) {
  const RunConfig cfg = a.flags.resolve(synthetic_defaults());
  detail::require(a.n >= 1, "--n must be at least 1");
  json outputs = json::array();
  if (!a.out_p.empty()) {
    save_embeddings(a.out_p, sample_p(a.n, cfg.mixture.d, cfg.seed(), a.index));
    outputs.push_back(a.out_p);
  }
  if (!a.out_q.empty()) {
    const SampleSet q = a.center >= 0 ? sample_q_centre(a.n, cfg.mixture, a.center, a.index)
                                      : sample_q(a.n, cfg.mixture, a.index);
    save_embeddings(a.out_q, q);
    outputs.push_back(a.out_q);
  }
  detail::require(!outputs.empty(), "nothing to write: give --out-p and/or --out-q");
  emit(inv, &cfg, {{"n", a.n}, {"dim", cfg.mixture.d}}, outputs);
}

// synth-power -----------------------------------------------------------

struct SynthPowerArgs {
  ConfigFlags flags;
  bool sweep = false;
};

void run_synth_power_cmd(SynthPowerArgs& a, Invocation& inv) {
  const RunConfig cfg = a.flags.resolve(synthetic_defaults());
  std::vector<double> mus = a.sweep ? mu_grid() : std::vector<double>{cfg.mixture.mu};
  json results = json::array();
  for (double mu : mus) {
    RunConfig c = cfg;
    c.mixture.mu = mu;
    const SynthPowerResult r = run_synth_power(c);
    results.push_back({{"mu", r.mu},
                       {"objective", to_string(c.train.objective)},
                       {"power", r.power},
                       {"q_variance_norm", r.q_variance_norm},
                       {"final_objective", r.final_objective}});
  }
  json outputs = json::array();
  if (!inv.out_path.empty()) outputs.push_back(inv.out_path);
  emit(inv, &cfg, {{"results", results}}, outputs);
}

// train -----------------------------------------------------------------

struct TrainArgs {
  ConfigFlags flags;
  std::string p;
  std::vector<std::string> q;
  std::string out_model;
  std::string trace;
};

void run_train(TrainArgs& a, Invocation& inv) {
  const RunConfig cfg = a.flags.resolve(RunConfig{});
  const SampleSet sp = load_embeddings(a.p);
  const std::vector<SampleSet> sq = load_all(a.q);
  const TrainTrace t = train(sp, sq, initial_kernel(cfg, sp.dim()), cfg.train);
  save_model(a.out_model, t.final_params);

  const std::string trace_path = a.trace.empty() ? a.out_model + ".trace.jsonl" : a.trace;
  std::ostringstream lines;
  for (const auto& r : t.records) lines << record_json(r).dump() << '\n';
  write_text(trace_path, lines.str());

  json metrics = {{"steps", t.records.size()}, {"q_populations", sq.size()}};
  if (!t.records.empty()) {
    metrics["initial_objective"] = t.records.front().objective;
    metrics["final_objective"] = t.records.back().objective;
    metrics["final_mmd_u"] = t.records.back().mmd_u;
  }
  emit(inv, &cfg, metrics, {a.out_model, trace_path});
}

// test2st ---------------------------------------------------------------

struct TestArgs {
  ConfigFlags flags;
  std::string model, p, q;
};

void run_test2st(TestArgs& a, Invocation& inv) {
  const RunConfig cfg = a.flags.resolve(RunConfig{});
  const KernelParams omega = load_model(a.model);
  const auto pairs = draw_test_pairs(load_embeddings(a.p), load_embeddings(a.q), cfg.set_size, cfg.repeats, cfg.seed());
  const auto outcomes = run_trials(pairs, omega, cfg.test);
  json per = json::array();
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    per.push_back({{"repeat", i}, {"est", outcomes[i].est}, {"p_value", outcomes[i].p_value},
                   {"reject", outcomes[i].reject}});
  }
  emit(inv, &cfg, {{"power", rejection_rate(outcomes)}, {"repeats", outcomes.size()}, {"outcomes", per}},
       json::array());
}

// sid -------------------------------------------------------------------

struct SidArgs {
  std::string model, ref, p, q;
};

void run_sid(SidArgs& a, Invocation& inv) {
  const KernelParams omega = load_model(a.model);
  const SampleSet ref = load_embeddings(a.ref);
  const auto sp = sid_scores(ref, load_embeddings(a.p), omega);
  const auto sq = sid_scores(ref, load_embeddings(a.q), omega);
  emit(inv, nullptr, {{"auroc", auroc(sp, sq)}, {"scores_p", sp}, {"scores_q", sq}}, json::array());
}

// diag ------------------------------------------------------------------

struct DiagArgs {
  ConfigFlags flags;
  std::string model, p;
  std::vector<std::string> q;
  std::string heldout_p;
  std::vector<std::string> heldout_q;
  std::string csv;
};

void run_diag(DiagArgs& a, Invocation& inv) {
  const bool synthetic = a.p.empty();
  const RunConfig cfg = a.flags.resolve(synthetic ? synthetic_defaults() : RunConfig{});
  detail::require(synthetic == a.q.empty(), "give both --p and --q, or neither for synthetic data");

  SampleSet train_p, train_q, eval_p, eval_q;
  if (synthetic) {
    train_p = sample_p(cfg.train_n, cfg.mixture.d, cfg.seed(), synth_index::train);
    train_q = sample_q(cfg.train_n, cfg.mixture, synth_index::train);
    const Eigen::Index pool = static_cast<Eigen::Index>(cfg.batches) * cfg.train.batch_size;
    eval_p = sample_p(pool, cfg.mixture.d, cfg.seed(), synth_index::held_out);
    eval_q = sample_q(pool, cfg.mixture, synth_index::held_out);
  } else {
    train_p = load_embeddings(a.p);
    train_q = concatenate(load_all(a.q), "mgt");
    eval_p = a.heldout_p.empty() ? train_p : load_embeddings(a.heldout_p);
    eval_q = a.heldout_q.empty() ? train_q : concatenate(load_all(a.heldout_q), "mgt");
  }

  std::vector<KernelStatsRecord> rows;
  json decompositions = json::array();
  auto checkpoint = [&](int step, const KernelParams& omega) {
    const auto recs = collect_kernel_stats(omega, eval_p, eval_q, cfg.batches, cfg.train.batch_size, cfg.seed(), step);
    rows.insert(rows.end(), recs.begin(), recs.end());
    json d = decomposition_json(variance_decomposition(recs));
    d["step"] = step;
    decompositions.push_back(d);
  };

  json metrics = json::object();
  if (!a.model.empty()) {
    checkpoint(0, load_model(a.model));
    metrics["mode"] = "frozen";
  } else {
    const int every = cfg.diag_every;
    const int last = cfg.train.max_steps;
    TrainConfig tc = cfg.train;
    tc.batch_size = static_cast<int>(std::min<Eigen::Index>(tc.batch_size, std::min(train_p.size(), train_q.size())));
    const TrainTrace t = train(train_p, {train_q}, initial_kernel(cfg, train_p.dim()), tc,
                               [&](int step, const KernelParams& omega) {
                                 if (step == 0 || step == last || (every > 0 && step % every == 0)) {
                                   checkpoint(step, omega);
                                 }
                               });
    metrics["mode"] = "trained";
    metrics["objective"] = to_string(cfg.train.objective);
    if (!t.records.empty()) metrics["final_objective"] = t.records.back().objective;
  }
  metrics["decompositions"] = decompositions;

  json outputs = json::array();
  if (!a.csv.empty()) {
    std::ostringstream os;
    os.precision(17);
    os << "step,batch,e_kxx,e_kyy,e_kxy,mmd\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      os << rows[i].step << ',' << i % static_cast<std::size_t>(cfg.batches) << ',' << rows[i].e_kxx << ','
         << rows[i].e_kyy << ',' << rows[i].e_kxy << ',' << rows[i].mmd_value << '\n';
    }
    write_text(a.csv, os.str());
    outputs.push_back(a.csv);
  }
  emit(inv, &cfg, metrics, outputs);
}

void print_error(const std::string& type, const std::string& message, const std::string& usage = {}) {
  json e = {{"error", {{"type", type}, {"message", message}}}};
  if (!usage.empty()) e["error"]["usage"] = usage;
  std::cerr << e.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deep-kernel MMD two-sample testing and detection"};
  app.require_subcommand(1);
  Invocation inv;
  for (int i = 0; i < argc; ++i) inv.argv += (i ? " " : "") + std::string(argv[i]);

  auto add_out = [&](CLI::App* sub) { sub->add_option("--out", inv.out_path, "write the JSON result here"); };

  SynthGenArgs gen;
  auto* c_gen = app.add_subcommand("synth-gen", "write P / mixture samples as EMB1 files");
  gen.flags.add_config(c_gen);
  gen.flags.add(c_gen, "--mu", "mu", "mixture centre offset");
  gen.flags.add(c_gen, "--delta", "delta", "component variance");
  gen.flags.add(c_gen, "--dim", "dim", "dimension (even)");
  gen.flags.add(c_gen, "--q-centers", "q_centers", "mixture components used (1..4)");
  gen.flags.add(c_gen, "--seed", "seed", "random seed");
  c_gen->add_option("--n", gen.n, "rows per file")->capture_default_str();
  c_gen->add_option("--center", gen.center, "draw Q from this single component (0..3)");
  c_gen->add_option("--index", gen.index, "stream index within the seed")->capture_default_str();
  c_gen->add_option("--out-p", gen.out_p, "EMB1 path for P = N(0, I)");
  c_gen->add_option("--out-q", gen.out_q, "EMB1 path for the mixture Q");
  add_out(c_gen);

  SynthPowerArgs sp;
  auto* c_sp = app.add_subcommand("synth-power", "train on the Gaussian mixture and estimate test power");
  sp.flags.add_config(c_sp);
  sp.flags.add(c_sp, "--mu", "mu", "mixture centre offset");
  sp.flags.add(c_sp, "--delta", "delta", "component variance (default 1.3)");
  sp.flags.add(c_sp, "--dim", "dim", "dimension (default 100)");
  sp.flags.add(c_sp, "--q-centers", "q_centers", "training mixture components (default 4)");
  sp.flags.add(c_sp, "--train-n", "train_n", "training instances per population (default 200)");
  sp.flags.add(c_sp, "--test-sets", "test_sets", "test sets (default 1000)");
  sp.flags.add(c_sp, "--set-size", "set_size", "instances per test set (default 10)");
  sp.flags.add(c_sp, "--test-center", "test_center", "mixture component used at test time (default 0)");
  sp.flags.add(c_sp, "--n-perm", "n_perm", "permutations per test");
  sp.flags.add(c_sp, "--alpha", "alpha", "significance level");
  add_training_flags(sp.flags, c_sp);
  c_sp->add_flag("--sweep", sp.sweep, "run every mu in 0.22, 0.24, ..., 0.40");
  add_out(c_sp);

  TrainArgs tr;
  auto* c_tr = app.add_subcommand("train", "train a deep kernel on EMB1 populations");
  tr.flags.add_config(c_tr);
  add_training_flags(tr.flags, c_tr);
  tr.flags.add(c_tr, "--hidden-width", "hidden_width", "featurizer hidden width (0: twice the input)");
  c_tr->add_option("--p", tr.p, "HWT population (EMB1)")->required();
  c_tr->add_option("--q", tr.q, "MGT populations, comma separated")->required()->delimiter(',');
  c_tr->add_option("--out-model", tr.out_model, "MMDK output path")->required();
  c_tr->add_option("--trace", tr.trace, "JSON-lines trace path (default <out-model>.trace.jsonl)");
  add_out(c_tr);

  TestArgs te;
  auto* c_te = app.add_subcommand("test2st", "repeated permutation two-sample tests");
  te.flags.add_config(c_te);
  te.flags.add(c_te, "--n-perm", "n_perm", "permutations (default 200)");
  te.flags.add(c_te, "--alpha", "alpha", "significance level (default 0.05)");
  te.flags.add(c_te, "--repeats", "repeats", "number of test sets");
  te.flags.add(c_te, "--set-size", "set_size", "instances drawn per population per test set");
  te.flags.add(c_te, "--statistic", "statistic", "mmd | mpp");
  te.flags.add(c_te, "--seed", "seed", "random seed");
  c_te->add_option("--model", te.model, "MMDK model")->required();
  c_te->add_option("--p", te.p, "HWT test pool (EMB1)")->required();
  c_te->add_option("--q", te.q, "MGT test pool (EMB1)")->required();
  add_out(c_te);

  SidArgs si;
  auto* c_si = app.add_subcommand("sid", "single-instance detection scores and AUROC");
  c_si->add_option("--model", si.model, "MMDK model")->required();
  c_si->add_option("--ref", si.ref, "HWT reference set (EMB1)")->required();
  c_si->add_option("--p", si.p, "HWT instances to score")->required();
  c_si->add_option("--q", si.q, "MGT instances to score")->required();
  add_out(c_si);

  DiagArgs dg;
  auto* c_dg = app.add_subcommand("diag", "kernel statistics and MMD variance decomposition");
  dg.flags.add_config(c_dg);
  add_training_flags(dg.flags, c_dg);
  dg.flags.add(c_dg, "--batches", "batches", "resampled batch pairs per checkpoint");
  dg.flags.add(c_dg, "--diag-every", "diag_every", "checkpoint interval in steps (0: start and end only)");
  dg.flags.add(c_dg, "--mu", "mu", "synthetic: mixture centre offset");
  dg.flags.add(c_dg, "--delta", "delta", "synthetic: component variance");
  dg.flags.add(c_dg, "--dim", "dim", "synthetic: dimension");
  dg.flags.add(c_dg, "--q-centers", "q_centers", "synthetic: mixture components");
  dg.flags.add(c_dg, "--train-n", "train_n", "synthetic: training instances per population");
  c_dg->add_option("--model", dg.model, "frozen MMDK model (skips training)");
  c_dg->add_option("--p", dg.p, "HWT training pool (EMB1); omit for synthetic data");
  c_dg->add_option("--q", dg.q, "MGT training pools, comma separated")->delimiter(',');
  c_dg->add_option("--heldout-p", dg.heldout_p, "HWT pool for statistics (default: --p)");
  c_dg->add_option("--heldout-q", dg.heldout_q, "MGT pools for statistics (default: --q)")->delimiter(',');
  c_dg->add_option("--csv", dg.csv, "per-batch statistics CSV");
  add_out(c_dg);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    print_error("usage", e.what(), sub->help());
    return 2;
  }

  try {
    inv.command = app.get_subcommands().front()->get_name();
    if (c_gen->parsed()) run_synth_gen(gen, inv);
    if (c_sp->parsed()) run_synth_power_cmd(sp, inv);
    if (c_tr->parsed()) run_train(tr, inv);
    if (c_te->parsed()) run_test2st(te, inv);
    if (c_si->parsed()) run_sid(si, inv);
    if (c_dg->parsed()) run_diag(dg, inv);
  } catch (const InvalidInput& e) {
    print_error("invalid_input", e.what());
    return 1;
  } catch (const FormatError& e) {
    print_error("format", e.what());
    return 1;
  } catch (const TrainingError& e) {
    print_error("training", e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return 1;
  }
  return 0;
}
