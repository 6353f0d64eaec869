// Experiment runner: binds the library into seeded, reproducible experiments
// that emit plot-ready CSVs. Every run writes a manifest of its resolved
// parameters next to the data and stamps the manifest hash into each CSV.
// Output directories and file paths never enter the manifest (loaded model
// files are recorded by content hash), so re-runs into different directories
// produce byte-identical data files.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "spreadlab/closed_form.hpp"
#include "spreadlab/embedding.hpp"
#include "spreadlab/losses.hpp"
#include "spreadlab/metrics.hpp"
#include "spreadlab/optimize.hpp"
#include "spreadlab/runio.hpp"
#include "spreadlab/toy.hpp"
#include "spreadlab/weights.hpp"

namespace fs = std::filesystem;
using namespace spreadlab;

namespace {

// Binds each CLI option to a config-file key of the same name. Flags given
// on the command line win; unknown config keys fail fast.
class KeyedOptions {
 public:
  explicit KeyedOptions(CLI::App* cmd) : cmd_(cmd) {}

  CLI::Option* add_double(const std::string& key, double& var, const std::string& desc) {
    return bind(key, cmd_->add_option("--" + key, var, desc)->capture_default_str(),
                [&var, key](const std::string& v) { var = config_double(key, v); });
  }

  CLI::Option* add_int(const std::string& key, int& var, const std::string& desc) {
    return bind(key, cmd_->add_option("--" + key, var, desc)->capture_default_str(),
                [&var, key](const std::string& v) { var = static_cast<int>(config_int(key, v)); });
  }

  CLI::Option* add_u64(const std::string& key, std::uint64_t& var, const std::string& desc) {
    return bind(key, cmd_->add_option("--" + key, var, desc)->capture_default_str(),
                [&var, key](const std::string& v) { var = config_u64(key, v); });
  }

  CLI::Option* add_string(const std::string& key, std::string& var, const std::string& desc) {
    return bind(key, cmd_->add_option("--" + key, var, desc)->capture_default_str(),
                [&var](const std::string& v) { var = v; });
  }

  CLI::Option* add_flag(const std::string& key, bool& var, const std::string& desc) {
    return bind(key, cmd_->add_flag("--" + key, var, desc),
                [&var, key](const std::string& v) { var = config_bool(key, v); });
  }

  CLI::Option* add_double_list(const std::string& key, std::vector<double>& var,
                               const std::string& desc) {
    CLI::Option* opt =
        cmd_->add_option("--" + key, var, desc)->delimiter(',')->capture_default_str();
    return bind(key, opt, [&var, key](const std::string& v) { var = config_double_list(key, v); });
  }

  // Applies a config file under the active bindings.
  void merge(const std::string& config_path) const {
    if (config_path.empty()) return;
    for (const auto& [key, value] : read_config_file(config_path)) {
      const Binding* found = nullptr;
      for (const auto& b : bindings_) {
        if (b.key == key) {
          found = &b;
          break;
        }
      }
      if (found == nullptr) {
        throw std::invalid_argument("parse: unknown config key '" + key + "' for subcommand '" +
                                    cmd_->get_name() + "'");
      }
      if (found->opt->count() > 0) continue;
      found->apply(value);
    }
  }

 private:
  struct Binding {
    std::string key;
    CLI::Option* opt;
    std::function<void(const std::string&)> apply;
  };

  CLI::Option* bind(const std::string& key, CLI::Option* opt,
                    std::function<void(const std::string&)> apply) {
    bindings_.push_back({key, opt, std::move(apply)});
    return opt;
  }

  CLI::App* cmd_;
  std::vector<Binding> bindings_;
};

// Options shared by every subcommand.
struct CommonState {
  std::string config_path;
  std::string out_dir = "out";
  bool serial = false;
};

void add_common(KeyedOptions& ko, CommonState& st) {
  ko.add_string("config", st.config_path, "flat key = value config file; flags override it");
  ko.add_string("out", st.out_dir, "output directory (created if missing)");
  ko.add_flag("serial", st.serial, "single-thread execution for byte-exact reproducibility");
}

fs::path prepare_out_dir(const std::string& out_dir) {
  fs::path dir(out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("io: cannot create directory " + dir.string());
  return dir;
}

std::string join_doubles(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ',';
    out += csv_number(values[i]);
  }
  return out;
}

std::string hex16(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

void report_written(const fs::path& path, std::size_t rows) {
  std::cout << "wrote " << path.string() << " (" << rows << " rows)\n";
}

// NaN outside the two-atom window; other failures propagate.
double nan_on_window(const std::function<double()>& f) {
  try {
    return f();
  } catch (const std::domain_error&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

toy::EncoderParams load_encoder_file(const std::string& path, RunManifest& m) {
  std::string text = read_text_file(path);
  m.set("encoder_hash", hex16(fnv1a64(text)));
  std::istringstream in(text);
  return toy::read_encoder(in);
}

toy::ClassAutoencoders load_cae_file(const std::string& path, RunManifest& m) {
  std::string text = read_text_file(path);
  m.set("cae_hash", hex16(fnv1a64(text)));
  std::istringstream in(text);
  return toy::read_autoencoders(in);
}

toy::Autoencoder load_ae_file(const std::string& path, RunManifest& m) {
  std::string text = read_text_file(path);
  m.set("ae_hash", hex16(fnv1a64(text)));
  std::istringstream in(text);
  return toy::read_autoencoder(in);
}

// Per-point embeddings for a whole dataset: composite when an autoencoder is
// supplied (class-routed when cae, shared when gae), plain encoder otherwise.
std::vector<Vec> embed_dataset(const toy::EncoderParams& enc, const toy::ClassAutoencoders* cae,
                               const toy::Autoencoder* gae, const toy::ToyDataset& data) {
  std::vector<Vec> out;
  out.reserve(static_cast<std::size_t>(data.size()));
  for (int i = 0; i < data.size(); ++i) {
    if (cae != nullptr) {
      out.push_back(toy::composite_embedding(enc, *cae, data.inputs[i], data.class_labels[i]));
    } else if (gae != nullptr) {
      out.push_back(toy::composite_embedding(enc, *gae, data.inputs[i]));
    } else {
      out.push_back(toy::encode(enc, data.inputs[i]));
    }
  }
  return out;
}

toy::ToyDataset standard_dataset(int n, std::uint64_t seed) {
  toy::DataSpec spec = toy::standard_spec(seed);
  spec.n = n;
  return toy::gen_subclass_data(spec);
}

// ---------------------------------------------------------------- closed-forms

struct ClosedFormsState {
  CommonState common;
  std::vector<double> alphas{0.7};
  std::vector<double> taus{0.5};
  std::vector<double> dims{2};
};

void run_closed_forms(const ClosedFormsState& st) {
  fs::path dir = prepare_out_dir(st.common.out_dir);
  RunManifest m;
  m.set("subcommand", std::string("closed-forms"));
  m.set("alpha", join_doubles(st.alphas));
  m.set("tau", join_doubles(st.taus));
  m.set("d", join_doubles(st.dims));

  CsvTable table({"alpha", "tau", "d", "theta_star", "spread_star", "loss_mu_theta_star",
                  "loss_collapsed", "loss_uniform"});
  std::size_t rows = 0;
  for (double alpha : st.alphas) {
    for (double tau : st.taus) {
      for (double dd : st.dims) {
        int d = static_cast<int>(dd);
        if (d < 2 || static_cast<double>(d) != dd) {
          throw std::invalid_argument("invalid-dimension: d must be an integer >= 2");
        }
        LossWeights w{alpha, tau};
        validate(w);
        double th = nan_on_window([&] { return theta_star(w); });
        double sp = nan_on_window([&] { return spread_star(w); });
        double lm = nan_on_window([&] { return loss_mu_theta(theta_star(w), w); });
        table.add_numeric_row({alpha, tau, static_cast<double>(d), th, sp, lm,
                               loss_collapsed(w, 2), loss_uniform(w, d)});
        ++rows;
      }
    }
  }
  table.write(dir / "closed_forms.csv", m.hash());
  m.write(dir / "manifest.txt");
  report_written(dir / "closed_forms.csv", rows);
}

void setup_closed_forms(CLI::App& app) {
  auto st = std::make_shared<ClosedFormsState>();
  CLI::App* cmd = app.add_subcommand(
      "closed-forms", "two-atom geometry closed forms over an (alpha, tau, d) grid (K = 2)");
  auto ko = std::make_shared<KeyedOptions>(cmd);
  add_common(*ko, st->common);
  ko->add_double_list("alpha", st->alphas, "loss weight grid");
  ko->add_double_list("tau", st->taus, "temperature grid");
  ko->add_double_list("d", st->dims, "sphere dimension grid (integers)");
  cmd->callback([st, ko] {
    ko->merge(st->common.config_path);
    run_closed_forms(*st);
  });
}

// ---------------------------------------------------------------- sweep-alpha

struct SweepAlphaState {
  CommonState common;
  std::vector<double> alphas{0.5, 0.6, 0.67, 0.69, 0.71, 0.73, 0.75, 0.8, 0.9};
  double tau = 0.5;
  int K = 2;
  int d = 2;
  int n_y = 8;
  int restarts = 5;
  int max_iters = 5000;
  std::uint64_t seed = 0;
};

void run_sweep_alpha(const SweepAlphaState& st) {
  fs::path dir = prepare_out_dir(st.common.out_dir);
  RunManifest m;
  m.set("subcommand", std::string("sweep-alpha"));
  m.set("alpha", join_doubles(st.alphas));
  m.set("tau", st.tau);
  m.set("K", static_cast<std::int64_t>(st.K));
  m.set("d", static_cast<std::int64_t>(st.d));
  m.set("n_y", static_cast<std::int64_t>(st.n_y));
  m.set("restarts", static_cast<std::int64_t>(st.restarts));
  m.set("max_iters", static_cast<std::int64_t>(st.max_iters));
  m.set("seed", st.seed);

  OptProblem tmpl;
  tmpl.K = st.K;
  tmpl.d = st.d;
  tmpl.n_y = st.n_y;
  tmpl.weights.tau = st.tau;
  tmpl.restarts = st.restarts;
  tmpl.max_iters = st.max_iters;
  tmpl.base_seed = st.seed;
  std::vector<SweepCell> cells = alpha_sweep(tmpl, st.alphas, !st.common.serial);

  CsvTable table({"alpha", "tau", "K", "d", "n_y", "seed", "loss", "spread", "loss_collapsed",
                  "loss_uniform", "loss_mu_theta_star"});
  for (const SweepCell& c : cells) {
    if (c.failed) std::cerr << "warning: alpha=" << csv_number(c.alpha) << " " << c.error << "\n";
    table.add_row({csv_number(c.alpha), csv_number(c.tau), std::to_string(c.K),
                   std::to_string(c.d), std::to_string(c.n_y), std::to_string(c.seed),
                   csv_number(c.loss), csv_number(c.spread), csv_number(c.loss_collapsed),
                   csv_number(c.loss_uniform), csv_number(c.loss_mu_theta_star)});
  }
  table.write(dir / "sweep_alpha.csv", m.hash());
  m.write(dir / "manifest.txt");
  report_written(dir / "sweep_alpha.csv", cells.size());
}

void setup_sweep_alpha(CLI::App& app) {
  auto st = std::make_shared<SweepAlphaState>();
  CLI::App* cmd = app.add_subcommand(
      "sweep-alpha", "optimize sphere configurations across loss weights, one CSV row per alpha");
  auto ko = std::make_shared<KeyedOptions>(cmd);
  add_common(*ko, st->common);
  ko->add_double_list("alpha", st->alphas, "loss weights to sweep");
  ko->add_double("tau", st->tau, "temperature");
  ko->add_int("K", st->K, "class count");
  ko->add_int("d", st->d, "sphere dimension");
  ko->add_int("n-y", st->n_y, "points per class");
  ko->add_int("restarts", st->restarts, "optimizer restarts per alpha");
  ko->add_int("max-iters", st->max_iters, "accepted-step cap per restart");
  ko->add_u64("seed", st->seed, "base seed (cell i uses seed + i * restarts)");
  cmd->callback([st, ko] {
    ko->merge(st->common.config_path);
    run_sweep_alpha(*st);
  });
}

// ------------------------------------------------------------------- optimize

struct OptimizeState {
  CommonState common;
  double alpha = 0.7;
  double tau = 0.5;
  int K = 2;
  int d = 2;
  int n_y = 8;
  int restarts = 5;
  int max_iters = 5000;
  std::uint64_t seed = 0;
};

void run_optimize(const OptimizeState& st) {
  fs::path dir = prepare_out_dir(st.common.out_dir);
  RunManifest m;
  m.set("subcommand", std::string("optimize"));
  m.set("alpha", st.alpha);
  m.set("tau", st.tau);
  m.set("K", static_cast<std::int64_t>(st.K));
  m.set("d", static_cast<std::int64_t>(st.d));
  m.set("n_y", static_cast<std::int64_t>(st.n_y));
  m.set("restarts", static_cast<std::int64_t>(st.restarts));
  m.set("max_iters", static_cast<std::int64_t>(st.max_iters));
  m.set("seed", st.seed);

  OptProblem problem;
  problem.K = st.K;
  problem.d = st.d;
  problem.n_y = st.n_y;
  problem.weights = LossWeights{st.alpha, st.tau};
  problem.restarts = st.restarts;
  problem.max_iters = st.max_iters;
  problem.base_seed = st.seed;
  SphereOptResult res = optimize_config(problem);
  double spread = class_spread(res.best_config).mean;

  CsvTable restarts_table({"restart", "seed", "final_loss", "is_best"});
  for (std::size_t r = 0; r < res.per_restart.size(); ++r) {
    const RestartOutcome& o = res.per_restart[r];
    restarts_table.add_row({std::to_string(r), std::to_string(o.seed), csv_number(o.final_loss),
                            o.seed == res.best_seed ? "1" : "0"});
  }
  restarts_table.write(dir / "optimize_restarts.csv", m.hash());

  LossWeights w{st.alpha, st.tau};
  double lm = st.K == 2
                  ? nan_on_window([&] { return loss_mu_theta(theta_star(w), w); })
                  : std::numeric_limits<double>::quiet_NaN();
  CsvTable summary({"alpha", "tau", "K", "d", "n_y", "best_seed", "iterations", "best_loss",
                    "spread", "loss_collapsed", "loss_uniform", "loss_mu_theta_star"});
  summary.add_row({csv_number(st.alpha), csv_number(st.tau), std::to_string(st.K),
                   std::to_string(st.d), std::to_string(st.n_y), std::to_string(res.best_seed),
                   std::to_string(res.iterations), csv_number(res.best_loss), csv_number(spread),
                   csv_number(loss_collapsed(w, st.K)), csv_number(loss_uniform(w, st.d)),
                   csv_number(lm)});
  summary.write(dir / "optimize_summary.csv", m.hash());

  write_text_file(dir / "best_config.txt", config_to_text(res.best_config));
  m.write(dir / "manifest.txt");
  report_written(dir / "optimize_restarts.csv", res.per_restart.size());
  report_written(dir / "optimize_summary.csv", 1);
  std::cout << "best loss " << csv_number(res.best_loss) << ", mean class spread "
            << csv_number(spread) << "\n";
}

void setup_optimize(CLI::App& app) {
  auto st = std::make_shared<OptimizeState>();
  CLI::App* cmd = app.add_subcommand(
      "optimize", "multi-restart sphere optimization for one (alpha, tau, K, d, n_y) cell");
  auto ko = std::make_shared<KeyedOptions>(cmd);
  add_common(*ko, st->common);
  ko->add_double("alpha", st->alpha, "loss weight");
  ko->add_double("tau", st->tau, "temperature");
  ko->add_int("K", st->K, "class count");
  ko->add_int("d", st->d, "sphere dimension");
  ko->add_int("n-y", st->n_y, "points per class");
  ko->add_int("restarts", st->restarts, "optimizer restarts");
  ko->add_int("max-iters", st->max_iters, "accepted-step cap per restart");
  ko->add_u64("seed", st->seed, "base seed (restart r uses seed + r)");
  cmd->callback([st, ko] {
    ko->merge(st->common.config_path);
    run_optimize(*st);
  });
}

// ------------------------------------------------------------------- c-window

struct CWindowState {
  CommonState common;
  std::vector<double> taus{0.1, 0.25, 0.5, 1, 2};
  int d_min = 2;
  int d_max = 128;
};

void run_c_window(const CWindowState& st) {
  if (st.d_min < 2 || st.d_max < st.d_min) {
    throw std::invalid_argument("invalid-dimension: need 2 <= d-min <= d-max");
  }
  fs::path dir = prepare_out_dir(st.common.out_dir);
  RunManifest m;
  m.set("subcommand", std::string("c-window"));
  m.set("tau", join_doubles(st.taus));
  m.set("d_min", static_cast<std::int64_t>(st.d_min));
  m.set("d_max", static_cast<std::int64_t>(st.d_max));

  CsvTable table({"tau", "d", "log_wiener", "c"});
  std::size_t rows = 0;
  for (double tau : st.taus) {
    for (int d = st.d_min; d <= st.d_max; ++d) {
      double lw = log_wiener_constant(d, tau);
      double c = nan_on_window([&] { return c_tau_d_from_log_wiener(tau, lw); });
      table.add_numeric_row({tau, static_cast<double>(d), lw, c});
      ++rows;
    }
  }
  table.write(dir / "c_window.csv", m.hash());
  m.write(dir / "manifest.txt");
  report_written(dir / "c_window.csv", rows);
}

void setup_c_window(CLI::App& app) {
  auto st = std::make_shared<CWindowState>();
  CLI::App* cmd = app.add_subcommand(
      "c-window", "upper window edge c(tau, d) over a (tau, d) grid via sphere quadrature");
  auto ko = std::make_shared<KeyedOptions>(cmd);
  add_common(*ko, st->common);
  ko->add_double_list("tau", st->taus, "temperature grid");
  ko->add_int("d-min", st->d_min, "smallest sphere dimension");
  ko->add_int("d-max", st->d_max, "largest sphere dimension");
  cmd->callback([st, ko] {
    ko->merge(st->common.config_path);
    run_c_window(*st);
  });
}

// ------------------------------------------------------------------- k3-check

struct K3CheckState {
  CommonState common;
  int thetas = 20;
  std::vector<double> alphas{0.5, 0.7};
  std::vector<double> taus{0.5};
  int n_per_atom = 3;
};

void run_k3_check(const K3CheckState& st) {
  if (st.thetas < 1) throw std::invalid_argument("domain: thetas must be >= 1");
  fs::path dir = prepare_out_dir(st.common.out_dir);
  RunManifest m;
  m.set("subcommand", std::string("k3-check"));
  m.set("thetas", static_cast<std::int64_t>(st.thetas));
  m.set("alpha", join_doubles(st.alphas));
  m.set("tau", join_doubles(st.taus));
  m.set("n_per_atom", static_cast<std::int64_t>(st.n_per_atom));

  const double half_pi = std::acos(-1.0) / 2.0;
  CsvTable table({"theta", "alpha", "tau", "closed_form", "empirical", "abs_gap"});
  std::size_t rows = 0;
  for (int i = 1; i <= st.thetas; ++i) {
    double theta = half_pi * static_cast<double>(i) / static_cast<double>(st.thetas);
    EmbeddingConfig config = make_mu_theta(3, 3, theta, st.n_per_atom);
    for (double alpha : st.alphas) {
      for (double tau : st.taus) {
        LossWeights w{alpha, tau};
        validate(w);
        double closed = k3_loss_mu_theta(theta, w);
        double emp = asymptotic_empirical(config, w);
        table.add_numeric_row({theta, alpha, tau, closed, emp, std::abs(closed - emp)});
        ++rows;
      }
    }
  }
  table.write(dir / "k3_check.csv", m.hash());
  m.write(dir / "manifest.txt");
  report_written(dir / "k3_check.csv", rows);
}

void setup_k3_check(CLI::App& app) {
  auto st = std::make_shared<K3CheckState>();
  CLI::App* cmd = app.add_subcommand(
      "k3-check", "three-class two-atom closed form against the empirical asymptotic loss");
  auto ko = std::make_shared<KeyedOptions>(cmd);
  add_common(*ko, st->common);
  ko->add_int("thetas", st->thetas, "theta grid size over (0, pi/2]");
  ko->add_double_list("alpha", st->alphas, "loss weight grid");
  ko->add_double_list("tau", st->taus, "temperature grid");
  ko->add_int("n-per-atom", st->n_per_atom, "points per atom in the empirical configuration");
  cmd->callback([st, ko] {
    ko->merge(st->common.config_path);
    run_k3_check(*st);
  });
}

// ------------------------------------------------------------------ perm-test

struct PermTestState {
  CommonState common;
  int configs = 5;
  int trials = 50;
  int K = 3;
  int d = 3;
  int n_y = 4;
  double alpha = 0.7;
  double tau = 0.5;
  std::uint64_t seed = 0;
};

AugmentationMap half_pair_map(const EmbeddingConfig& config) {
  AugmentationMap map;
  for (const auto& cls : indices_by_class(config)) {
    if (cls.size() % 2 != 0) {
      throw std::invalid_argument("balance: augmentation pairing needs an even class size");
    }
    std::size_t half = cls.size() / 2;
    for (std::size_t j = 0; j < half; ++j) map.pairs.emplace_back(cls[j], cls[half + j]);
  }
  return map;
}

void run_perm_test(const PermTestState& st) {
  if (st.configs < 1) throw std::invalid_argument("domain: configs must be >= 1");
  fs::path dir = prepare_out_dir(st.common.out_dir);
  RunManifest m;
  m.set("subcommand", std::string("perm-test"));
  m.set("configs", static_cast<std::int64_t>(st.configs));
  m.set("trials", static_cast<std::int64_t>(st.trials));
  m.set("K", static_cast<std::int64_t>(st.K));
  m.set("d", static_cast<std::int64_t>(st.d));
  m.set("n_y", static_cast<std::int64_t>(st.n_y));
  m.set("alpha", st.alpha);
  m.set("tau", st.tau);
  m.set("seed", st.seed);

  LossWeights w{st.alpha, st.tau};
  validate(w);
  CsvTable table({"config", "config_seed", "trials", "spread_gap", "asymptotic_gap"});
  for (int c = 0; c < st.configs; ++c) {
    std::uint64_t config_seed = st.seed + static_cast<std::uint64_t>(c);
    EmbeddingConfig config = make_uniform(st.K, st.d, st.n_y, config_seed);
    AugmentationMap map = half_pair_map(config);
    PermutationGap gap =
        permutation_gap(config, map, w, st.trials, st.seed + 10007 * static_cast<std::uint64_t>(c));
    table.add_row({std::to_string(c), std::to_string(config_seed), std::to_string(st.trials),
                   csv_number(gap.spread_gap), csv_number(gap.asymptotic_gap)});
  }
  table.write(dir / "perm_test.csv", m.hash());
  m.write(dir / "manifest.txt");
  report_written(dir / "perm_test.csv", static_cast<std::size_t>(st.configs));
}

void setup_perm_test(CLI::App& app) {
  auto st = std::make_shared<PermTestState>();
  CLI::App* cmd = app.add_subcommand(
      "perm-test", "loss invariance under class-fixing permutations of random configurations");
  auto ko = std::make_shared<KeyedOptions>(cmd);
  add_common(*ko, st->common);
  ko->add_int("configs", st->configs, "number of random configurations");
  ko->add_int("trials", st->trials, "permutations per configuration");
  ko->add_int("K", st->K, "class count");
  ko->add_int("d", st->d, "sphere dimension");
  ko->add_int("n-y", st->n_y, "points per class (even; half are augmentations)");
  ko->add_double("alpha", st->alpha, "loss weight");
  ko->add_double("tau", st->tau, "temperature");
  ko->add_u64("seed", st->seed, "base seed for configurations and permutations");
  cmd->callback([st, ko] {
    ko->merge(st->common.config_path);
    run_perm_test(*st);
  });
}

// ------------------------------------------------------------------ toy-train

struct ToyTrainState {
  CommonState common;
  std::string mode = "spread";
  double alpha = 0.7;
  double tau = 0.5;
  double epsilon = 0.15;
  int epochs = 80;
  int batch = 64;
  double lr = 0.05;
  int hidden = 32;
  int output_dim = 8;
  int ae_bottleneck = 1;
  int ae_hidden = 16;
  int ae_epochs = 300;
  int ae_batch = 50;
  double ae_lr = 0.02;
  int n = 2000;
  std::uint64_t seed = 100;
};

toy::TrainMode parse_mode(const std::string& mode) {
  if (mode == "supcon") return toy::TrainMode::supcon;
  if (mode == "spread") return toy::TrainMode::spread;
  throw std::invalid_argument("parse: mode must be 'supcon' or 'spread', got '" + mode + "'");
}

void run_toy_train(const ToyTrainState& st) {
  toy::TrainMode mode = parse_mode(st.mode);
  fs::path dir = prepare_out_dir(st.common.out_dir);
  RunManifest m;
  m.set("subcommand", std::string("toy-train"));
  m.set("mode", st.mode);
  m.set("alpha", st.alpha);
  m.set("tau", st.tau);
  m.set("epsilon", st.epsilon);
  m.set("epochs", static_cast<std::int64_t>(st.epochs));
  m.set("batch", static_cast<std::int64_t>(st.batch));
  m.set("lr", st.lr);
  m.set("hidden", static_cast<std::int64_t>(st.hidden));
  m.set("output_dim", static_cast<std::int64_t>(st.output_dim));
  m.set("ae_bottleneck", static_cast<std::int64_t>(st.ae_bottleneck));
  m.set("ae_hidden", static_cast<std::int64_t>(st.ae_hidden));
  m.set("ae_epochs", static_cast<std::int64_t>(st.ae_epochs));
  m.set("ae_batch", static_cast<std::int64_t>(st.ae_batch));
  m.set("ae_lr", st.ae_lr);
  m.set("n", static_cast<std::int64_t>(st.n));
  m.set("seed", st.seed);

  toy::ToyDataset data = standard_dataset(st.n, st.seed);

  toy::TrainOptions topt;
  topt.mode = mode;
  topt.weights = LossWeights{st.alpha, st.tau};
  topt.epochs = st.epochs;
  topt.batch_size = st.batch;
  topt.lr = st.lr;
  topt.epsilon = st.epsilon;
  topt.hidden = st.hidden;
  topt.output_dim = st.output_dim;
  topt.seed = st.seed;
  toy::TrainedEncoder enc = toy::train_encoder(data, topt);

  toy::AeOptions aeo;
  aeo.bottleneck = st.ae_bottleneck;
  aeo.hidden = st.ae_hidden;
  aeo.epochs = st.ae_epochs;
  aeo.batch_size = st.ae_batch;
  aeo.lr = st.ae_lr;
  aeo.seed = st.seed;
  toy::ClassAutoencoders cae = toy::train_class_autoencoder(data, aeo);
  toy::GenericAutoencoder gae = toy::train_generic_autoencoder(data, aeo);

  std::ostringstream enc_text;
  toy::write_encoder(enc_text, enc.params);
  write_text_file(dir / "encoder.txt", enc_text.str());
  std::ostringstream cae_text;
  toy::write_autoencoders(cae_text, cae);
  write_text_file(dir / "class_ae.txt", cae_text.str());
  std::ostringstream gae_text;
  toy::write_autoencoder(gae_text, gae.ae);
  write_text_file(dir / "generic_ae.txt", gae_text.str());

  CsvTable history({"epoch", "loss"});
  for (std::size_t e = 0; e < enc.history.size(); ++e) {
    history.add_row({std::to_string(e), csv_number(enc.history[e])});
  }
  history.write(dir / "history.csv", m.hash());

  CsvTable ae_losses({"model", "class", "loss"});
  for (std::size_t y = 0; y < cae.final_loss.size(); ++y) {
    ae_losses.add_row({"class", std::to_string(y), csv_number(cae.final_loss[y])});
  }
  ae_losses.add_row({"generic", "-1", csv_number(gae.final_loss)});
  ae_losses.write(dir / "ae_losses.csv", m.hash());

  m.write(dir / "manifest.txt");
  report_written(dir / "history.csv", enc.history.size());
  report_written(dir / "ae_losses.csv", cae.final_loss.size() + 1);
  std::cout << "final encoder loss " << csv_number(enc.history.empty() ? 0.0 : enc.history.back())
            << ", generic reconstruction " << csv_number(gae.final_loss) << "\n";
}

void setup_toy_train(CLI::App& app) {
  auto st = std::make_shared<ToyTrainState>();
  CLI::App* cmd = app.add_subcommand(
      "toy-train", "train the toy encoder and autoencoders, writing parameter files and history");
  auto ko = std::make_shared<KeyedOptions>(cmd);
  add_common(*ko, st->common);
  ko->add_string("mode", st->mode, "encoder loss: 'supcon' or 'spread'");
  ko->add_double("alpha", st->alpha, "loss weight (spread mode)");
  ko->add_double("tau", st->tau, "temperature");
  ko->add_double("epsilon", st->epsilon, "augmentation radius (spread mode; supcon ignores it)");
  ko->add_int("epochs", st->epochs, "encoder epochs");
  ko->add_int("batch", st->batch, "encoder batch size (split evenly across classes)");
  ko->add_double("lr", st->lr, "encoder learning rate");
  ko->add_int("hidden", st->hidden, "encoder hidden width");
  ko->add_int("output-dim", st->output_dim, "encoder output dimension");
  ko->add_int("ae-bottleneck", st->ae_bottleneck, "autoencoder bottleneck dimension");
  ko->add_int("ae-hidden", st->ae_hidden, "autoencoder hidden width");
  ko->add_int("ae-epochs", st->ae_epochs, "autoencoder epochs");
  ko->add_int("ae-batch", st->ae_batch, "autoencoder batch size");
  ko->add_double("ae-lr", st->ae_lr, "autoencoder learning rate");
  ko->add_int("n", st->n, "dataset size");
  ko->add_u64("seed", st->seed, "dataset, initialization, and shuffling seed");
  cmd->callback([st, ko] {
    ko->merge(st->common.config_path);
    run_toy_train(*st);
  });
}

// ------------------------------------------------------------------- c2f-eval

struct C2fEvalState {
  CommonState common;
  std::string encoder_path;
  std::string cae_path;
  std::string gae_path;
  double gamma = 1.1;
  int n = 2000;
  std::uint64_t seed = 100;
};

void run_c2f_eval(const C2fEvalState& st) {
  if (st.encoder_path.empty()) {
    throw std::invalid_argument("parse: --encoder (or config key 'encoder') is required");
  }
  if (!st.cae_path.empty() && !st.gae_path.empty()) {
    throw std::invalid_argument("parse: give at most one of 'cae' and 'generic-ae'");
  }
  fs::path dir = prepare_out_dir(st.common.out_dir);
  RunManifest m;
  m.set("subcommand", std::string("c2f-eval"));
  m.set("gamma", st.gamma);
  m.set("n", static_cast<std::int64_t>(st.n));
  m.set("seed", st.seed);

  toy::EncoderParams enc = load_encoder_file(st.encoder_path, m);
  toy::ClassAutoencoders cae;
  toy::Autoencoder gae;
  bool has_cae = !st.cae_path.empty();
  bool has_gae = !st.gae_path.empty();
  if (has_cae) cae = load_cae_file(st.cae_path, m);
  if (has_gae) gae = load_ae_file(st.gae_path, m);
  m.set("embedding", std::string(has_cae   ? "composite_class"
                                 : has_gae ? "composite_generic"
                                           : "encoder_only"));

  toy::ToyDataset data = standard_dataset(st.n, st.seed);
  std::vector<Vec> emb =
      embed_dataset(enc, has_cae ? &cae : nullptr, has_gae ? &gae : nullptr, data);
  TransferReport rep = toy::transfer_eval(emb, data, st.gamma);

  // The clustering ratio concerns the contrastive representation itself, so
  // it is always measured on the plain encoder embedding.
  EmbeddingConfig enc_config;
  enc_config.dim = enc.output_dim;
  enc_config.num_classes = data.spec.num_classes;
  enc_config.points = embed_dataset(enc, nullptr, nullptr, data);
  enc_config.class_labels = data.class_labels;
  enc_config.subclass_labels = data.subclass_labels;
  RatioReport ratio;
  bool ratio_defined = true;
  try {
    ratio = transfer_ratio(enc_config);
  } catch (const std::exception&) {
    ratio_defined = false;
  }
  auto ratio_for = [&](int subclass) {
    if (ratio_defined) {
      for (std::size_t i = 0; i < ratio.subclasses.size(); ++i) {
        if (ratio.subclasses[i] == subclass) return ratio.ratio[i];
      }
    }
    return std::numeric_limits<double>::quiet_NaN();
  };

  CsvTable table({"subclass", "train_count", "margin_error", "encoder_ratio"});
  for (std::size_t i = 0; i < rep.subclasses.size(); ++i) {
    table.add_row({std::to_string(rep.subclasses[i]), std::to_string(rep.counts[i]),
                   csv_number(rep.margin_error[i]), csv_number(ratio_for(rep.subclasses[i]))});
  }
  table.write(dir / "c2f.csv", m.hash());

  CsvTable summary({"gamma", "accuracy", "mean_margin_error", "encoder_ratio_mean"});
  summary.add_numeric_row({rep.gamma, rep.accuracy, rep.mean_margin_error,
                           ratio_defined ? ratio.mean
                                         : std::numeric_limits<double>::quiet_NaN()});
  summary.write(dir / "c2f_summary.csv", m.hash());

  m.write(dir / "manifest.txt");
  report_written(dir / "c2f.csv", rep.subclasses.size());
  report_written(dir / "c2f_summary.csv", 1);
  std::cout << "subclass accuracy " << csv_number(rep.accuracy) << ", mean margin error "
            << csv_number(rep.mean_margin_error) << "\n";
}

void setup_c2f_eval(CLI::App& app) {
  auto st = std::make_shared<C2fEvalState>();
  CLI::App* cmd = app.add_subcommand(
      "c2f-eval", "coarse-to-fine transfer scores for a trained encoder on the parity split");
  auto ko = std::make_shared<KeyedOptions>(cmd);
  add_common(*ko, st->common);
  ko->add_string("encoder", st->encoder_path, "encoder parameter file from toy-train");
  ko->add_string("cae", st->cae_path, "class autoencoder file; adds the class-routed bottleneck");
  ko->add_string("generic-ae", st->gae_path, "generic autoencoder file; adds a shared bottleneck");
  ko->add_double("gamma", st->gamma, "margin factor");
  ko->add_int("n", st->n, "dataset size (must match the training run)");
  ko->add_u64("seed", st->seed, "dataset seed (must match the training run)");
  cmd->callback([st, ko] {
    ko->merge(st->common.config_path);
    run_c2f_eval(*st);
  });
}

// ------------------------------------------------------------------ lipschitz

struct LipschitzState {
  CommonState common;
  std::string encoder_path;
  std::string ae_path;
  double epsilon = 0.15;
  int pairs = 2000;
  int per_anchor = 10;
  double cutoff = 1e-6;
  int n = 2000;
  std::uint64_t seed = 100;
};

void run_lipschitz(const LipschitzState& st) {
  if (st.encoder_path.empty()) {
    throw std::invalid_argument("parse: --encoder (or config key 'encoder') is required");
  }
  if (!(st.epsilon > 0.0)) throw std::invalid_argument("domain: epsilon must be > 0");
  fs::path dir = prepare_out_dir(st.common.out_dir);
  RunManifest m;
  m.set("subcommand", std::string("lipschitz"));
  m.set("epsilon", st.epsilon);
  m.set("pairs", static_cast<std::int64_t>(st.pairs));
  m.set("per_anchor", static_cast<std::int64_t>(st.per_anchor));
  m.set("cutoff", st.cutoff);
  m.set("n", static_cast<std::int64_t>(st.n));
  m.set("seed", st.seed);

  toy::EncoderParams enc = load_encoder_file(st.encoder_path, m);
  toy::Autoencoder ae;
  bool has_ae = !st.ae_path.empty();
  if (has_ae) ae = load_ae_file(st.ae_path, m);

  toy::ToyDataset data = standard_dataset(st.n, st.seed);
  auto mode_name = [](LipschitzMode mode) {
    switch (mode) {
      case LipschitzMode::encoder: return "encoder";
      case LipschitzMode::decoder_reverse: return "decoder_reverse";
      case LipschitzMode::augmentation: return "augmentation";
    }
    return "encoder";
  };

  std::vector<LipschitzEstimate> estimates;
  CsvTable scatter({"mode", "input_distance", "output_distance"});
  std::size_t scatter_rows = 0;
  auto record = [&](LipschitzMode mode, const std::vector<std::pair<double, double>>& pairs) {
    estimates.push_back(estimate_lipschitz(mode, pairs, st.cutoff));
    for (const auto& [din, dout] : pairs) {
      scatter.add_row({mode_name(mode), csv_number(din), csv_number(dout)});
      ++scatter_rows;
    }
  };
  record(LipschitzMode::encoder, toy::encoder_pairs(enc, data.inputs, st.pairs, st.seed));
  record(LipschitzMode::augmentation,
         toy::augmentation_pairs(enc, data.inputs, st.epsilon, st.per_anchor, st.seed + 1));
  if (has_ae) {
    record(LipschitzMode::decoder_reverse,
           toy::decoder_pairs(ae, data.inputs, st.pairs, st.seed + 2));
  }

  CsvTable table({"mode", "constant", "pairs_kept", "cutoff"});
  for (const LipschitzEstimate& e : estimates) {
    table.add_row({mode_name(e.mode), csv_number(e.constant), std::to_string(e.pair_count),
                   csv_number(e.cutoff)});
  }
  table.write(dir / "lipschitz.csv", m.hash());
  scatter.write(dir / "lipschitz_pairs.csv", m.hash());
  m.write(dir / "manifest.txt");
  report_written(dir / "lipschitz.csv", estimates.size());
  report_written(dir / "lipschitz_pairs.csv", scatter_rows);
}

void setup_lipschitz(CLI::App& app) {
  auto st = std::make_shared<LipschitzState>();
  CLI::App* cmd = app.add_subcommand(
      "lipschitz", "tangent-slope constants: encoder, augmentation, and reverse decoder");
  auto ko = std::make_shared<KeyedOptions>(cmd);
  add_common(*ko, st->common);
  ko->add_string("encoder", st->encoder_path, "encoder parameter file from toy-train");
  ko->add_string("ae", st->ae_path, "generic autoencoder file; enables the reverse-decoder mode");
  ko->add_double("epsilon", st->epsilon, "augmentation radius for the augmentation mode");
  ko->add_int("pairs", st->pairs, "sampled pairs for the encoder and decoder modes");
  ko->add_int("per-anchor", st->per_anchor, "jitters per anchor for the augmentation mode");
  ko->add_double("cutoff", st->cutoff, "input distances at or below this are discarded");
  ko->add_int("n", st->n, "dataset size (must match the training run)");
  ko->add_u64("seed", st->seed, "dataset and sampling seed");
  cmd->callback([st, ko] {
    ko->merge(st->common.config_path);
    run_lipschitz(*st);
  });
}

// ----------------------------------------------------------- recover-subclass

struct RecoverState {
  CommonState common;
  std::string encoder_path;
  std::string cae_path;
  int k = 2;
  std::uint64_t kmeans_seed = 0;
  int n = 2000;
  std::uint64_t seed = 100;
};

void run_recover(const RecoverState& st) {
  if (st.encoder_path.empty()) {
    throw std::invalid_argument("parse: --encoder (or config key 'encoder') is required");
  }
  fs::path dir = prepare_out_dir(st.common.out_dir);
  RunManifest m;
  m.set("subcommand", std::string("recover-subclass"));
  m.set("k", static_cast<std::int64_t>(st.k));
  m.set("kmeans_seed", st.kmeans_seed);
  m.set("n", static_cast<std::int64_t>(st.n));
  m.set("seed", st.seed);

  toy::EncoderParams enc = load_encoder_file(st.encoder_path, m);
  toy::ClassAutoencoders cae;
  bool has_cae = !st.cae_path.empty();
  if (has_cae) cae = load_cae_file(st.cae_path, m);
  m.set("embedding", std::string(has_cae ? "composite_class" : "encoder_only"));

  toy::ToyDataset data = standard_dataset(st.n, st.seed);
  std::vector<Vec> emb = embed_dataset(enc, has_cae ? &cae : nullptr, nullptr, data);
  RecoveryReport rep =
      subclass_recovery(emb, data.class_labels, data.subclass_labels, st.k, st.kmeans_seed);

  CsvTable table({"class", "f1"});
  for (std::size_t i = 0; i < rep.classes.size(); ++i) {
    table.add_row({std::to_string(rep.classes[i]), csv_number(rep.f1_per_class[i])});
  }
  table.add_row({"-1", csv_number(rep.overall)});
  table.write(dir / "recover.csv", m.hash());
  m.write(dir / "manifest.txt");
  report_written(dir / "recover.csv", rep.classes.size() + 1);
  std::cout << "overall matched F1 " << csv_number(rep.overall) << "\n";
}

void setup_recover(CLI::App& app) {
  auto st = std::make_shared<RecoverState>();
  CLI::App* cmd = app.add_subcommand(
      "recover-subclass", "within-class k-means recovery of the hidden subclasses, matched F1");
  auto ko = std::make_shared<KeyedOptions>(cmd);
  add_common(*ko, st->common);
  ko->add_string("encoder", st->encoder_path, "encoder parameter file from toy-train");
  ko->add_string("cae", st->cae_path, "class autoencoder file; adds the class-routed bottleneck");
  ko->add_int("k", st->k, "clusters per class");
  ko->add_u64("kmeans-seed", st->kmeans_seed, "clustering seed");
  ko->add_int("n", st->n, "dataset size (must match the training run)");
  ko->add_u64("seed", st->seed, "dataset seed (must match the training run)");
  cmd->callback([st, ko] {
    ko->merge(st->common.config_path);
    run_recover(*st);
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "spreadlab: spread-loss geometry laboratory emitting deterministic, manifest-stamped CSVs"};
  app.require_subcommand(1);
  setup_closed_forms(app);
  setup_sweep_alpha(app);
  setup_optimize(app);
  setup_c_window(app);
  setup_k3_check(app);
  setup_perm_test(app);
  setup_toy_train(app);
  setup_c2f_eval(app);
  setup_lipschitz(app);
  setup_recover(app);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "ERROR: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
