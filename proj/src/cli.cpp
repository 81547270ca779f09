#include "net3/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "net3/checkpoint.hpp"
#include "net3/dataset.hpp"
#include "net3/error.hpp"
#include "net3/experiment.hpp"
#include "net3/trnn.hpp"

namespace net3::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

Shape parse_list(const std::string& text, bool positive) {
  Shape dims;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size() || (positive && v == 0)) {
      throw UsageError("list '" + text + "' must hold " + (positive ? "positive" : "nonnegative") +
                       " integers separated by commas");
    }
    dims.push_back(static_cast<std::size_t>(v));
  }
  if (dims.empty()) throw UsageError("empty list");
  return dims;
}

Shape parse_dims(const std::string& text) { return parse_list(text, true); }

std::string join(const Shape& dims) {
  std::string s;
  for (std::size_t i = 0; i < dims.size(); ++i) s += (i ? "," : "") + std::to_string(dims[i]);
  return s;
}

/// String-typed mirror of RunConfig so enums go through the library parsers.
struct RunFlags {
  RunConfig config;
  std::string task = "future";
  std::string variant = "net3";
  std::string activation = "relu";
  std::string cell_output = "sigmoid";

  void add_to(CLI::App& app, bool with_task) {
    if (with_task) app.add_option("--task", task, "future | recovery")->capture_default_str();
    app.add_option("--variant", variant, "net3 | itgcn | gcn-flat | mlstm | lstm")->capture_default_str();
    app.add_option("--hidden", config.hidden, "graph-layer channels d")->capture_default_str();
    app.add_option("--state", config.state, "recurrent channels d'")->capture_default_str();
    app.add_option("--rho", config.rho, "interaction degree")->capture_default_str();
    app.add_option("--activation", activation, "relu | tanh | identity")->capture_default_str();
    app.add_option("--cell-output", cell_output, "sigmoid | tanh")->capture_default_str();
    app.add_option("--omega", config.omega, "history window length")->capture_default_str();
    app.add_option("--tau", config.tau, "prediction steps per window (training supports 1)")->capture_default_str();
    app.add_option("--stride", config.stride, "window stride")->capture_default_str();
    app.add_option("--epochs", config.epochs, "training epochs")->capture_default_str();
    app.add_option("--batch-size", config.batch_size, "windows per step, 0 = automatic")->capture_default_str();
    app.add_option("--lr", config.lr, "Adam learning rate")->capture_default_str();
    app.add_option("--mu1", config.mu1, "Tucker reconstruction weight")->capture_default_str();
    app.add_option("--mu2", config.mu2, "orthonormality weight")->capture_default_str();
    app.add_option("--clip", config.clip, "gradient-norm clip, 0 = off")->capture_default_str();
    app.add_option("--test-fraction", config.test_fraction,
                   "test share (default 0.1 for future, 0.2 for recovery)");
    app.add_option("--seed", config.seed, "random seed")->capture_default_str();
    app.add_flag("--validate-every-epoch", config.validate_every_epoch, "log test RMSE after each epoch");
  }

  RunConfig resolve(const CLI::App& app, std::optional<Task> forced = {}) {
    RunConfig c = config;
    c.task = forced ? *forced : parse_task(task);
    c.variant = parse_variant(variant);
    c.activation = parse_activation(activation);
    c.cell_output = parse_cell_output(cell_output);
    if (app.count("--test-fraction") == 0) c.test_fraction = c.task == Task::future ? 0.1 : 0.2;
    return c;
  }
};

json evaluation_json(const Evaluation& ev) {
  return json{{"rmse", ev.rmse},
              {"rmse_raw", ev.rmse_raw},
              {"baseline", ev.baseline},
              {"baseline_rmse", ev.baseline_rmse},
              {"baseline_rmse_raw", ev.baseline_rmse_raw},
              {"test_entries", ev.count}};
}

std::string index_tuple(std::size_t series, const Shape& dims) {
  std::vector<std::size_t> idx(dims.size());
  for (std::size_t m = dims.size(); m-- > 0;) {
    idx[m] = series % dims[m];
    series /= dims[m];
  }
  std::string s;
  for (std::size_t m = 0; m < idx.size(); ++m) s += (m ? "," : "") + std::to_string(idx[m]);
  return s;
}

void write_entries_csv(const fs::path& path, const std::vector<EntryPrediction>& entries, const Shape& dims) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t m = 0; m < dims.size(); ++m) out << "i" << m << ',';
  out << "t,truth,prediction\n";
  for (const auto& e : entries) {
    out << index_tuple(e.series, dims) << ',' << e.t << ',';
    if (std::isfinite(e.truth)) out << e.truth;
    out << ',' << e.prediction << '\n';
  }
}

fs::path output_dir(const std::string& out) {
  if (out.empty()) throw UsageError("--out is required");
  fs::create_directories(out);
  return out;
}

void emit(std::ostream& out, const json& j) { out << j.dump() << '\n'; }

struct Trained {
  PreparedTask prep;
  TrainOutcome outcome;
  RunConfig config;
};

Trained train_and_save(const std::string& data, const fs::path& dir, const RunConfig& config) {
  const NetTensorTimeSeries ds = load_dataset(data);
  Trained t{prepare_task(ds, config), {}, config};
  std::ofstream log(dir / "train_log.jsonl", std::ios::trunc);
  if (!log) throw ValidationError("cannot write " + (dir / "train_log.jsonl").string());
  t.outcome = train_task(t.prep, config, [&log](const EpochRecord& r) {
    json j{{"epoch", r.epoch}, {"train_loss", r.train_loss}};
    if (r.val_rmse) j["val_rmse"] = *r.val_rmse;
    log << j.dump() << '\n';
  });
  write_checkpoint(dir / "model.ckpt", make_checkpoint(t.outcome, t.prep, config));
  return t;
}

struct Loaded {
  PreparedTask prep;
  Net3Params params;
  RunConfig config;
  GraphContext ctx;
};

Loaded load_model(const std::string& data, const std::string& model) {
  const Checkpoint ckpt = read_checkpoint(model);
  const RunConfig config = RunConfig::from_meta(ckpt);
  const NetTensorTimeSeries ds = load_dataset(data);
  Loaded l{prepare_task(ds, config, ckpt.stats), params_from_checkpoint(ckpt, ds, config), config, {}};
  l.ctx = make_context(ds.networks, config.variant);
  return l;
}

json params_json(const Shape& dims, double rho, std::size_t d, std::size_t d_out) {
  const auto tlstm = count_params_tlstm(dims, rho, d, d_out);
  const auto mlstm = count_params_mlstm(dims, d, d_out);
  const double reduction = 100.0 * (1.0 - static_cast<double>(tlstm) / static_cast<double>(mlstm));
  return json{{"dims", dims},
              {"rho", rho},
              {"d", d},
              {"d_prime", d_out},
              {"core_dims", core_dims(rho, dims)},
              {"tlstm_params", tlstm},
              {"mlstm_params", mlstm},
              {"reduction_percent", std::round(reduction * 100.0) / 100.0},
              {"rho_max", rho_upper_bound(dims, d, d_out)}};
}

/// Splices `--config FILE` entries (flat key=value lines, '#' comments) into
/// the argument list right after the subcommand, skipping keys already given
/// as flags so the command line wins.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> rest;
  std::string file;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw UsageError("--config needs a file");
      file = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      file = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (file.empty()) return rest;
  std::ifstream in(file);
  if (!in) throw UsageError("cannot read config file " + file);

  auto given = [&rest](const std::string& key) {
    const std::string flag = "--" + key;
    for (const auto& a : rest)
      if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    return false;
  };
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  std::vector<std::string> extra;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError(file + ":" + std::to_string(n) + ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    std::replace(key.begin(), key.end(), '_', '-');
    if (key.empty()) throw UsageError(file + ":" + std::to_string(n) + ": empty key");
    if (!given(key)) extra.push_back("--" + key + "=" + trim(line.substr(eq + 1)));
  }
  if (rest.size() < 2) return rest;
  rest.insert(rest.begin() + 2, extra.begin(), extra.end());
  return rest;
}

void warn_rho(std::ostream& err, double rho) {
  if (rho > 1.0) err << "warning: rho " << rho << " > 1; core dimensions are capped at the node dimensions\n";
}

std::string with_commas(std::uint64_t v) {
  std::string s = std::to_string(v);
  for (int i = static_cast<int>(s.size()) - 3; i > 0; i -= 3) s.insert(static_cast<std::size_t>(i), ",");
  return s;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Networked tensor time series: training, forecasting and recovery", "net3"};
  app.require_subcommand(1);
  std::string config_file;
  app.add_option("--config", config_file, "key=value file of flags for the subcommand; command-line flags take precedence");

  // synth
  auto* synth = app.add_subcommand("synth", "write a synthetic dataset from a latent linear teacher");
  std::string synth_out, synth_dims = "6,4", synth_core = "3,2", synth_networks;
  SynthConfig sc;
  std::uint64_t synth_seed = 0;
  synth->add_option("--out", synth_out, "dataset directory")->required();
  synth->add_option("--dims", synth_dims, "node dimensions, comma separated")->capture_default_str();
  synth->add_option("--core", synth_core, "latent core dimensions")->capture_default_str();
  synth->add_option("--steps", sc.steps, "time steps T")->capture_default_str();
  synth->add_option("--noise", sc.noise, "observation noise std")->capture_default_str();
  synth->add_option("--process-noise", sc.process_noise, "latent innovation std")->capture_default_str();
  synth->add_option("--spectral-radius", sc.spectral_radius, "latent transition radius, < 1")->capture_default_str();
  synth->add_option("--network-modes", synth_networks, "modes given a network (default all)");
  synth->add_option("--seed", synth_seed, "random seed")->capture_default_str();

  // train
  auto* train = app.add_subcommand("train", "train a model and write model.ckpt and train_log.jsonl");
  std::string data, out_dir, model;
  RunFlags train_flags;
  train->add_option("--data", data, "dataset directory")->required();
  train->add_option("--out", out_dir, "output directory")->required();
  train_flags.add_to(*train, true);

  // predict
  auto* predict = app.add_subcommand("predict", "roll a trained model forward from the future split");
  std::size_t horizon = 0;
  predict->add_option("--data", data, "dataset directory")->required();
  predict->add_option("--model", model, "checkpoint file")->required();
  predict->add_option("--out", out_dir, "output directory")->required();
  predict->add_option("--horizon", horizon, "steps to predict (default: length of the test split)");

  // recover
  auto* recover = app.add_subcommand("recover", "fill held-out entries; trains first unless --model is given");
  RunFlags recover_flags;
  recover->add_option("--data", data, "dataset directory")->required();
  recover->add_option("--out", out_dir, "output directory")->required();
  recover->add_option("--model", model, "checkpoint trained for the recovery task");
  recover_flags.add_to(*recover, false);

  // eval
  auto* eval = app.add_subcommand("eval", "score a checkpoint on its test split against the baseline");
  eval->add_option("--data", data, "dataset directory")->required();
  eval->add_option("--model", model, "checkpoint file")->required();
  eval->add_option("--out", out_dir, "output directory")->required();

  // params / rho-bound
  auto* params = app.add_subcommand("params", "parameter counts of the tensor LSTM and per-series LSTMs");
  std::string dims_text;
  double rho = 0.0;
  std::size_t d = 8, d_out = 8;
  bool as_json = false;
  params->add_option("dims", dims_text, "node dimensions, comma separated")->required();
  params->add_option("rho", rho, "interaction degree")->required();
  params->add_option("d", d, "input channels")->required();
  params->add_option("d_prime", d_out, "state channels")->required();
  params->add_flag("--json", as_json, "print one JSON line instead of a table");

  auto* bound = app.add_subcommand("rho-bound", "largest rho for which the tensor LSTM is smaller");
  bound->add_option("dims", dims_text, "node dimensions, comma separated")->required();
  bound->add_option("d", d, "input channels")->required();
  bound->add_option("d_prime", d_out, "state channels")->required();
  bound->add_flag("--json", as_json, "print one JSON line");

  std::vector<std::string> expanded;
  try {
    expanded = expand_config(args);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  std::vector<const char*> argv;
  for (const auto& a : expanded) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (synth->parsed()) {
      sc.dims = parse_dims(synth_dims);
      sc.core = parse_dims(synth_core);
      if (!synth_networks.empty()) sc.network_modes = parse_list(synth_networks, false);
      const NetTensorTimeSeries ds = synthesize(sc, synth_seed);
      save_dataset(ds, synth_out);
      emit(out, json{{"command", "synth"}, {"out", synth_out}, {"shape", ds.values.shape()}, {"seed", synth_seed}});
      return 0;
    }

    if (train->parsed()) {
      const RunConfig config = train_flags.resolve(*train);
      warn_rho(err, config.rho);
      const fs::path dir = output_dir(out_dir);
      const Trained t = train_and_save(data, dir, config);
      json j{{"command", "train"},
             {"task", to_string(config.task)},
             {"variant", to_string(config.variant)},
             {"epochs", config.epochs},
             {"parameters", t.outcome.params.parameter_count()},
             {"train_loss", t.outcome.history.empty() ? 0.0 : t.outcome.history.back().train_loss}};
      j["validation"] = evaluation_json(t.outcome.evaluation);
      emit(out, j);
      return 0;
    }

    if (recover->parsed()) {
      const fs::path dir = output_dir(out_dir);
      Evaluation ev;
      Shape dims;
      if (model.empty()) {
        const RunConfig config = recover_flags.resolve(*recover, Task::recovery);
        warn_rho(err, config.rho);
        const Trained t = train_and_save(data, dir, config);
        ev = evaluate(t.prep, make_context(t.prep.data.networks, config.variant), t.outcome.params, config, true);
        dims = t.prep.data.node_dims();
      } else {
        const Loaded l = load_model(data, model);
        if (l.config.task != Task::recovery) throw UsageError("checkpoint was trained for the future task");
        ev = evaluate(l.prep, l.ctx, l.params, l.config, true);
        dims = l.prep.data.node_dims();
      }
      write_entries_csv(dir / "recovered.csv", ev.entries, dims);
      json j = evaluation_json(ev);
      j["command"] = "recover";
      emit(out, j);
      return 0;
    }

    if (predict->parsed()) {
      const Loaded l = load_model(data, model);
      if (l.config.task != Task::future) throw UsageError("checkpoint was trained for the recovery task");
      const fs::path dir = output_dir(out_dir);
      const std::size_t steps = l.prep.data.steps();
      const std::size_t h = horizon > 0 ? horizon : steps - l.prep.boundary;
      const auto preds = rollout(l.prep, l.ctx, l.params, l.config, h);
      std::vector<EntryPrediction> entries;
      std::vector<double> pn, tn;
      const std::size_t series = l.prep.data.series();
      for (std::size_t k = 0; k < h; ++k) {
        const std::size_t t = l.prep.boundary + k;
        for (std::size_t p = 0; p < series; ++p) {
          const double sd = l.prep.stats.stddev[p];
          const double mean = l.prep.stats.mean[p];
          const bool known = t < steps && l.prep.test_mask.data[p * steps + t] != 0;
          const double truth = known ? l.prep.truth[p * steps + t] : std::numeric_limits<double>::quiet_NaN();
          if (t < steps && !known) continue;
          entries.push_back({p, t, truth * sd + mean, preds[k][p] * sd + mean});
          if (known) {
            pn.push_back(preds[k][p]);
            tn.push_back(truth);
          }
        }
      }
      write_entries_csv(dir / "predictions.csv", entries, l.prep.data.node_dims());
      json j{{"command", "predict"}, {"horizon", h}, {"boundary", l.prep.boundary}, {"rows", entries.size()}};
      if (!pn.empty()) {
        j["rmse"] = rmse(pn, tn);
        std::vector<double> pr, tr;
        for (const auto& e : entries)
          if (std::isfinite(e.truth)) {
            pr.push_back(e.prediction);
            tr.push_back(e.truth);
          }
        j["rmse_raw"] = rmse(pr, tr);
      }
      emit(out, j);
      return 0;
    }

    if (eval->parsed()) {
      const Loaded l = load_model(data, model);
      const fs::path dir = output_dir(out_dir);
      const Evaluation ev = evaluate(l.prep, l.ctx, l.params, l.config, true);
      write_entries_csv(dir / "evaluation.csv", ev.entries, l.prep.data.node_dims());
      json j = evaluation_json(ev);
      j["command"] = "eval";
      j["task"] = to_string(l.config.task);
      emit(out, j);
      return 0;
    }

    if (params->parsed()) {
      const Shape dims = parse_dims(dims_text);
      warn_rho(err, rho);
      const json j = params_json(dims, rho, d, d_out);
      const double reduction = j["reduction_percent"].get<double>();
      if (reduction <= 0.0) {
        err << "warning: rho " << rho << " exceeds rho_max " << j["rho_max"].get<double>()
            << "; the tensor LSTM is not smaller (reduction " << reduction << "%)\n";
      }
      if (as_json) {
        emit(out, j);
      } else {
        out << "dims          " << join(dims) << '\n'
            << "core dims     " << join(j["core_dims"].get<Shape>()) << '\n'
            << "TLSTM         " << with_commas(j["tlstm_params"].get<std::uint64_t>()) << '\n'
            << "mLSTM         " << with_commas(j["mlstm_params"].get<std::uint64_t>()) << '\n'
            << "reduction     " << std::fixed << std::setprecision(2) << reduction << "%\n"
            << "rho_max       " << std::setprecision(4) << j["rho_max"].get<double>() << '\n';
      }
      return 0;
    }

    if (bound->parsed()) {
      const Shape dims = parse_dims(dims_text);
      const double r = rho_upper_bound(dims, d, d_out);
      if (as_json) {
        emit(out, json{{"dims", dims}, {"d", d}, {"d_prime", d_out}, {"rho_max", r}});
      } else {
        out << std::fixed << std::setprecision(2) << r << '\n';
      }
      return 0;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace net3::cli
