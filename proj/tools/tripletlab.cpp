// tripletlab: data generation, diagram dynamics, toy training, evaluation.
//
// Exit codes: 0 success, 1 usage, 2 data or I/O, 3 numeric failure.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <openssl/evp.h>

#include "triplet/dynamics.hpp"
#include "triplet/eval.hpp"
#include "triplet/io.hpp"
#include "triplet/svg.hpp"
#include "triplet/synthdata.hpp"
#include "triplet/trainer.hpp"

namespace fs = std::filesystem;
using namespace triplet;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

std::string sha256_file(const fs::path& path) {
  const std::string bytes = read_text(path);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw IoError("sha256 failed for " + path.string());
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

// Relative output paths land under $TRIPLETLAB_OUT_DIR when it is set.
std::string resolve_output(const std::string& p) {
  const char* dir = std::getenv("TRIPLETLAB_OUT_DIR");
  if (dir == nullptr || *dir == '\0' || fs::path(p).is_absolute()) return p;
  return (fs::path(dir) / p).string();
}

const std::map<std::string, LossKind> kLosses = {
    {"nca", LossKind::NCA}, {"margin", LossKind::Margin}, {"sct", LossKind::SCT}};
const std::map<std::string, MiningStrategy> kMiners = {{"random", MiningStrategy::Random},
                                                       {"hn", MiningStrategy::HardNegative},
                                                       {"shn", MiningStrategy::SemiHardNegative},
                                                       {"ep", MiningStrategy::EasyPositive},
                                                       {"ephn", MiningStrategy::EasyPositiveHardNegative}};
const std::map<std::string, GradMode> kGradModes = {{"post", GradMode::PostProjection},
                                                    {"through", GradMode::ThroughNormalization}};

template <typename Map>
std::vector<std::string> keys(const Map& m) {
  std::vector<std::string> out;
  for (const auto& [k, v] : m) out.push_back(k);
  return out;
}

struct Command {
  CLI::App* app = nullptr;
  std::string output_option;  // long name of the option naming the output file or prefix
  std::function<std::vector<std::string>(const std::string& out)> run;
};

// Options bound by the subcommands. Values persist until the next parse.
struct Options {
  // gen-data
  DatasetConfig data;
  std::string out = "data.csv";
  // simulate / trajectory
  std::string loss = "nca";
  double p = 0.0, gamma = 1.0, beta_scale = 0.1, margin = 0.0, lambda = 1.0;
  std::size_t resolution = 41, steps = 50;
  double s_ap = 0.0, s_an = 0.0;
  std::string prefix;
  // train / diagram / eval
  std::string data_path, weights_path, miner = "hn", grad_mode = "through", base = "nca";
  double lr = 0.5;
  int epochs = 50, classes_per_batch = 8, embed_dim = 8, hidden_dim = 0, snapshot_every = 10;
  std::uint64_t seed = 0;
  bool freeze_anchor = false;
  std::vector<std::size_t> ks = {1, 2, 4, 8};
  // replay
  std::string manifest;
};

LossSpec make_loss(const Options& o) {
  LossSpec l;
  l.kind = kLosses.at(o.loss);
  l.lambda = o.lambda;
  l.margin = o.margin;
  l.base = kLosses.at(o.base);
  l.freeze_anchor_on_hard = o.freeze_anchor;
  l.validate();
  return l;
}

StepParams make_step(const Options& o) {
  StepParams s;
  s.learning_rate = o.beta_scale;
  s.gamma = o.gamma;
  s.entanglement_p = o.p;
  s.loss = make_loss(o);
  s.validate();
  return s;
}

std::vector<UnitVector> embed_dataset(const LabeledDataset& ds, const std::string& weights) {
  if (weights.empty()) {
    std::vector<UnitVector> out;
    for (const auto& x : ds.points) out.push_back(normalize(x));
    return out;
  }
  const Model m = model_from_json(read_json(weights));
  if (m.input_dim() != ds.dim()) throw DimensionMismatch(m.input_dim(), ds.dim());
  return embed_all(m, ds.points);
}

std::string to_text(const std::function<void(std::ostream&)>& writer) {
  std::ostringstream os;
  writer(os);
  return os.str();
}

std::vector<std::string> run_gen_data(const Options& o, const std::string& out) {
  const LabeledDataset ds = generate(o.data);
  write_text(out, to_text([&](std::ostream& os) { write_csv(os, ds); }));
  return {out};
}

std::vector<std::string> run_simulate(const Options& o, const std::string& prefix) {
  if (o.loss == "sct") throw InvalidArgument("simulate supports --loss nca or margin");
  GridSpec grid;
  grid.resolution = o.resolution;
  const VectorField field = vector_field(grid, make_step(o));
  const std::string csv = prefix + ".csv", svg_file = prefix + ".svg";
  write_text(csv, to_text([&](std::ostream& os) { write_field_csv(os, field); }));
  char title[128];
  std::snprintf(title, sizeof title, "%s field, p=%g, gamma=%g, lr=%g", o.loss.c_str(), o.p, o.gamma, o.beta_scale);
  write_text(svg_file, svg::quiver(field, title));
  return {csv, svg_file};
}

std::vector<std::string> run_trajectory(const Options& o, const std::string& prefix) {
  if (o.loss == "sct") throw InvalidArgument("trajectory supports --loss nca or margin");
  const TripletCoord start{o.s_ap, o.s_an};
  if (!start.valid()) throw InvalidArgument("start coordinate must lie in [-1, 1]^2");
  const auto path = trajectory(start, make_step(o), o.steps);
  const std::string csv = prefix + ".csv", svg_file = prefix + ".svg";
  write_text(csv, to_text([&](std::ostream& os) { write_trajectory_csv(os, path); }));
  write_text(svg_file, svg::path(path, "trajectory from (" + format_real(o.s_ap) + ", " + format_real(o.s_an) + ")"));
  return {csv, svg_file};
}

std::vector<std::string> run_train(const Options& o, const std::string& prefix) {
  const LabeledDataset ds = load(o.data_path);
  TrainConfig c;
  c.loss = make_loss(o);
  c.strategy = kMiners.at(o.miner);
  c.grad_mode = kGradModes.at(o.grad_mode);
  c.learning_rate = o.lr;
  c.epochs = o.epochs;
  c.classes_per_batch = o.classes_per_batch;
  c.embed_dim = o.embed_dim;
  c.hidden_dim = o.hidden_dim;
  c.seed = o.seed;
  c.snapshot_every = o.snapshot_every;
  const TrainResult r = train(ds, c);

  std::vector<std::string> outputs;
  auto emit = [&](const std::string& path, const std::string& text) {
    write_text(path, text);
    outputs.push_back(path);
  };

  Json log;
  log["loss"] = o.loss;
  log["miner"] = o.miner;
  log["grad_mode"] = o.grad_mode;
  log["seed"] = o.seed;
  log["epochs"] = to_json(std::span<const EpochLog>(r.logs));
  emit(prefix + ".log.json", log.dump(2) + "\n");
  emit(prefix + ".log.csv", to_text([&](std::ostream& os) { write_epoch_csv(os, r.logs); }));
  for (const auto& l : r.logs) {
    if (!l.snapshot) continue;
    char name[32];
    std::snprintf(name, sizeof name, ".snapshot-%04d.csv", l.epoch);
    emit(prefix + name, to_text([&](std::ostream& os) { write_triplets_csv(os, *l.snapshot); }));
  }
  std::vector<double> recall, collapse, hard;
  for (const auto& l : r.logs) {
    recall.push_back(l.recall_at_1);
    collapse.push_back(l.collapse);
    hard.push_back(l.hard_fraction);
  }
  const std::vector<svg::Series> rc = {{"recall@1", recall}, {"collapse", collapse}};
  emit(prefix + ".recall.svg", svg::lines(rc, -0.2, 1.0, "held-out recall@1 and collapse", "epoch", "value"));
  const std::vector<svg::Series> hf = {{"hard fraction", hard}};
  emit(prefix + ".hard.svg", svg::lines(hf, 0.0, 1.0, "fraction of hard mined triplets", "epoch", "fraction"));
  emit(prefix + ".weights.json", to_json(r.model).dump(2) + "\n");
  return outputs;
}

std::vector<std::string> run_diagram(const Options& o, const std::string& prefix) {
  const LabeledDataset ds = load(o.data_path);
  const Batch batch(embed_dataset(ds, o.weights_path), ds.labels);
  const auto points = diagram_extract(batch);
  std::vector<TripletCoord> coords;
  for (const auto& p : points) coords.push_back(p.coord);
  const std::string csv = prefix + ".csv", svg_file = prefix + ".svg";
  write_text(csv, to_text([&](std::ostream& os) { write_diagram_csv(os, points, ds.labels); }));
  write_text(svg_file, svg::scatter(coords, "easiest positive vs hardest negative"));
  return {csv, svg_file};
}

std::vector<std::string> run_eval(const Options& o, const std::string& out) {
  const LabeledDataset ds = load(o.data_path);
  const Batch batch(embed_dataset(ds, o.weights_path), ds.labels);
  Json j;
  j["exclude_self"] = true;
  j["collapse"] = collapse_metric(batch);
  j["results"] = Json::array();
  for (std::size_t k : o.ks) j["results"].push_back(to_json(recall_at_k(batch, batch, k, true)));
  write_text(out, j.dump(2) + "\n");
  return {out};
}

void add_loss_options(CLI::App* s, Options& o, bool with_sct) {
  std::vector<std::string> kinds = {"nca", "margin"};
  if (with_sct) kinds.push_back("sct");
  s->add_option("--loss", o.loss, "loss kind")->check(CLI::IsMember(kinds));
  s->add_option("--margin", o.margin, "margin for the margin loss (>= 0)");
}

void add_dynamics_options(CLI::App* s, Options& o) {
  add_loss_options(s, o, false);
  s->add_option("--p", o.p, "entanglement strength (>= 0)");
  s->add_option("--gamma", o.gamma, "projection factor in [-1, 1]");
  s->add_option("--beta-scale", o.beta_scale, "learning rate of the simulated step");
}

// Registers every subcommand on `app`. The returned map is keyed by name.
std::map<std::string, Command> build(CLI::App& app, Options& o) {
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  std::map<std::string, Command> cmds;

  auto* gen = app.add_subcommand("gen-data", "write a synthetic labeled dataset as CSV");
  gen->add_option("--classes", o.data.num_classes, "number of classes (>= 2)");
  gen->add_option("--per-class", o.data.per_class, "points per class (>= 2)");
  gen->add_option("--dim", o.data.input_dim, "input dimension (>= 2)");
  gen->add_option("--spread", o.data.intra_spread, "RMS norm of the within-class noise");
  gen->add_option("--seed", o.data.seed, "random seed");
  gen->add_option("--out", o.out, "output CSV path");
  cmds["gen-data"] = {gen, "out", [&o](const std::string& out) { return run_gen_data(o, out); }};

  auto* sim = app.add_subcommand("simulate", "tabulate one-step diagram dynamics over a grid");
  add_dynamics_options(sim, o);
  sim->add_option("--resolution", o.resolution, "grid points per axis (>= 2)");
  sim->add_option("--out-prefix", o.prefix, "output prefix")->default_val("field");
  cmds["simulate"] = {sim, "out-prefix", [&o](const std::string& out) { return run_simulate(o, out); }};

  auto* traj = app.add_subcommand("trajectory", "roll a diagram point forward step by step");
  add_dynamics_options(traj, o);
  traj->add_option("--s-ap", o.s_ap, "starting anchor-positive similarity")->required();
  traj->add_option("--s-an", o.s_an, "starting anchor-negative similarity")->required();
  traj->add_option("--steps", o.steps, "number of steps (>= 1)");
  traj->add_option("--out-prefix", o.prefix, "output prefix")->default_val("trajectory");
  cmds["trajectory"] = {traj, "out-prefix", [&o](const std::string& out) { return run_trajectory(o, out); }};

  auto* tr = app.add_subcommand("train", "train the toy embedding model and log each epoch");
  tr->add_option("--data", o.data_path, "dataset CSV")->required();
  add_loss_options(tr, o, true);
  tr->add_option("--base", o.base, "loss used by sct on easy triplets")->check(CLI::IsMember({"nca", "margin"}));
  tr->add_option("--lambda", o.lambda, "sct weight on hard triplets");
  tr->add_flag("--freeze-anchor", o.freeze_anchor, "sct: no anchor gradient on hard triplets");
  tr->add_option("--miner", o.miner, "mining strategy")->check(CLI::IsMember(keys(kMiners)));
  tr->add_option("--grad-mode", o.grad_mode, "gradient mode")->check(CLI::IsMember(keys(kGradModes)));
  tr->add_option("--lr", o.lr, "SGD learning rate");
  tr->add_option("--epochs", o.epochs, "number of epochs");
  tr->add_option("--classes-per-batch", o.classes_per_batch, "classes per batch, two examples each");
  tr->add_option("--embed-dim", o.embed_dim, "embedding dimension");
  tr->add_option("--hidden-dim", o.hidden_dim, "tanh hidden layer width (0: linear model)");
  tr->add_option("--seed", o.seed, "random seed");
  tr->add_option("--snapshot-every", o.snapshot_every, "write mined triplets every N epochs");
  tr->add_option("--out-prefix", o.prefix, "output prefix")->default_val("train");
  cmds["train"] = {tr, "out-prefix", [&o](const std::string& out) { return run_train(o, out); }};

  auto* dg = app.add_subcommand("diagram", "easiest-positive / hardest-negative coordinates per item");
  dg->add_option("--data", o.data_path, "dataset CSV")->required();
  dg->add_option("--weights", o.weights_path, "trained weights JSON (default: raw normalized inputs)");
  dg->add_option("--out-prefix", o.prefix, "output prefix")->default_val("diagram");
  cmds["diagram"] = {dg, "out-prefix", [&o](const std::string& out) { return run_diagram(o, out); }};

  auto* ev = app.add_subcommand("eval", "recall@K of a dataset against itself, query excluded");
  ev->add_option("--data", o.data_path, "dataset CSV")->required();
  ev->add_option("--weights", o.weights_path, "trained weights JSON (default: raw normalized inputs)");
  ev->add_option("--k", o.ks, "cutoffs")->delimiter(',');
  ev->add_option("--out", o.out, "output JSON path")->default_val("eval.json");
  cmds["eval"] = {ev, "out", [&o](const std::string& out) { return run_eval(o, out); }};

  auto* rp = app.add_subcommand("replay", "re-run a manifest and verify output checksums");
  rp->add_option("manifest", o.manifest, "manifest JSON")->required();
  cmds["replay"] = {rp, "", nullptr};
  return cmds;
}

// Every option of the subcommand with its resolved value.
Json resolved_config(const CLI::App* sub) {
  Json cfg = Json::object();
  for (const CLI::Option* opt : sub->get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string name = opt->get_lnames().front();
    if (name == "help") continue;
    if (opt->get_expected_max() == 0) {
      cfg[name] = opt->count() > 0;
      continue;
    }
    std::vector<std::string> values = opt->results();
    if (values.empty() && !opt->get_default_str().empty()) values = {opt->get_default_str()};
    if (opt->get_expected_max() > 1) {
      if (values.size() == 1 && values[0].front() == '[') {
        cfg[name] = values[0].substr(1, values[0].size() - 2);
      } else {
        std::string joined;
        for (const auto& v : values) joined += (joined.empty() ? "" : ",") + v;
        cfg[name] = joined;
      }
    } else if (!values.empty()) {
      cfg[name] = values.front();
    }
  }
  return cfg;
}

std::vector<std::string> argv_from_config(const std::string& command, const Json& cfg) {
  std::vector<std::string> args = {"tripletlab", command};
  for (const auto& [name, value] : cfg.items()) {
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back("--" + name);
      continue;
    }
    args.push_back("--" + name);
    args.push_back(value.get<std::string>());
  }
  return args;
}

std::string manifest_path(const std::string& out) { return out + ".manifest.json"; }

// Replays pass resolve = false: their output paths were resolved when the
// manifest was written.
Json run_command(const std::string& name, const Command& cmd, bool resolve) {
  Json cfg = resolved_config(cmd.app);
  std::string out = cfg.at(cmd.output_option).get<std::string>();
  if (resolve) out = resolve_output(out);
  cfg[cmd.output_option] = out;
  const std::vector<std::string> files = cmd.run(out);
  Json manifest;
  manifest["command"] = name;
  manifest["config"] = cfg;
  manifest["seed"] = cfg.contains("seed") ? Json(std::stoull(cfg["seed"].get<std::string>())) : Json(nullptr);
  manifest["outputs"] = Json::array();
  for (const auto& f : files) manifest["outputs"].push_back({{"path", f}, {"sha256", sha256_file(f)}});
  write_text(manifest_path(out), manifest.dump(2) + "\n");
  return manifest;
}

int parse_and_run(const std::vector<std::string>& args, bool resolve);

int replay(const std::string& path) {
  const Json manifest = read_json(path);
  if (!manifest.contains("command") || !manifest.contains("config") || !manifest.contains("outputs")) {
    throw ParseError(0, path + ": not a run manifest");
  }
  const std::string command = manifest["command"].get<std::string>();
  if (command == "replay") throw ParseError(0, path + ": cannot replay a replay");
  const int rc = parse_and_run(argv_from_config(command, manifest["config"]), false);
  if (rc != 0) return rc;
  bool ok = true;
  for (const auto& entry : manifest["outputs"]) {
    const std::string file = entry["path"].get<std::string>();
    const std::string want = entry["sha256"].get<std::string>();
    const std::string got = fs::exists(file) ? sha256_file(file) : "missing";
    const bool match = want == got;
    ok = ok && match;
    std::cout << (match ? "match    " : "MISMATCH ") << file << '\n';
  }
  return ok ? 0 : kExitData;
}

int parse_and_run(const std::vector<std::string>& args, bool resolve) {
  CLI::App app{"triplet diagram dynamics and toy metric-learning experiments", "tripletlab"};
  Options o;
  const auto cmds = build(app, o);
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }
  for (const auto& [name, cmd] : cmds) {
    if (!cmd.app->parsed()) continue;
    if (name == "replay") return replay(o.manifest);
    const Json m = run_command(name, cmd, resolve);
    for (const auto& f : m["outputs"]) std::cout << f["path"].get<std::string>() << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  try {
    return parse_and_run(args, true);
  } catch (const NoNegatives& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const DimensionMismatch& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const InvalidArgument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const Error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
}
