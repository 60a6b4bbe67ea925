#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "moco/config.hpp"
#include "moco/dataset.hpp"
#include "moco/error.hpp"
#include "moco/harness.hpp"
#include "moco/model.hpp"
#include "moco/rng.hpp"
#include "moco/selftest.hpp"

namespace fs = std::filesystem;
using namespace moco;

namespace {

struct Flags {
  std::string config_path;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> norm;
  std::optional<unsigned> threads;
  std::optional<std::string> model;
  bool linear = false;
  bool timing = false;
  std::string fault;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config_path, "key = value configuration file");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--norm", f.norm, "restrict to one norm")->check(CLI::IsMember({"linf", "l2", "l1"}));
  cmd->add_option("--threads", f.threads, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--model", f.model, "model file (default: <out>/model.json)");
}

Config resolve(const Flags& f) {
  Config c = f.config_path.empty() ? Config{} : load_config(f.config_path);
  if (f.out) c.out = *f.out;
  if (f.seed) c.seed = *f.seed;
  if (f.threads) c.threads = *f.threads;
  if (f.model) c.model_path = *f.model;
  if (f.norm) {
    c.spec.norms = {parse_norm(*f.norm)};
    c.norms_given = true;
  }
  if (f.linear) c.spec.linear = true;
  if (f.timing) c.spec.timing = true;
  c.spec.seed = c.seed;
  c.spec.threads = c.threads;
  return c;
}

std::string model_file(const Config& c) {
  return c.model_path.empty() ? (fs::path(c.out) / "model.json").string() : c.model_path;
}

void refuse_existing(const fs::path& p) {
  if (fs::exists(p)) {
    throw FormatError("refusing to overwrite " + p.string() + "; choose a fresh --out directory");
  }
}

void write_new(const fs::path& p, const std::string& content) {
  refuse_existing(p);
  std::ofstream out(p, std::ios::binary);
  if (!out) throw FormatError("cannot write " + p.string());
  out << content;
  if (!out) throw FormatError("failed writing " + p.string());
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw FormatError("cannot create output directory " + dir);
}

Dataset dataset_for(std::uint64_t seed, const SyntheticConfig& cfg) {
  Rng rng(derive_seed(seed, "dataset", 0));
  return make_synthetic(rng, cfg);
}

int cmd_train(const Config& c) {
  ensure_dir(c.out);
  const fs::path model_path = model_file(c);
  const fs::path manifest_path = model_path.parent_path() / "dataset.json";
  refuse_existing(model_path);
  refuse_existing(manifest_path);

  const Dataset data = dataset_for(c.seed, c.data);
  std::vector<std::size_t> dims{c.data.dim};
  dims.insert(dims.end(), c.hidden.begin(), c.hidden.end());
  dims.push_back(c.data.class_count);
  Rng init(derive_seed(c.seed, "init", 0));
  Rng shuffle(derive_seed(c.seed, "train", 0));
  const TrainResult result = train(Mlp::random_init(dims, init), data, c.train, shuffle);

  nlohmann::json manifest;
  manifest["generator"] = "gaussian-blobs";
  manifest["seed"] = c.seed;
  manifest["dim"] = c.data.dim;
  manifest["classes"] = c.data.class_count;
  manifest["per_class"] = c.data.per_class;
  manifest["spread"] = c.data.spread;
  manifest["center_width"] = c.data.center_width;
  manifest["informative"] = c.data.informative;
  manifest["train"] = data.train.size();
  manifest["test"] = data.test.size();
  manifest["aux"] = data.aux.size();
  manifest["train_accuracy"] = result.train_accuracy;
  manifest["test_accuracy"] = result.test_accuracy;

  write_new(model_path, model_to_json(result.model));
  write_new(manifest_path, manifest.dump(2) + "\n");
  std::printf("train accuracy %.4f\ntest accuracy %.4f\nmodel written to %s\n", result.train_accuracy,
              result.test_accuracy, model_path.string().c_str());
  return 0;
}

struct Loaded {
  Mlp model;
  Dataset data;
};

Loaded load_inputs(const Config& c) {
  const fs::path model_path = model_file(c);
  if (!fs::exists(model_path)) {
    throw FormatError("model file " + model_path.string() + " not found; run `moco train --out " + c.out +
                      "` first or pass --model");
  }
  const fs::path manifest_path = model_path.parent_path() / "dataset.json";
  if (!fs::exists(manifest_path)) {
    throw FormatError("dataset manifest " + manifest_path.string() + " not found next to the model");
  }
  std::ifstream in(manifest_path);
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(in);
  } catch (const std::exception& e) {
    throw FormatError("malformed dataset manifest " + manifest_path.string() + ": " + e.what());
  }
  SyntheticConfig cfg;
  cfg.dim = m.at("dim").get<std::size_t>();
  cfg.class_count = m.at("classes").get<std::size_t>();
  cfg.per_class = m.at("per_class").get<std::size_t>();
  cfg.spread = m.at("spread").get<double>();
  cfg.center_width = m.at("center_width").get<double>();
  cfg.informative = m.at("informative").get<std::size_t>();
  Loaded out{load_model(model_path.string()), dataset_for(m.at("seed").get<std::uint64_t>(), cfg)};
  if (out.data.train.size() != m.at("train").get<std::size_t>() ||
      out.data.test.size() != m.at("test").get<std::size_t>() ||
      out.data.aux.size() != m.at("aux").get<std::size_t>()) {
    throw FormatError("regenerated dataset does not match manifest " + manifest_path.string());
  }
  if (out.model.input_dim() != out.data.dim || out.model.class_count() != out.data.class_count) {
    throw FormatError("model shape does not match the dataset in " + manifest_path.string());
  }
  return out;
}

int emit(const Config& c, const Report& report) {
  ensure_dir(c.out);
  const fs::path dir(c.out);
  // Check every target first so a refusal leaves nothing half-written.
  for (const Table& t : report.tables) refuse_existing(dir / (t.name + ".csv"));
  refuse_existing(dir / (report.kind + ".jsonl"));
  for (const Table& t : report.tables) {
    write_new(dir / (t.name + ".csv"), t.csv());
    std::cout << "# " << t.name << "\n" << t.csv();
  }
  write_new(dir / (report.kind + ".jsonl"), report.jsonl());
  for (const std::string& s : report.skipped) std::cerr << "skipped: " << s << "\n";
  const auto problems = check_report(report);
  for (const std::string& p : problems) std::cerr << "inconsistent cell: " << p << "\n";
  return problems.empty() ? 0 : 1;
}

int cmd_selftest(const Config& c, const std::string& fault) {
  SelftestOptions opts;
  opts.seed = c.seed;
  if (!fault.empty()) {
    if (fault != "l1-projection") throw FormatError("unknown fault '" + fault + "' (known: l1-projection)");
    opts.corrupt_l1_projection = true;
  }
  int failed = 0;
  for (const SelftestCheck& check : run_selftest(opts)) {
    std::printf("%s %s (%s)\n", check.passed ? "PASS" : "FAIL", check.name.c_str(), check.detail.c_str());
    if (!check.passed) ++failed;
  }
  if (failed > 0) {
    std::fprintf(stderr, "%d selftest propert%s failed\n", failed, failed == 1 ? "y" : "ies");
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bezier-path adversarial attacks and evolutionary search on a desk-scale classifier"};
  app.require_subcommand(1);
  Flags flags;

  struct Command {
    const char* name;
    const char* help;
  };
  const Command commands[] = {
      {"train", "generate the dataset and train the classifier"},
      {"connect", "connectivity along optimised curves"},
      {"transfer", "transfer of curve points to unseen images"},
      {"aux", "auxiliary-image ablation"},
      {"converge", "coverage across optimisation epochs and sampling densities"},
      {"compare", "evolutionary attack with Bezier vs uniform crossover"},
      {"obfuscated", "PGD vs evolutionary attack under input quantisation"},
      {"selftest", "fast invariant suite"},
  };
  std::map<std::string, CLI::App*> subs;
  for (const Command& cmd : commands) {
    CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
    add_common(sub, flags);
    subs[cmd.name] = sub;
  }
  subs["connect"]->add_flag("--linear", flags.linear, "also evaluate the straight segment between endpoints");
  subs["compare"]->add_flag("--timing", flags.timing, "record wall-clock time (breaks byte-identical reruns)");
  subs["obfuscated"]->add_flag("--timing", flags.timing, "record wall-clock time");
  subs["selftest"]->add_option("--inject-fault", flags.fault, "corrupt a component to exercise failure reporting");

  CLI11_PARSE(app, argc, argv);

  try {
    Config c = resolve(flags);
    const std::string which = app.get_subcommands().front()->get_name();
    if (which == "train") return cmd_train(c);
    if (which == "selftest") return cmd_selftest(c, flags.fault);

    // The ablations default to linf only, as in the reference tables.
    if (!c.norms_given && (which == "aux" || which == "converge" || which == "obfuscated")) {
      c.spec.norms = {Norm::Linf};
    }
    c.spec.validate();
    const Loaded in = load_inputs(c);
    if (which == "connect") return emit(c, run_connectivity(c.spec, in.model, in.data));
    if (which == "transfer") return emit(c, run_transfer(c.spec, in.model, in.data));
    if (which == "aux") return emit(c, run_aux_ablation(c.spec, in.model, in.data));
    if (which == "converge") return emit(c, run_convergence(c.spec, in.model, in.data));
    if (which == "compare") return emit(c, run_ea_compare(c.spec, in.model, in.data));
    if (which == "obfuscated") return emit(c, run_obfuscated(c.spec, in.model, in.data));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
