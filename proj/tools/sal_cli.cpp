// Command-line interface for the SAL attribute-based retrieval library.
//
// Subcommands:
//   gen-data  Generate a synthetic cross-modal retrieval benchmark on disk.
//   train     Train a model variant on a benchmark directory.
//   eval      Re-evaluate a saved checkpoint on a benchmark split.
//   ablate    Run a variants x seeds study and print a summary table.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sal/checkpoint.hpp"
#include "sal/dataset.hpp"
#include "sal/metrics.hpp"
#include "sal/report.hpp"
#include "sal/synthbench.hpp"
#include "sal/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string timestamp_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  localtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y%m%d-%H%M%S", &tm);
  return buf;
}

// Resolve the output directory for a run: explicit --out wins, then
// $SAL_OUT_DIR/<name>, then ./runs/<name>.
fs::path resolve_run_dir(const std::string& out_flag, const std::string& run_name) {
  if (!out_flag.empty()) return fs::path(out_flag);
  if (const char* env = std::getenv("SAL_OUT_DIR"); env != nullptr && *env != '\0') {
    return fs::path(env) / run_name;
  }
  return fs::path("runs") / run_name;
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open output file: " + path.string());
  os << text;
  if (!os) throw std::runtime_error("failed writing output file: " + path.string());
}

json epoch_record_to_json(const sal::EpochRecord& rec) {
  json j{{"phase", rec.phase}, {"epoch", rec.epoch}, {"losses", rec.losses},
         {"evaluated", rec.evaluated}};
  if (rec.evaluated) j["metrics"] = json(rec.metrics);
  return j;
}

void write_epochs_jsonl(const fs::path& path, const std::vector<sal::EpochRecord>& epochs) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open output file: " + path.string());
  for (const auto& rec : epochs) os << epoch_record_to_json(rec).dump() << "\n";
  if (!os) throw std::runtime_error("failed writing output file: " + path.string());
}

// Load <dir>/train.manifest and <dir>/eval.manifest.
std::pair<sal::Dataset, sal::Dataset> load_benchmark_dir(const std::string& data_dir) {
  const fs::path dir(data_dir);
  const fs::path train_manifest = dir / "train.manifest";
  const fs::path eval_manifest = dir / "eval.manifest";
  if (!fs::exists(train_manifest)) {
    throw std::runtime_error("missing manifest: " + train_manifest.string());
  }
  if (!fs::exists(eval_manifest)) {
    throw std::runtime_error("missing manifest: " + eval_manifest.string());
  }
  return {sal::load_manifest(train_manifest.string()), sal::load_manifest(eval_manifest.string())};
}

sal::TrainConfig load_train_config(const std::string& config_path) {
  sal::TrainConfig cfg;
  if (!config_path.empty()) {
    std::ifstream is(config_path);
    if (!is) throw std::runtime_error("cannot open config file: " + config_path);
    json j;
    is >> j;
    cfg = j.get<sal::TrainConfig>();
  }
  return cfg;
}

std::vector<std::string> split_csv(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// ---------------------------------------------------------------------------
// gen-data
// ---------------------------------------------------------------------------

struct GenDataArgs {
  std::string out;
  std::string config_path;
  sal::SynthBenchConfig overrides;  // staging area for CLI flags
  bool has_seed = false, has_seen = false, has_unseen = false;
  bool has_min = false, has_max = false, has_dim = false;
  bool has_noise = false, has_similarity = false, has_schema = false;
  std::string schema_spec;
};

void add_gen_data(CLI::App& app, GenDataArgs& a) {
  CLI::App* sub = app.add_subcommand("gen-data", "Generate a synthetic benchmark directory");
  sub->add_option("--out", a.out, "Output directory")->required();
  sub->add_option("--config", a.config_path, "Benchmark config JSON file");
  sub->add_option("--seed", a.overrides.seed, "Generator seed")
      ->each([&a](const std::string&) { a.has_seed = true; });
  sub->add_option("--seen", a.overrides.num_seen_categories, "Seen (training) categories")
      ->each([&a](const std::string&) { a.has_seen = true; });
  sub->add_option("--unseen", a.overrides.num_unseen_categories, "Unseen (eval-only) categories")
      ->each([&a](const std::string&) { a.has_unseen = true; });
  sub->add_option("--samples-min", a.overrides.samples_per_category_min, "Min samples per category")
      ->each([&a](const std::string&) { a.has_min = true; });
  sub->add_option("--samples-max", a.overrides.samples_per_category_max, "Max samples per category")
      ->each([&a](const std::string&) { a.has_max = true; });
  sub->add_option("--visual-dim", a.overrides.raw_visual_dim, "Raw visual feature dimension")
      ->each([&a](const std::string&) { a.has_dim = true; });
  sub->add_option("--noise", a.overrides.intra_class_noise_scale, "Intra-category noise scale")
      ->each([&a](const std::string&) { a.has_noise = true; });
  sub->add_option("--similarity", a.overrides.inter_class_similarity,
                  "Inter-category prototype similarity in [0,1)")
      ->each([&a](const std::string&) { a.has_similarity = true; });
  sub->add_option("--schema", a.schema_spec,
                  "Attribute schema spec, e.g. \"male|bag|grp:a,b,c\"")
      ->each([&a](const std::string&) { a.has_schema = true; });

  sub->callback([&a]() {
    sal::SynthBenchConfig cfg;
    if (!a.config_path.empty()) {
      std::ifstream is(a.config_path);
      if (!is) throw std::runtime_error("cannot open config file: " + a.config_path);
      json j;
      is >> j;
      cfg = j.get<sal::SynthBenchConfig>();
    }
    if (a.has_seed) cfg.seed = a.overrides.seed;
    if (a.has_seen) cfg.num_seen_categories = a.overrides.num_seen_categories;
    if (a.has_unseen) cfg.num_unseen_categories = a.overrides.num_unseen_categories;
    if (a.has_min) cfg.samples_per_category_min = a.overrides.samples_per_category_min;
    if (a.has_max) cfg.samples_per_category_max = a.overrides.samples_per_category_max;
    if (a.has_dim) cfg.raw_visual_dim = a.overrides.raw_visual_dim;
    if (a.has_noise) cfg.intra_class_noise_scale = a.overrides.intra_class_noise_scale;
    if (a.has_similarity) cfg.inter_class_similarity = a.overrides.inter_class_similarity;
    if (a.has_schema) cfg.schema = a.schema_spec;
    cfg.validate();

    sal::write_synth_benchmark(cfg, a.out);
    const auto [train, eval] = sal::generate_synth_benchmark(cfg);
    std::cerr << "[sal] wrote benchmark to " << a.out << "\n";
    std::cout << json{{"out", a.out},
                      {"train_samples", train.size()},
                      {"train_categories", train.num_categories},
                      {"eval_samples", eval.size()},
                      {"eval_categories", eval.num_categories},
                      {"config", json(cfg)}}
                     .dump(2)
              << "\n";
  });
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string data_dir;
  std::string config_path;
  std::string out;
  std::string resume;
  std::string variant;
  sal::TrainConfig staged;  // staging area for CLI flags
  bool has_seed = false, has_epochs = false, has_pretrain = false, has_batch = false;
  bool has_unseen = false, has_gan1 = false, has_cyc = false, has_consis = false;
  bool has_gan2 = false, has_aug = false, has_eval_every = false;
};

sal::TrainConfig resolve_train_config(const TrainArgs& a) {
  sal::TrainConfig cfg = load_train_config(a.config_path);
  if (!a.variant.empty()) cfg.variant = sal::variant_from_string(a.variant);
  if (a.has_seed) cfg.seed = a.staged.seed;
  if (a.has_epochs) cfg.epochs = a.staged.epochs;
  if (a.has_pretrain) cfg.pretrain_epochs = a.staged.pretrain_epochs;
  if (a.has_batch) cfg.batch_size = a.staged.batch_size;
  if (a.has_unseen) cfg.unseen_per_batch = a.staged.unseen_per_batch;
  if (a.has_gan1) cfg.lambdas.gan1 = a.staged.lambdas.gan1;
  if (a.has_cyc) cfg.lambdas.cyc = a.staged.lambdas.cyc;
  if (a.has_consis) cfg.lambdas.consis = a.staged.lambdas.consis;
  if (a.has_gan2) cfg.lambdas.gan2 = a.staged.lambdas.gan2;
  if (a.has_aug) cfg.lambdas.aug = a.staged.lambdas.aug;
  if (a.has_eval_every) cfg.eval_every = a.staged.eval_every;
  return cfg;
}

void add_train_options(CLI::App* sub, TrainArgs& a) {
  sub->add_option("--data", a.data_dir, "Benchmark directory (train.manifest + eval.manifest)")
      ->required();
  sub->add_option("--config", a.config_path, "Training config JSON file");
  sub->add_option("--variant", a.variant,
                  "Model variant: embed, embed+adv, embed+symb-adv, sal, sal-stagewise");
  sub->add_option("--seed", a.staged.seed, "Training seed")
      ->each([&a](const std::string&) { a.has_seed = true; });
  sub->add_option("--epochs", a.staged.epochs, "Main-phase epochs")
      ->each([&a](const std::string&) { a.has_epochs = true; });
  sub->add_option("--pretrain-epochs", a.staged.pretrain_epochs, "Max pretraining epochs")
      ->each([&a](const std::string&) { a.has_pretrain = true; });
  sub->add_option("--batch-size", a.staged.batch_size, "Mini-batch size")
      ->each([&a](const std::string&) { a.has_batch = true; });
  sub->add_option("--unseen-per-batch", a.staged.unseen_per_batch,
                  "Unseen attribute vectors per batch (-1 = batch size)")
      ->each([&a](const std::string&) { a.has_unseen = true; });
  sub->add_option("--lambda-gan1", a.staged.lambdas.gan1, "Feature-synthesis GAN weight")
      ->each([&a](const std::string&) { a.has_gan1 = true; });
  sub->add_option("--lambda-cyc", a.staged.lambdas.cyc, "Cycle-consistency weight")
      ->each([&a](const std::string&) { a.has_cyc = true; });
  sub->add_option("--lambda-consis", a.staged.lambdas.consis, "Granularity-consistency weight")
      ->each([&a](const std::string&) { a.has_consis = true; });
  sub->add_option("--lambda-gan2", a.staged.lambdas.gan2, "Alignment GAN weight")
      ->each([&a](const std::string&) { a.has_gan2 = true; });
  sub->add_option("--lambda-aug", a.staged.lambdas.aug, "Synthetic-augmentation weight")
      ->each([&a](const std::string&) { a.has_aug = true; });
  sub->add_option("--eval-every", a.staged.eval_every, "Evaluate every N epochs")
      ->each([&a](const std::string&) { a.has_eval_every = true; });
}

void run_train(const TrainArgs& a) {
  const sal::TrainConfig cfg = resolve_train_config(a);
  auto [train, eval] = load_benchmark_dir(a.data_dir);

  const std::string run_name =
      "train-" + sal::to_string(cfg.variant) + "-seed" + std::to_string(cfg.seed) + "-" + timestamp_now();
  const fs::path run_dir = resolve_run_dir(a.out, run_name);
  fs::create_directories(run_dir);

  sal::SalTrainer trainer(cfg, std::move(train), std::move(eval));
  if (!a.resume.empty()) {
    trainer.load(a.resume);
    std::cerr << "[sal] resumed from " << a.resume << "\n";
  }

  write_text_file(run_dir / "config.json", json{{"train", cfg}}.dump(2) + "\n");
  std::cerr << "[sal] training variant=" << sal::to_string(cfg.variant) << " seed=" << cfg.seed
            << " -> " << run_dir.string() << "\n";

  const sal::RunResult result = trainer.run();

  write_epochs_jsonl(run_dir / "epochs.jsonl", result.epochs);
  write_text_file(run_dir / "metrics.json", json(result.final_metrics).dump(2) + "\n");
  trainer.save((run_dir / "final.ckpt").string());

  std::cerr << "[sal] finished " << result.epochs.size() << " recorded epochs\n";
  std::cout << json{{"run_dir", run_dir.string()}, {"metrics", json(result.final_metrics)}}
                   .dump(2)
            << "\n";
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string data_dir;
  std::string checkpoint;
  std::string split = "eval";
  std::string out;
};

void run_eval(const EvalArgs& a) {
  if (a.split != "eval" && a.split != "train") {
    throw std::runtime_error("--split must be 'train' or 'eval'");
  }
  auto [train, eval] = load_benchmark_dir(a.data_dir);

  const sal::CheckpointMeta meta = sal::peek_checkpoint(a.checkpoint);
  const json stored = json::parse(meta.config_json);
  const sal::TrainConfig cfg = stored.at("train").get<sal::TrainConfig>();

  sal::SalTrainer trainer(cfg, std::move(train), std::move(eval));
  trainer.load(a.checkpoint);

  const sal::MetricsReport report = trainer.evaluate(/*on_train=*/a.split == "train");
  const std::string text = json(report).dump(2) + "\n";
  if (!a.out.empty()) {
    write_text_file(a.out, text);
    std::cerr << "[sal] wrote metrics to " << a.out << "\n";
  }
  std::cout << text;
}

// ---------------------------------------------------------------------------
// ablate
// ---------------------------------------------------------------------------

struct AblateArgs {
  TrainArgs base;  // shares --data/--config/training overrides; --variant ignored
  std::string variants_csv = "embed,embed+adv,sal";
  std::string seeds_csv = "1,2,3,4,5";
};

void run_ablate(const AblateArgs& a) {
  sal::TrainConfig base_cfg = resolve_train_config(a.base);
  const auto [train, eval] = load_benchmark_dir(a.base.data_dir);

  const std::vector<std::string> variant_names = split_csv(a.variants_csv);
  if (variant_names.empty()) throw std::runtime_error("--variants is empty");
  std::vector<int> seeds;
  for (const std::string& s : split_csv(a.seeds_csv)) seeds.push_back(std::stoi(s));
  if (seeds.empty()) throw std::runtime_error("--seeds is empty");

  const std::string run_name = "ablate-" + timestamp_now();
  const fs::path run_dir = resolve_run_dir(a.base.out, run_name);
  fs::create_directories(run_dir);
  write_text_file(run_dir / "config.json",
                  json{{"train", base_cfg},
                       {"variants", variant_names},
                       {"seeds", seeds}}
                      .dump(2) +
                      "\n");

  std::vector<std::pair<std::string, std::vector<sal::MetricsReport>>> runs;
  for (const std::string& name : variant_names) {
    const sal::Variant variant = sal::variant_from_string(name);
    std::vector<sal::MetricsReport> reports;
    for (int seed : seeds) {
      sal::TrainConfig cfg = base_cfg;
      cfg.variant = variant;
      cfg.seed = seed;
      std::cerr << "[sal] ablate: variant=" << name << " seed=" << seed << "\n";
      sal::SalTrainer trainer(cfg, train, eval);
      const sal::RunResult result = trainer.run();
      reports.push_back(result.final_metrics);
      write_text_file(run_dir / ("metrics-" + name + "-seed" + std::to_string(seed) + ".json"),
                      json(result.final_metrics).dump(2) + "\n");
    }
    runs.emplace_back(name, std::move(reports));
  }

  const sal::AblationReport report = sal::make_ablation_report(runs);
  const std::string table = report.format_table();
  write_text_file(run_dir / "ablation.txt", table);
  write_text_file(run_dir / "ablation.json", report.to_json().dump(2) + "\n");
  std::cerr << "[sal] wrote study to " << run_dir.string() << "\n";
  std::cout << table;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SAL: symbiotic adversarial training for attribute-based retrieval"};
  app.require_subcommand(1);

  GenDataArgs gen_args;
  add_gen_data(app, gen_args);

  TrainArgs train_args;
  CLI::App* train_sub = app.add_subcommand("train", "Train one model variant");
  add_train_options(train_sub, train_args);
  train_sub->add_option("--out", train_args.out, "Run output directory");
  train_sub->add_option("--resume", train_args.resume, "Checkpoint to resume from");
  train_sub->callback([&train_args]() { run_train(train_args); });

  EvalArgs eval_args;
  CLI::App* eval_sub = app.add_subcommand("eval", "Evaluate a saved checkpoint");
  eval_sub->add_option("--data", eval_args.data_dir, "Benchmark directory")->required();
  eval_sub->add_option("--checkpoint", eval_args.checkpoint, "Checkpoint file")->required();
  eval_sub->add_option("--split", eval_args.split, "Split to evaluate: train or eval");
  eval_sub->add_option("--out", eval_args.out, "Optional metrics JSON output file");
  eval_sub->callback([&eval_args]() { run_eval(eval_args); });

  AblateArgs ablate_args;
  CLI::App* ablate_sub = app.add_subcommand("ablate", "Run a variants x seeds study");
  add_train_options(ablate_sub, ablate_args.base);
  ablate_sub->add_option("--out", ablate_args.base.out, "Study output directory");
  ablate_sub->add_option("--variants", ablate_args.variants_csv, "Comma-separated variant list");
  ablate_sub->add_option("--seeds", ablate_args.seeds_csv, "Comma-separated seed list");
  ablate_sub->callback([&ablate_args]() { run_ablate(ablate_args); });

  try {
    CLI11_PARSE(app, argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "[sal] error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
