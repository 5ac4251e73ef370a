#include "serml/corpus.hpp"
#include "serml/evalkit.hpp"
#include "serml/experiments.hpp"
#include "serml/synthetic.hpp"
#include "serml/trainer.hpp"

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace serml;

namespace {

struct ConfigArgs {
  std::string path;
  bool desk = false;
  std::vector<std::string> overrides;
};

void add_config_options(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("--config", args.path, "key = value config file");
  cmd->add_flag("--desk", args.desk, "start from the small desk profile (d = K = 16)");
  cmd->add_option("--set", args.overrides, "override as key=value (repeatable)");
}

ModelConfig resolve_config(const ConfigArgs& args) {
  ModelConfig c = args.path.empty() ? (args.desk ? desk_profile() : ModelConfig{}) : ModelConfig::load(args.path);
  for (const auto& kv : args.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
    }
    c.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  c.validate();
  return c;
}

std::ostream& open_or_stdout(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") {
    return std::cout;
  }
  file.open(path);
  if (!file) {
    throw std::runtime_error("cannot write " + path);
  }
  return file;
}

// A training output directory or the checkpoint file itself.
std::filesystem::path checkpoint_file(const std::string& path) {
  const std::filesystem::path p(path);
  return std::filesystem::is_directory(p) ? p / "checkpoint.bin" : p;
}

corpus::SplitRatios parse_ratios(const std::vector<double>& r) {
  if (r.size() != 3) {
    throw std::invalid_argument("--ratios expects three values");
  }
  return {r[0], r[1], r[2]};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic-enhanced relational metric learning"};
  app.require_subcommand(1);

  // prepare
  std::string input, out_dir;
  int kcore = 5, min_freq = 2, r_max = 5;
  std::uint64_t split_seed = 0;
  std::vector<double> ratios{0.8, 0.1, 0.1};
  corpus::TextCaps caps;
  auto* prepare = app.add_subcommand("prepare", "ingest JSON lines, filter, split and tokenize");
  prepare->add_option("--input", input, "JSON-lines reviews")->required();
  prepare->add_option("--out", out_dir, "output directory")->required();
  prepare->add_option("--kcore", kcore, "minimum interactions per user and item");
  prepare->add_option("--seed", split_seed, "split seed");
  prepare->add_option("--ratios", ratios, "train valid test")->expected(3)->delimiter(',');
  prepare->add_option("--min-freq", min_freq, "minimum token count");
  prepare->add_option("--max-sentences", caps.max_sentences);
  prepare->add_option("--max-words", caps.max_words);
  prepare->add_option("--r-max", r_max, "largest rating");

  // train
  ConfigArgs train_cfg;
  std::string data_dir, ckpt_path;
  auto* train_cmd = app.add_subcommand("train", "fit a model and save the best checkpoint");
  train_cmd->add_option("--data", data_dir, "prepared data directory")->required();
  train_cmd->add_option("--out", out_dir, "output directory (checkpoint.bin, train_log.jsonl)")->required();
  add_config_options(train_cmd, train_cfg);

  // evaluate
  std::string task = "ranking";
  int n_neg = 500;
  std::uint64_t eval_seed = 7;
  std::string split_arg = "test";
  auto* evaluate = app.add_subcommand("evaluate", "ranking or rating metrics on a split");
  evaluate->add_option("--checkpoint", ckpt_path)->required();
  evaluate->add_option("--data", data_dir)->required();
  evaluate->add_option("--task", task)->check(CLI::IsMember({"ranking", "rating"}));
  evaluate->add_option("--n-neg", n_neg);
  evaluate->add_option("--seed", eval_seed);
  evaluate->add_option("--split", split_arg)->check(CLI::IsMember({"train", "valid", "test"}));

  // case-analysis
  std::string user_id;
  std::vector<std::string> item_ids;
  auto* cases = app.add_subcommand("case-analysis", "relation and item distances for one user");
  cases->add_option("--checkpoint", ckpt_path)->required();
  cases->add_option("--data", data_dir)->required();
  cases->add_option("--user", user_id)->required();
  cases->add_option("--items", item_ids)->required()->delimiter(',');

  // ablate / sweep
  ConfigArgs grid_cfg;
  std::string csv_path;
  std::vector<std::string> strategies{"element_wise", "mlp2", "mlp4", "memory"};
  std::vector<double> gammas{0.001, 0.01, 0.1, 1, 10};
  auto* ablate = app.add_subcommand("ablate", "train each induction strategy, one CSV row each");
  ablate->add_option("--data", data_dir)->required();
  ablate->add_option("--strategies", strategies)->delimiter(',');
  ablate->add_option("--out", csv_path, "CSV path (default stdout)");
  add_config_options(ablate, grid_cfg);
  auto* sweep = app.add_subcommand("sweep", "train each gamma, one CSV row each");
  sweep->add_option("--data", data_dir)->required();
  sweep->add_option("--gamma", gammas)->delimiter(',');
  sweep->add_option("--out", csv_path, "CSV path (default stdout)");
  add_config_options(sweep, grid_cfg);

  // grad-check
  std::string induction = "memory";
  std::uint64_t check_seed = 3;
  int coords = 0;
  auto* gradcheck = app.add_subcommand("grad-check", "finite differences on a tiny model");
  gradcheck->add_option("--induction", induction);
  gradcheck->add_option("--seed", check_seed);
  gradcheck->add_option("--coords", coords, "coordinates per tensor, 0 = all");

  // synth / separation
  synthetic::SyntheticSpec spec;
  std::vector<double> synth_ratios{1.0, 0.0, 0.0};
  std::string synth_out;
  auto add_spec = [&](CLI::App* cmd) {
    cmd->add_option("--users", spec.users);
    cmd->add_option("--groups", spec.groups);
    cmd->add_option("--groups-per-user", spec.groups_per_user);
    cmd->add_option("--word-noise", spec.word_noise);
    cmd->add_option("--prefer-second", spec.prefer_second, "share of users preferring the second category");
    cmd->add_flag("--swap-categories", spec.swap_categories);
    cmd->add_option("--synth-seed", spec.seed);
  };
  auto* synth = app.add_subcommand("synth", "write the two-category synthetic corpus as JSON lines");
  synth->add_option("--out", synth_out, "JSON-lines path (default stdout)");
  add_spec(synth);
  ConfigArgs sep_cfg;
  int null_draws = 200;
  auto* separation = app.add_subcommand("separation", "item separation by review category, gamma on vs off");
  add_spec(separation);
  add_config_options(separation, sep_cfg);
  separation->add_option("--null-draws", null_draws);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*prepare) {
      auto ingest = corpus::ingest_jsonl(input, r_max);
      corpus::PrepareOptions opt;
      opt.kcore_user = opt.kcore_item = kcore;
      opt.ratios = parse_ratios(ratios);
      opt.seed = split_seed;
      opt.min_freq = min_freq;
      opt.caps = caps;
      opt.r_max = r_max;
      const auto data = corpus::prepare(std::move(ingest.interactions), opt);
      corpus::save_dataset(data, out_dir);
      std::cout << data.manifest_json() << '\n';
    } else if (*train_cmd) {
      const auto config = resolve_config(train_cfg);
      const auto data = corpus::load_dataset(data_dir);
      std::filesystem::create_directories(out_dir);
      std::ofstream log_file(std::filesystem::path(out_dir) / "train_log.jsonl", std::ios::app);
      TrainOptions opt;
      opt.log = &log_file;
      const auto result = train(config, data, opt);
      save_checkpoint(result.best, checkpoint_file(out_dir));
      std::cout << "best epoch " << result.best.epoch << " of " << result.history.size() << '\n';
      if (result.diverged) {
        std::cerr << "training diverged: " << result.divergence_reason << "; saved epoch " << result.best.epoch
                  << '\n';
        return 3;
      }
    } else if (*evaluate) {
      const auto ckpt = load_checkpoint(checkpoint_file(ckpt_path));
      const auto data = corpus::load_dataset(data_dir);
      const auto split = split_arg == "train" ? corpus::Split::kTrain
                         : split_arg == "valid" ? corpus::Split::kValid
                                                : corpus::Split::kTest;
      nlohmann::json j;
      if (task == "ranking") {
        const auto r = evalkit::rank_eval(ckpt.model, data, split, n_neg, eval_seed);
        j["ndcg@5"] = r.ndcg(5);
        j["ndcg@10"] = r.ndcg(10);
        j["h@5"] = r.hit(5);
        j["h@10"] = r.hit(10);
      } else {
        j["rmse"] = evalkit::rmse(ckpt.model, data.split(split));
      }
      std::cout << j.dump() << '\n';
    } else if (*cases) {
      const auto ckpt = load_checkpoint(checkpoint_file(ckpt_path));
      const auto data = corpus::load_dataset(data_dir);
      const auto report = evalkit::case_analysis(ckpt.model, data, user_id, item_ids);
      std::cout << "user " << user_id << "\n\n" << evalkit::format_case_report(report, item_ids);
    } else if (*ablate || *sweep) {
      const auto config = resolve_config(grid_cfg);
      const auto data = corpus::load_dataset(data_dir);
      std::ofstream csv_file;
      auto& csv = open_or_stdout(csv_path, csv_file);
      if (*ablate) {
        std::vector<relinduce::InductionKind> kinds;
        for (const auto& s : strategies) {
          kinds.push_back(relinduce::parse_induction(s));
        }
        experiments::ablate(config, data, kinds, &csv);
      } else {
        experiments::sweep(config, data, gammas, &csv);
      }
    } else if (*gradcheck) {
      const auto report = experiments::tiny_grad_check(relinduce::parse_induction(induction), check_seed, coords);
      for (const auto& t : report.tensors) {
        std::cout << t.name << "  coords=" << t.coords << "  max_rel_error=" << t.max_rel_error << '\n';
      }
      std::cout << (report.passed ? "PASS" : "FAIL") << "  max_rel_error=" << report.max_rel_error << '\n';
      return report.passed ? 0 : 1;
    } else if (*synth) {
      spec.ratios = parse_ratios(synth_ratios);
      const auto corpus = synthetic::generate(spec);
      std::ofstream file;
      auto& out = open_or_stdout(synth_out, file);
      for (const auto& x : corpus.interactions) {
        out << nlohmann::json{{"user_id", x.user_id}, {"item_id", x.item_id}, {"rating", x.rating},
                              {"review_text", x.review}}
                   .dump()
            << '\n';
      }
    } else if (*separation) {
      const auto config = resolve_config(sep_cfg);
      const auto report = experiments::semantic_separation_experiment(config, spec, null_draws);
      auto run_json = [](const experiments::SeparationRun& r) {
        return nlohmann::json{{"gamma", r.gamma},         {"inter", r.stats.inter},  {"intra", r.stats.intra},
                              {"ratio", r.stats.ratio},   {"null_mean", r.null.mean}, {"null_sd", r.null.sd},
                              {"train_h5", r.train_h5}};
      };
      nlohmann::json j;
      j["semantic"] = run_json(report.semantic);
      j["baseline"] = run_json(report.baseline);
      j["improvement"] = report.improvement();
      j["baseline_within_noise"] = report.baseline_within_noise();
      std::cout << j.dump(2) << '\n';
    }
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }
  return 0;
}
