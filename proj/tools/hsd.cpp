// hsd: preprocess, train, predict and evaluate hate speech classifiers.
//
// Config keys can be overridden on the command line as --section.key=value.

#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hsd/commands.hpp"
#include "hsd/error.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNumeric = 3;

// "--a.b=v" or "--a.b v" pairs left over after CLI11 parsing.
std::vector<std::string> collect_overrides(const std::vector<std::string>& extras) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& arg = extras[i];
    if (arg.rfind("--", 0) != 0 || arg.find('.') == std::string::npos) {
      throw hsd::ConfigError("unexpected argument '" + arg + "'");
    }
    std::string kv = arg.substr(2);
    if (kv.find('=') == std::string::npos) {
      if (i + 1 >= extras.size()) throw hsd::ConfigError("override " + arg + " has no value");
      kv += "=" + extras[++i];
    }
    out.push_back(kv);
  }
  return out;
}

void print_train(const hsd::TrainReport& r) {
  std::cout << std::setprecision(6) << std::fixed;
  for (std::size_t i = 0; i < r.folds.size(); ++i) {
    std::cout << "fold " << i << "  accuracy " << r.folds[i].accuracy << "  macro_f1 " << r.folds[i].macro_f1 << "\n";
  }
  std::cout << "mean    accuracy " << r.mean_accuracy << "  macro_f1 " << r.mean_macro_f1 << "\n";
  std::cout << "run " << r.run_dir.string() << " (config " << r.config_hash << ")\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hate speech and offensive content classification"};
  app.require_subcommand(1);

  std::string config_path;
  std::string input;
  std::string output;
  auto* pre = app.add_subcommand("preprocess", "Clean a dataset and report tallies");
  pre->add_option("-c,--config", config_path, "Experiment config")->required();
  pre->add_option("-i,--input", input, "Input file (default: data.train)");
  pre->add_option("-o,--output", output, "Cleaned output file")->required();
  pre->allow_extras();

  auto* train = app.add_subcommand("train", "K-fold training into runs/<name>");
  train->add_option("-c,--config", config_path, "Experiment config")->required();
  train->allow_extras();

  std::string model;
  auto* predict = app.add_subcommand("predict", "Predict labels with a run or an ensemble spec");
  predict->add_option("-m,--model", model, "Run directory or ensemble spec (.json)")->required();
  predict->add_option("-i,--input", input, "Input file")->required();
  predict->add_option("-o,--output", output, "Predictions CSV (default: stdout)");

  std::string predictions;
  std::string gold;
  std::string task;
  auto* evaluate = app.add_subcommand("evaluate", "Score predictions against gold labels");
  evaluate->add_option("-p,--predictions", predictions, "Predictions CSV")->required();
  evaluate->add_option("-g,--gold", gold, "Gold dataset or thread file")->required();
  evaluate->add_option("-t,--task", task, "Task, to fix the label set");
  evaluate->add_option("-o,--output", output, "Metrics JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*pre) {
      const auto config = hsd::load_experiment(config_path, collect_overrides(pre->remaining()));
      const auto r = hsd::cmd_preprocess(config, input, output);
      std::cout << "rows_in " << r.rows_in << "\nrows_out " << r.rows_out << "\nempty_after_cleaning "
                << r.empty_after_cleaning << "\nunknown_emoji " << r.stats.unknown_emoji
                << "\ntransliteration_failures " << r.stats.transliteration_failures << "\n";
    } else if (*train) {
      const auto config = hsd::load_experiment(config_path, collect_overrides(train->remaining()));
      print_train(hsd::cmd_train(config));
    } else if (*predict) {
      const auto preds = hsd::cmd_predict(model, input, output);
      if (output.empty()) std::cout << hsd::format_predictions(preds);
    } else if (*evaluate) {
      std::optional<hsd::LabelKind> kind;
      if (!task.empty()) {
        auto t = hsd::parse_task(task);
        if (!t) throw hsd::ConfigError("unknown task '" + task + "'");
        kind = hsd::label_kind(*t);
      }
      std::cout << hsd::format_evaluation_text(hsd::cmd_evaluate(predictions, gold, kind, output));
    }
  } catch (const hsd::NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const hsd::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitOk;
}
