#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <unistd.h>
#include <sys/wait.h>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "generators.hpp"
#include "hsd/commands.hpp"
#include "hsd/corpus.hpp"
#include "hsd/error.hpp"

using namespace hsd;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("hsd_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& s) const { return path_ / s; }

 private:
  fs::path path_;
};

void write(const fs::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Two classes with disjoint vocabularies, HOF on even rows.
std::string separable_csv(std::size_t n, std::uint64_t seed) {
  test::Gen g(seed);
  const std::vector<std::string> a{"hate", "vile", "trash", "gross", "idiot", "scum"};
  const std::vector<std::string> b{"love", "sunny", "friend", "happy", "great", "kind"};
  const std::vector<std::string> s{"the", "a", "is", "and"};
  std::string out = "text_id,text,task_1,task_2\n";
  for (std::size_t i = 0; i < n; ++i) {
    const bool hof = i % 2 == 0;
    std::vector<std::string> w;
    for (int k = 0; k < 3; ++k) w.push_back((hof ? a : b)[g.index(6)]);
    for (int k = 0; k < 3; ++k) w.push_back(s[g.index(4)]);
    std::shuffle(w.begin(), w.end(), g.engine());
    out += "r" + std::to_string(i) + "," + unicode::join(w) + "," + (hof ? "HOF,OFFN" : "NOT,NONE") + "\n";
  }
  return out;
}

std::string small_config(const std::string& name, const std::string& extra = "") {
  return "name = " + name + "\ntask = en_a\n[data]\ntrain = train.csv\n[head]\nfilters_per_width = 8\nfc_dim = 16\n"
         "[train]\nmax_epochs = 6\n[output]\ndir = runs\n" + extra;
}

int run_cli(const std::string& args, std::string* err = nullptr) {
  const fs::path log = fs::temp_directory_path() / ("hsd_cli_stderr_" + std::to_string(::getpid()));
  const std::string cmd = std::string(HSD_CLI_PATH) + " " + args + " >/dev/null 2>" + log.string();
  const int status = std::system(cmd.c_str());
  if (err) *err = slurp(log);
  fs::remove(log);
  return WEXITSTATUS(status);
}

}  // namespace

// --- experiment config --------------------------------------------------------

TEST(ExperimentConfigTest, KeyValuesAndOverrides) {
  auto kv = parse_key_values("name = x\n# c\n[train]\nseed = 4 \n; c\n[context]\nseparator = \" | \"\n");
  EXPECT_EQ(kv.at("name"), "x");
  EXPECT_EQ(kv.at("train.seed"), "4");
  EXPECT_EQ(kv.at("context.separator"), " | ");
  apply_overrides(kv, {"train.seed=9", "head.kind=mlp"});
  EXPECT_EQ(kv.at("train.seed"), "9");
  EXPECT_EQ(parse_key_values(format_key_values(kv)), kv);
  EXPECT_THROW(parse_key_values("[oops\n"), ConfigError);
  EXPECT_THROW(parse_key_values("novalue\n"), ConfigError);
  EXPECT_THROW(apply_overrides(kv, {"noequals"}), ConfigError);
}

TEST(ExperimentConfigTest, UnknownKeysAndBadValues) {
  EXPECT_THROW(resolve_experiment({{"name", "a"}, {"train.sed", "1"}}), ConfigError);
  EXPECT_THROW(resolve_experiment({{"task", "xx"}}), ConfigError);
  EXPECT_THROW(resolve_experiment({{"train.seed", "abc"}}), ConfigError);
  EXPECT_THROW(resolve_experiment({{"train.k_folds", "-3"}}), ConfigError);
  EXPECT_THROW(resolve_experiment({{"preprocess.remove_urls", "maybe"}}), ConfigError);
  EXPECT_THROW(resolve_experiment({{"features.schema", "bogus"}}), SchemaError);
  EXPECT_THROW(resolve_experiment({{"encoder.layers", "9"}}), ConfigError);
}

TEST(ExperimentConfigTest, TaskDefaults) {
  const auto en_a = resolve_experiment({{"task", "en_a"}});
  EXPECT_EQ(en_a.preprocess.emoji_mode, EmojiMode::strip);
  EXPECT_EQ(en_a.head.kim.conv_widths, (std::vector<std::size_t>{2, 3, 4}));
  EXPECT_EQ(en_a.encoder.layers, 4u);
  EXPECT_EQ(en_a.head.kim.input_width, 4u * 32u);
  EXPECT_EQ(en_a.head.kim.feature_dim, 7u);
  EXPECT_EQ(en_a.head.kim.fc_dim, 128u);
  EXPECT_EQ(en_a.head.kim.dropout, 0.5);
  EXPECT_EQ(en_a.train.k_folds, 5u);
  EXPECT_EQ(en_a.train.optimizer, OptimizerKind::adam);

  const auto en_b = resolve_experiment({{"task", "en_b"}});
  EXPECT_EQ(en_b.preprocess.emoji_mode, EmojiMode::to_text);
  EXPECT_EQ(en_b.head.kim.num_classes, 4u);

  const auto hi_a = resolve_experiment({{"task", "hi_a"}, {"encoder.num_layers", "12"}});
  EXPECT_TRUE(hi_a.preprocess.normalize_indic);
  EXPECT_EQ(hi_a.head.kim.conv_widths, (std::vector<std::size_t>{3}));
  EXPECT_EQ(hi_a.encoder.layers, 12u);
  EXPECT_EQ(hi_a.features.schema, (std::vector<std::string>{"profanity_frac", "sent_neg", "sent_neu", "sent_pos"}));

  const auto hi_b = resolve_experiment({{"task", "hi_b"}});
  EXPECT_EQ(hi_b.head.kind, HeadKind::mlp);
  EXPECT_EQ(hi_b.train.loss.kind, LossKind::focal);
  EXPECT_EQ(hi_b.train.loss.gamma, 2.0);
  EXPECT_EQ(hi_b.train.loss.alpha_source, WeightSource::inverse_frequency);
  EXPECT_EQ(hi_b.head.mlp.num_classes, 4u);

  const auto mr = resolve_experiment({{"task", "mr_a"}});
  EXPECT_FALSE(mr.preprocess.remove_stopwords);

  const auto ichcl = resolve_experiment({{"task", "ichcl"}});
  EXPECT_TRUE(ichcl.preprocess.transliterate_roman_hindi);
  EXPECT_EQ(ichcl.context.separator, " ");
  EXPECT_TRUE(uses_threads(ichcl.task));
}

TEST(ExperimentConfigTest, PathsStopwordsAndRunRoot) {
  TempDir dir;
  write(dir / "stop.txt", "आणि\n");
  write(dir / "exp.ini", "task = mr_a\nname = m\n[preprocess]\nstopwords_file = stop.txt\n[data]\ntrain = d/t.csv\n");
  const auto c = load_experiment(dir / "exp.ini");
  EXPECT_TRUE(c.preprocess.remove_stopwords);
  EXPECT_EQ(c.data.train, (dir / "d/t.csv").lexically_normal());
  EXPECT_EQ(c.preprocess.stopword_list.size(), 1u);
  ::setenv("HSD_RUN_ROOT", "/tmp/somewhere", 1);
  EXPECT_EQ(load_experiment(dir / "exp.ini").run_dir(), fs::path("/tmp/somewhere/m"));
  ::unsetenv("HSD_RUN_ROOT");
  EXPECT_EQ(load_experiment(dir / "exp.ini").run_dir(), fs::path("runs/m"));
  EXPECT_EQ(load_experiment(dir / "exp.ini", {"output.dir=/x"}).run_dir(), fs::path("/x/m"));
}

TEST(ExperimentConfigTest, CanonicalListingRoundTrips) {
  const auto c = resolve_experiment({{"task", "en_b"}, {"train.seed", "5"}, {"loss.class_weights", "1,2,3,4"},
                                     {"loss.kind", "weighted_ce"}, {"context.separator", " <s> "}});
  const auto back = resolve_experiment(to_key_values(c));
  EXPECT_EQ(config_hash(back), config_hash(c));
  EXPECT_EQ(to_key_values(back), to_key_values(c));
  EXPECT_EQ(config_hash(c).size(), 16u);
  const auto other = resolve_experiment({{"task", "en_b"}, {"train.seed", "6"}, {"loss.class_weights", "1,2,3,4"},
                                         {"loss.kind", "weighted_ce"}, {"context.separator", " <s> "}});
  EXPECT_NE(config_hash(other), config_hash(c));
  const auto keys = known_config_keys();
  for (const auto& [k, v] : to_key_values(c)) {
    EXPECT_NE(std::find(keys.begin(), keys.end(), k), keys.end()) << k;
  }
}

// --- commands -----------------------------------------------------------------

TEST(Preprocess, ThreeRowsIdempotentAndInputUntouched) {
  TempDir dir;
  const std::string input = "text_id,text,task_1,task_2\n1,Hi @u #tag http://x.y!,HOF,OFFN\n2,Good 😀,NOT,NONE\n3,,NOT,NONE\n";
  write(dir / "train.csv", input);
  write(dir / "exp.ini", small_config("p"));
  const auto cfg = load_experiment(dir / "exp.ini");
  const auto r = cmd_preprocess(cfg, {}, dir / "clean.csv");
  EXPECT_EQ(r.rows_in, 3u);
  EXPECT_EQ(r.rows_out, 3u);
  EXPECT_EQ(r.empty_after_cleaning, 1u);
  const auto out = load_flat_dataset(dir / "clean.csv", Language::en);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[0].text, "hi");
  EXPECT_EQ(out[1].text, "good");
  cmd_preprocess(cfg, dir / "clean.csv", dir / "clean2.csv");
  EXPECT_EQ(slurp(dir / "clean.csv"), slurp(dir / "clean2.csv"));
  EXPECT_EQ(slurp(dir / "train.csv"), input);
}

TEST(Preprocess, MissingDatasetNamesPath) {
  TempDir dir;
  write(dir / "exp.ini", small_config("p"));
  const auto cfg = load_experiment(dir / "exp.ini");
  try {
    cmd_preprocess(cfg, dir / "missing.csv", dir / "o.csv");
    FAIL();
  } catch (const LoadError& e) {
    EXPECT_NE(std::string(e.what()).find("missing.csv"), std::string::npos);
  }
}

TEST(Train, SyntheticRunLayoutAndReproducibility) {
  TempDir dir;
  write(dir / "train.csv", separable_csv(200, 1));
  write(dir / "exp.ini", small_config("syn"));
  const auto cfg = load_experiment(dir / "exp.ini", {"output.dir=" + (dir / "runs").string()});
  const auto report = cmd_train(cfg);
  EXPECT_GE(report.mean_accuracy, 0.95);
  const fs::path run = dir / "runs" / "syn";
  for (const char* f : {"config.ini", "run.json", "metrics.json"}) EXPECT_TRUE(fs::exists(run / f)) << f;
  for (int i = 0; i < 5; ++i) {
    EXPECT_TRUE(fs::exists(run / ("fold_" + std::to_string(i)) / "checkpoint"));
    EXPECT_TRUE(fs::exists(run / ("fold_" + std::to_string(i)) / "fold.json"));
  }
  const auto metrics = nlohmann::json::parse(slurp(run / "metrics.json"));
  EXPECT_EQ(metrics.at("schema_version"), 1);
  EXPECT_EQ(metrics.at("seed"), cfg.train.seed);
  EXPECT_EQ(metrics.at("config_hash"), config_hash(cfg));
  EXPECT_EQ(metrics.at("folds").size(), 5u);
  EXPECT_NEAR(metrics.at("mean").at("accuracy").get<double>(), report.mean_accuracy, 1e-15);
  const std::string first = slurp(run / "metrics.json");
  cmd_train(cfg);
  EXPECT_EQ(slurp(run / "metrics.json"), first);
}

TEST(Train, TooManyFoldsNamesClass) {
  TempDir dir;
  write(dir / "train.csv", "text_id,text,task_1,task_2\n1,a,HOF,HATE\n2,b,HOF,HATE\n3,c,NOT,NONE\n");
  write(dir / "exp.ini", small_config("k"));
  const auto cfg = load_experiment(dir / "exp.ini", {"train.k_folds=2"});
  try {
    cmd_train(cfg);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("NOT"), std::string::npos);
  }
}

TEST(PredictEvaluate, RunsEnsemblesAndEdgeCases) {
  TempDir dir;
  write(dir / "train.csv", separable_csv(120, 2));
  write(dir / "exp.ini", small_config("a"));
  const std::vector<std::string> out_dir{"output.dir=" + (dir / "runs").string()};
  cmd_train(load_experiment(dir / "exp.ini", out_dir));
  auto second = out_dir;
  second.push_back("name=b");
  second.push_back("train.seed=77");
  cmd_train(load_experiment(dir / "exp.ini", second));

  write(dir / "input.csv",
        "text_id,text\nq1,hate vile trash\nq2,love sunny friend\nq3,   \nq4,the gross idiot\nq5,kind great\n");
  const auto preds = cmd_predict(dir / "runs/a", dir / "input.csv", dir / "preds.csv");
  ASSERT_EQ(preds.size(), 5u);
  EXPECT_EQ(parse_predictions(slurp(dir / "preds.csv")).size(), 5u);
  EXPECT_EQ(preds[0].label, "HOF");
  EXPECT_EQ(preds[1].label, "NOT");
  EXPECT_EQ(preds[2].id, "q3");
  EXPECT_EQ(preds[2].label, "HOF");  // empty text: majority class of the training set (tied, lower index)

  // Soft-average ensemble equals argmax of the mean of both runs.
  write(dir / "ens.json", R"({"members":["runs/a","runs/b"],"mode":"soft_average"})");
  const auto ens = cmd_predict(dir / "ens.json", dir / "input.csv", {});
  const auto ra = TrainedRun::load(dir / "runs/a").predict_file(dir / "input.csv");
  const auto rb = TrainedRun::load(dir / "runs/b").predict_file(dir / "input.csv");
  for (const auto& p : ens) {
    if (p.id == "q3") continue;
    const auto& x = ra.at(p.id);
    const auto& y = rb.at(p.id);
    const std::size_t best = (x[0] + y[0]) >= (x[1] + y[1]) ? 0 : 1;
    EXPECT_EQ(p.label, class_names(LabelKind::coarse)[best]) << p.id;
  }
  write(dir / "even.json", R"({"members":["runs/a","runs/b"],"mode":"majority_vote"})");
  EXPECT_THROW(cmd_predict(dir / "even.json", dir / "input.csv", {}), ValidationError);

  write(dir / "dup.csv", "text_id,text\nz,a\nz,b\n");
  EXPECT_THROW(cmd_predict(dir / "runs/a", dir / "dup.csv", {}), ValidationError);

  // Evaluation.
  write(dir / "gold.csv", "text_id,text,task_1\nq1,x,HOF\nq2,x,NOT\nq3,x,HOF\nq4,x,HOF\nq5,x,NOT\n");
  write(dir / "perfect.csv", "id,label\nq1,HOF\nq2,NOT\nq3,HOF\nq4,HOF\nq5,NOT\n");
  const auto perfect = cmd_evaluate(dir / "perfect.csv", dir / "gold.csv", {}, dir / "eval.json");
  EXPECT_EQ(perfect.accuracy, 1.0);
  EXPECT_EQ(perfect.macro_f1, 1.0);
  EXPECT_TRUE(fs::exists(dir / "eval.json"));
  write(dir / "permuted.csv", "id,label\nq5,NOT\nq3,HOF\nq1,HOF\nq4,HOF\nq2,NOT\n");
  const auto permuted = cmd_evaluate(dir / "permuted.csv", dir / "gold.csv");
  EXPECT_EQ(format_evaluation_json(permuted), format_evaluation_json(perfect));

  write(dir / "g2.csv", "text_id,text,task_1\na,x,HOF\nb,x,NOT\n");
  write(dir / "p2.csv", "id,label\na,HOF\nb,HOF\n");
  const auto hand = cmd_evaluate(dir / "p2.csv", dir / "g2.csv");
  EXPECT_DOUBLE_EQ(hand.accuracy, 0.5);
  EXPECT_DOUBLE_EQ(hand.macro_f1, 1.0 / 3.0);
  EXPECT_EQ(hand.confusion, (std::vector<std::vector<std::size_t>>{{1, 0}, {1, 0}}));

  write(dir / "p3.csv", "id,label\na,HOF\nc,HOF\n");
  try {
    cmd_evaluate(dir / "p3.csv", dir / "g2.csv");
    FAIL();
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("b"), std::string::npos);
    EXPECT_NE(msg.find("c"), std::string::npos);
  }
}

TEST(Train, ConversationalTaskFromThreads) {
  TempDir dir;
  std::string threads = "[";
  for (int t = 0; t < 12; ++t) {
    const bool hof = t % 2 == 0;
    const std::string w = hof ? "nasty vile" : "lovely kind";
    const std::string lab = hof ? "HOF" : "NOT";
    if (t) threads += ",";
    threads += R"({"id":"t)" + std::to_string(t) + R"(","text":")" + w + R"( post","label":")" + lab +
               R"(","comments":[{"id":"c)" + std::to_string(t) + R"(","text":")" + w + R"( reply","label":")" + lab +
               R"(","replies":[{"id":"r)" + std::to_string(t) + R"(","text":")" + w + R"(","label":")" + lab + R"("}]}]})";
  }
  threads += "]";
  write(dir / "train.json", threads);
  write(dir / "exp.ini",
        "name = conv\ntask = ichcl\n[data]\ntrain = train.json\ntest = train.json\n[train]\nmax_epochs = 4\nk_folds = 3\n[output]\ndir = runs\n");
  const auto cfg = load_experiment(dir / "exp.ini");
  const auto report = cmd_train(cfg);
  EXPECT_EQ(report.folds.size(), 3u);
  const auto preds = parse_predictions(slurp(dir / "runs/conv/predictions.csv"));
  EXPECT_EQ(preds.size(), 36u);
  const auto eval = cmd_evaluate(dir / "runs/conv/predictions.csv", dir / "train.json");
  EXPECT_EQ(eval.count, 36u);
}

// --- binary -------------------------------------------------------------------

TEST(Binary, ExitCodes) {
  TempDir dir;
  write(dir / "train.csv", separable_csv(60, 3));
  write(dir / "exp.ini", small_config("bin", ""));
  const std::string cfg = (dir / "exp.ini").string();
  const std::string out = "--output.dir=" + (dir / "runs").string();
  EXPECT_EQ(run_cli("train -c " + cfg + " " + out + " --train.k_folds=3"), 0);
  EXPECT_TRUE(fs::exists(dir / "runs/bin/metrics.json"));

  std::string err;
  EXPECT_EQ(run_cli("preprocess -c " + cfg + " -i " + (dir / "nope.csv").string() + " -o " +
                        (dir / "x.csv").string(), &err),
            2);
  EXPECT_NE(err.find("nope.csv"), std::string::npos) << err;

  EXPECT_EQ(run_cli("train -c " + cfg + " " + out + " --train.k_folds=31", &err), 2);
  EXPECT_NE(err.find("class"), std::string::npos) << err;

  EXPECT_EQ(run_cli("train -c " + cfg + " " + out + " --train.learning_rate=1e300", &err), 3);
  EXPECT_NE(err.find("fold"), std::string::npos) << err;
  EXPECT_NE(err.find("epoch"), std::string::npos) << err;

  EXPECT_EQ(run_cli("train -c " + cfg + " --train.bogus=1", &err), 2);
  EXPECT_EQ(run_cli("frobnicate"), 2);

  write(dir / "in.csv", "text_id,text\na,hate vile\nb,love kind\n");
  EXPECT_EQ(run_cli("predict -m " + (dir / "runs/bin").string() + " -i " + (dir / "in.csv").string() + " -o " +
                    (dir / "p.csv").string()),
            0);
  write(dir / "gold.csv", "text_id,text,task_1\na,x,HOF\nb,x,NOT\n");
  EXPECT_EQ(run_cli("evaluate -p " + (dir / "p.csv").string() + " -g " + (dir / "gold.csv").string()), 0);
  write(dir / "gold2.csv", "text_id,text,task_1\na,x,HOF\nzz,x,NOT\n");
  EXPECT_EQ(run_cli("evaluate -p " + (dir / "p.csv").string() + " -g " + (dir / "gold2.csv").string(), &err), 2);
  EXPECT_NE(err.find("zz"), std::string::npos) << err;
}
