// Command-line front end: dataset generation, the two-stage sentiment->spam
// pipeline, adversarial/semi-supervised training, evaluation, and the
// attribution/attention reports. Exit codes: 1 config, 2 data, 3 numeric.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vatspam/vatspam.hpp"

namespace fs = std::filesystem;
using namespace vatspam;

namespace {

// flags > environment > config file > defaults
struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> run_dir;

  RunConfig resolve() const {
    RunConfig rc;
    if (!config_path.empty()) rc = RunConfig::from_file(config_path);
    if (const char* e = std::getenv("RUN_SEED")) {
      try {
        rc.seed = std::stoull(e);
      } catch (const std::exception&) {
        throw config_error("RUN_SEED must be an unsigned integer");
      }
    }
    if (const char* e = std::getenv("RUN_DIR")) rc.run_dir = e;
    if (seed) rc.seed = *seed;
    if (run_dir) rc.run_dir = *run_dir;
    // One run seed fans out to every component.
    rc.model.seed = rc.seed;
    rc.train.seed = rc.seed;
    fs::create_directories(rc.run_dir);
    return rc;
  }

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "RunConfig JSON file");
    cmd->add_option("--seed", seed, "run seed (overrides RUN_SEED and config)");
    cmd->add_option("--run-dir", run_dir, "artifact directory (overrides RUN_DIR and config)");
  }
};

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

TransformerClassifier load_model_or_die(const std::string& path) {
  if (!fs::exists(path)) throw data_error("checkpoint not found: " + path);
  return load_checkpoint(path);
}

Vocab load_vocab_or_die(const std::string& path) {
  if (!fs::exists(path)) throw data_error("vocab not found: " + path);
  return Vocab::load(path);
}

// Ablation support: drop the leading stage-1 tag so tagged CSVs can feed an
// untagged baseline without regenerating data.
std::string strip_sentiment_tag(const std::string& text) {
  for (const char* tag : {"TAGPOS ", "TAGNEU ", "TAGNEG "})
    if (text.rfind(tag, 0) == 0) return text.substr(7);
  return text;
}

void print_metrics_line(const Metrics& m) {
  std::printf("P=%g R=%g Acc=%g F1=%g\n", m.precision, m.recall, m.accuracy, m.f1);
}

void save_eval_csv(const Metrics& m, const std::string& path) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "precision,recall,accuracy,f1,tp,fp,tn,fn\n%.17g,%.17g,%.17g,%.17g,%lld,%lld,%lld,%lld\n",
                m.precision, m.recall, m.accuracy, m.f1, m.tp, m.fp, m.tn, m.fn);
  write_text_file(path, buf);
}

// Shared by train-sentiment and train-spam.
struct TrainArtifacts {
  Metrics final_metrics;
  int vocab_size = 0;
};

TrainArtifacts run_training(RunConfig rc, const std::string& train_csv,
                            const std::string& eval_csv, const std::string& unlabeled_csv,
                            bool strip_tags, const std::string& model_file,
                            const std::string& vocab_file, const std::string& metrics_file) {
  Dataset train = load_csv(train_csv, true);
  if (strip_tags)
    for (auto& ex : train) ex.text = strip_sentiment_tag(ex.text);

  Vocab vocab = build_vocab(texts_of(train), rc.model.vocab_size, 2);
  rc.model.vocab_size = vocab.size();
  TransformerClassifier model(rc.model);

  auto train_enc = encode_labeled(train, vocab, rc.model.max_len);
  std::vector<LabeledSeq> eval_enc;
  if (!eval_csv.empty()) {
    Dataset ev = load_csv(eval_csv, true);
    if (strip_tags)
      for (auto& ex : ev) ex.text = strip_sentiment_tag(ex.text);
    eval_enc = encode_labeled(ev, vocab, rc.model.max_len);
  }
  const std::vector<LabeledSeq>* eval_ptr = eval_enc.empty() ? nullptr : &eval_enc;

  TrainHistory hist;
  if (rc.train.adv.method == AdvMethod::vat) {
    if (unlabeled_csv.empty())
      throw config_error("--adv vat needs --unlabeled (CSV of texts without labels)");
    Dataset unl = load_csv(unlabeled_csv, false);
    if (strip_tags)
      for (auto& ex : unl) ex.text = strip_sentiment_tag(ex.text);
    auto unl_enc = encode_unlabeled(unl, vocab, rc.model.max_len);
    hist = train_semisupervised(model, train_enc, unl_enc, rc.train, eval_ptr);
  } else {
    hist = train_supervised(model, train_enc, rc.train, eval_ptr);
  }

  save_checkpoint(model, join_path(rc.run_dir, model_file));
  vocab.save(join_path(rc.run_dir, vocab_file));
  hist.save_csv(join_path(rc.run_dir, metrics_file));

  TrainArtifacts out;
  out.final_metrics = evaluate(model, eval_ptr ? *eval_ptr : train_enc);
  out.vocab_size = vocab.size();
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-stage sentiment->spam pipeline with adversarial training"};
  app.require_subcommand(1);

  // ---- gen-data ----
  auto* gen = app.add_subcommand("gen-data", "write a seeded synthetic corpus as CSV");
  Common gen_c;
  gen_c.attach(gen);
  std::string gen_kind = "spam", gen_out = "data.csv", gen_split;
  int gen_n = 1000;
  double gen_spam_frac = 0.5;
  gen->add_option("--kind", gen_kind, "sentiment|spam|unlabeled")
      ->check(CLI::IsMember({"sentiment", "spam", "unlabeled"}));
  gen->add_option("--n", gen_n, "number of rows")->check(CLI::PositiveNumber);
  gen->add_option("--spam-frac", gen_spam_frac, "spam fraction (kind=spam)");
  gen->add_option("--out", gen_out, "output CSV path (relative to run dir)");
  gen->add_option("--split", gen_split,
                  "comma fractions, e.g. 0.8,0.1,0.1 -> <out>.train/.val/.test");

  // ---- train-sentiment ----
  auto* ts = app.add_subcommand("train-sentiment", "train the stage-1 sentiment model");
  Common ts_c;
  ts_c.attach(ts);
  std::string ts_train, ts_eval;
  std::optional<int> ts_steps;
  ts->add_option("--train", ts_train, "labeled sentiment CSV")->required();
  ts->add_option("--eval", ts_eval, "optional eval CSV");
  ts->add_option("--steps", ts_steps, "override train.steps");

  // ---- tag ----
  auto* tg = app.add_subcommand("tag", "prefix texts with stage-1 sentiment tags");
  Common tg_c;
  tg_c.attach(tg);
  std::string tg_in, tg_out = "tagged.csv", tg_ckpt, tg_vocab;
  tg->add_option("--input", tg_in, "CSV to tag")->required();
  tg->add_option("--output", tg_out, "tagged CSV path (relative to run dir)");
  tg->add_option("--checkpoint", tg_ckpt, "sentiment checkpoint (default run dir)");
  tg->add_option("--vocab", tg_vocab, "sentiment vocab (default run dir)");

  // ---- train-spam ----
  auto* tsp = app.add_subcommand("train-spam", "train the stage-2 spam model");
  Common tsp_c;
  tsp_c.attach(tsp);
  std::string tsp_train, tsp_eval, tsp_unl, tsp_adv;
  std::optional<int> tsp_steps, tsp_head_layers;
  std::optional<double> tsp_eps, tsp_lds_weight;
  bool tsp_no_tags = false;
  tsp->add_option("--train", tsp_train, "labeled spam CSV")->required();
  tsp->add_option("--eval", tsp_eval, "optional eval CSV");
  tsp->add_option("--unlabeled", tsp_unl, "unlabeled CSV (required for --adv vat)");
  tsp->add_option("--adv", tsp_adv, "none|fgm|pgd|vat (overrides config)")
      ->check(CLI::IsMember({"none", "fgm", "pgd", "vat"}));
  tsp->add_option("--epsilon", tsp_eps, "perturbation radius override");
  tsp->add_option("--lds-weight", tsp_lds_weight, "LDS term weight override");
  tsp->add_option("--steps", tsp_steps, "override train.steps");
  tsp->add_option("--head-layers", tsp_head_layers, "classification head depth, 1 or 2");
  tsp->add_flag("--no-sentiment-tags", tsp_no_tags, "strip leading sentiment tags (ablation)");

  // ---- evaluate ----
  auto* ev = app.add_subcommand("evaluate", "score a checkpoint on a labeled CSV");
  Common ev_c;
  ev_c.attach(ev);
  std::string ev_data, ev_ckpt, ev_vocab;
  bool ev_no_tags = false;
  ev->add_option("--data", ev_data, "labeled CSV")->required();
  ev->add_option("--checkpoint", ev_ckpt, "model checkpoint (default spam model in run dir)");
  ev->add_option("--vocab", ev_vocab, "vocab file (default spam vocab in run dir)");
  ev->add_flag("--no-sentiment-tags", ev_no_tags, "strip leading sentiment tags");

  // ---- explain ----
  auto* ex = app.add_subcommand("explain", "integrated-gradients word importance HTML");
  Common ex_c;
  ex_c.attach(ex);
  std::string ex_data, ex_ckpt, ex_vocab;
  int ex_limit = 10;
  ex->add_option("--data", ex_data, "labeled CSV")->required();
  ex->add_option("--checkpoint", ex_ckpt, "model checkpoint");
  ex->add_option("--vocab", ex_vocab, "vocab file");
  ex->add_option("--limit", ex_limit, "max examples to render")->check(CLI::PositiveNumber);

  // ---- attention ----
  auto* at = app.add_subcommand("attention", "per-head attention heatmaps for one text");
  Common at_c;
  at_c.attach(at);
  std::string at_text, at_ckpt, at_vocab;
  at->add_option("--text", at_text, "input text")->required();
  at->add_option("--checkpoint", at_ckpt, "model checkpoint");
  at->add_option("--vocab", at_vocab, "vocab file");

  // ---- improve ----
  auto* im = app.add_subcommand("improve", "inject URL tags (self-improvement pass)");
  Common im_c;
  im_c.attach(im);
  std::string im_in, im_out = "improved.csv";
  bool im_keep = false;
  im->add_option("--input", im_in, "CSV to rewrite")->required();
  im->add_option("--output", im_out, "output CSV path (relative to run dir)");
  im->add_flag("--keep-url-body", im_keep, "keep URL text after its tag");

  // ---- compare ----
  auto* cp = app.add_subcommand("compare", "side-by-side head grids for two checkpoints");
  Common cp_c;
  cp_c.attach(cp);
  std::string cp_a, cp_b, cp_va, cp_vb, cp_text, cp_na = "left", cp_nb = "right";
  cp->add_option("--checkpoint-a", cp_a, "first checkpoint")->required();
  cp->add_option("--checkpoint-b", cp_b, "second checkpoint")->required();
  cp->add_option("--vocab-a", cp_va, "first vocab")->required();
  cp->add_option("--vocab-b", cp_vb, "second vocab")->required();
  cp->add_option("--text", cp_text, "input text")->required();
  cp->add_option("--name-a", cp_na, "first panel label");
  cp->add_option("--name-b", cp_nb, "second panel label");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help/--version
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  }

  try {
    if (gen->parsed()) {
      RunConfig rc = gen_c.resolve();
      Dataset data;
      if (gen_kind == "sentiment")
        data = synth::gen_sentiment(gen_n, rc.seed);
      else if (gen_kind == "unlabeled")
        data = synth::gen_unlabeled(gen_n, rc.seed);
      else
        data = synth::gen_spam(gen_n, rc.seed, gen_spam_frac);
      if (gen_split.empty()) {
        const std::string path = join_path(rc.run_dir, gen_out);
        save_csv(data, path);
        std::printf("gen-data: %d %s rows -> %s\n", gen_n, gen_kind.c_str(), path.c_str());
      } else {
        std::vector<double> fracs;
        for (const auto& part : CLI::detail::split(gen_split, ','))
          fracs.push_back(std::stod(part));
        auto parts = split_dataset(data, fracs);
        static const char* suffix[] = {".train", ".val", ".test"};
        std::string names;
        for (std::size_t i = 0; i < parts.size() && i < 3; ++i) {
          const std::string path = join_path(rc.run_dir, gen_out + suffix[i]);
          save_csv(parts[i], path);
          names += (i ? " " : "") + path;
        }
        std::printf("gen-data: %d %s rows split -> %s\n", gen_n, gen_kind.c_str(), names.c_str());
      }
    } else if (ts->parsed()) {
      RunConfig rc = ts_c.resolve();
      if (ts_steps) rc.train.steps = *ts_steps;
      auto art = run_training(rc, ts_train, ts_eval, "", false, "sentiment_model.json",
                              "sentiment_vocab.txt", "sentiment_metrics.csv");
      std::printf("train-sentiment: vocab %d, %s acc %.4f -> %s\n", art.vocab_size,
                  ts_eval.empty() ? "train" : "eval", art.final_metrics.accuracy,
                  rc.run_dir.c_str());
    } else if (tg->parsed()) {
      RunConfig rc = tg_c.resolve();
      const std::string ckpt =
          tg_ckpt.empty() ? join_path(rc.run_dir, "sentiment_model.json") : tg_ckpt;
      const std::string vpath =
          tg_vocab.empty() ? join_path(rc.run_dir, "sentiment_vocab.txt") : tg_vocab;
      TransformerClassifier model = load_model_or_die(ckpt);
      Vocab vocab = load_vocab_or_die(vpath);
      Dataset data = load_csv(tg_in, false);
      TagSummary sum;
      Dataset tagged = stage1_tag(data, model, vocab, &sum);
      const std::string out_path = join_path(rc.run_dir, tg_out);
      save_csv(tagged, out_path);
      write_json_file(join_path(rc.run_dir, "tag_distribution.json"),
                      nlohmann::json{{"positive", sum.positive},
                                     {"neutral", sum.neutral},
                                     {"negative", sum.negative}});
      std::printf("tag: %zu rows (pos %lld / neu %lld / neg %lld) -> %s\n", tagged.size(),
                  sum.positive, sum.neutral, sum.negative, out_path.c_str());
    } else if (tsp->parsed()) {
      RunConfig rc = tsp_c.resolve();
      if (!tsp_adv.empty()) rc.train.adv.method = adv_method_from(tsp_adv);
      if (tsp_eps) rc.train.adv.epsilon = *tsp_eps;
      if (tsp_lds_weight) rc.train.lds_weight = *tsp_lds_weight;
      if (tsp_steps) rc.train.steps = *tsp_steps;
      if (tsp_head_layers) rc.model.head_layers = *tsp_head_layers;
      auto art = run_training(rc, tsp_train, tsp_eval, tsp_unl, tsp_no_tags, "spam_model.json",
                              "spam_vocab.txt", "spam_metrics.csv");
      std::printf("train-spam: vocab %d, %s acc %.4f -> %s\n", art.vocab_size,
                  tsp_eval.empty() ? "train" : "eval", art.final_metrics.accuracy,
                  rc.run_dir.c_str());
    } else if (ev->parsed()) {
      RunConfig rc = ev_c.resolve();
      const std::string ckpt =
          ev_ckpt.empty() ? join_path(rc.run_dir, "spam_model.json") : ev_ckpt;
      const std::string vpath =
          ev_vocab.empty() ? join_path(rc.run_dir, "spam_vocab.txt") : ev_vocab;
      TransformerClassifier model = load_model_or_die(ckpt);
      Vocab vocab = load_vocab_or_die(vpath);
      Dataset data = load_csv(ev_data, true);
      if (ev_no_tags)
        for (auto& e : data) e.text = strip_sentiment_tag(e.text);
      auto enc = encode_labeled(data, vocab, model.config().max_len);
      Metrics m = evaluate(model, enc);
      save_eval_csv(m, join_path(rc.run_dir, "eval_metrics.csv"));
      print_metrics_line(m);
    } else if (ex->parsed()) {
      RunConfig rc = ex_c.resolve();
      const std::string ckpt =
          ex_ckpt.empty() ? join_path(rc.run_dir, "spam_model.json") : ex_ckpt;
      const std::string vpath =
          ex_vocab.empty() ? join_path(rc.run_dir, "spam_vocab.txt") : ex_vocab;
      TransformerClassifier model = load_model_or_die(ckpt);
      Vocab vocab = load_vocab_or_die(vpath);
      Dataset data = load_csv(ex_data, true);
      int rendered = 0;
      double gap_sum = 0.0;
      for (const auto& e : data) {
        if (rendered >= ex_limit) break;
        TokenSeq seq = encode(tokenize(e.text), vocab, model.config().max_len);
        AttributionRecord rec = integrated_gradients(model, seq, rc.ig);
        ImportanceView view;
        view.tokens = rec.tokens;
        view.scores = word_importance(rec);
        view.true_label = *e.label ? "spam" : "ham";
        const auto probs = model.predict_proba(seq);
        const bool spam = probs[1] >= 0.5;
        view.predicted_label = spam ? "spam" : "ham";
        view.predicted_prob = spam ? probs[1] : probs[0];
        double total = 0.0;
        for (double s : rec.scores) total += s;
        view.aggregate = total;
        write_text_file(
            join_path(rc.run_dir, "importance_" + std::to_string(e.id) + ".html"),
            render_importance_html(view));
        gap_sum += rec.completeness_gap;
        ++rendered;
      }
      if (rendered == 0) throw data_error("explain: no examples to render");
      std::printf("explain: %d reports, mean completeness gap %.3g -> %s\n", rendered,
                  gap_sum / rendered, rc.run_dir.c_str());
    } else if (at->parsed()) {
      RunConfig rc = at_c.resolve();
      const std::string ckpt =
          at_ckpt.empty() ? join_path(rc.run_dir, "spam_model.json") : at_ckpt;
      const std::string vpath =
          at_vocab.empty() ? join_path(rc.run_dir, "spam_vocab.txt") : at_vocab;
      TransformerClassifier model = load_model_or_die(ckpt);
      Vocab vocab = load_vocab_or_die(vpath);
      TokenSeq seq = encode(tokenize(at_text), vocab, model.config().max_len);
      AttentionGrid grid = extract_attention(model, seq);
      std::vector<HeadRef> heads;
      for (int l = 0; l < grid.layers; ++l)
        for (int h = 0; h < grid.heads; ++h) {
          HeatmapView view;
          view.matrix = grid.at(l, h);
          view.labels = grid.labels;
          view.n = grid.n;
          view.caption = "Head " + std::to_string(l + 1) + "-" + std::to_string(h + 1);
          write_text_file(join_path(rc.run_dir, "attn_" + std::to_string(l + 1) + "_" +
                                                    std::to_string(h + 1) + ".svg"),
                          render_attention_svg(view));
          heads.push_back({l, h});
        }
      write_text_file(join_path(rc.run_dir, "grid.html"),
                      render_head_grid({&grid}, {"model"}, heads));
      std::printf("attention: %dx%d heads over %d tokens -> %s\n", grid.layers, grid.heads,
                  grid.n, rc.run_dir.c_str());
    } else if (im->parsed()) {
      RunConfig rc = im_c.resolve();
      const bool keep = im_keep || rc.keep_url_body;
      Dataset data = load_csv(im_in, false);
      UrlTagSummary sum;
      Dataset improved = improve(data, keep, &sum);
      const std::string out_path = join_path(rc.run_dir, im_out);
      save_csv(improved, out_path);
      write_json_file(join_path(rc.run_dir, "url_tags.json"),
                      nlohmann::json{{"short", sum.short_urls}, {"long", sum.long_urls}});
      std::printf("improve: %zu rows (TAGURLS %lld / TAGURLL %lld) -> %s\n", improved.size(),
                  sum.short_urls, sum.long_urls, out_path.c_str());
    } else if (cp->parsed()) {
      RunConfig rc = cp_c.resolve();
      TransformerClassifier ma = load_model_or_die(cp_a);
      TransformerClassifier mb = load_model_or_die(cp_b);
      Vocab va = load_vocab_or_die(cp_va);
      Vocab vb = load_vocab_or_die(cp_vb);
      TokenSeq sa = encode(tokenize(cp_text), va, ma.config().max_len);
      TokenSeq sb = encode(tokenize(cp_text), vb, mb.config().max_len);
      AttentionGrid ga = extract_attention(ma, sa);
      AttentionGrid gb = extract_attention(mb, sb);
      const int layers = std::min(ga.layers, gb.layers);
      const int hcount = std::min(ga.heads, gb.heads);
      std::vector<HeadRef> heads;
      for (int l = 0; l < layers; ++l)
        for (int h = 0; h < hcount; ++h) heads.push_back({l, h});
      write_text_file(join_path(rc.run_dir, "grid.html"),
                      render_head_grid({&ga, &gb}, {cp_na, cp_nb}, heads));
      std::printf("compare: %zu head pairs -> %s\n", heads.size(), rc.run_dir.c_str());
    }
  } catch (const config_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const data_error& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 3;
  }
  return 0;
}
