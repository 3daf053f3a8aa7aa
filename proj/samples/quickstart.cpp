// End-to-end tour at toy scale: generate a corpus, train the sentiment
// tagger, tag the spam data, train the spam model, run the URL-tag
// improvement pass, and write one importance report plus one head grid.
#include <cstdio>
#include <filesystem>

#include "vatspam/vatspam.hpp"

using namespace vatspam;

int main() {
  const std::uint64_t seed = 7;
  const std::string out_dir = "quickstart_out";
  std::filesystem::create_directories(out_dir);

  ModelConfig mc;
  mc.layers = 2;
  mc.heads = 2;
  mc.hidden = 32;
  mc.ff_dim = 64;
  mc.max_len = 32;
  mc.seed = seed;

  TrainConfig tc;
  tc.steps = 120;
  tc.seed = seed;

  // Stage 1: sentiment model on its own corpus.
  Dataset sent = synth::gen_sentiment(1200, seed);
  Vocab svoc = build_vocab(texts_of(sent), 512, 2);
  ModelConfig smc = mc;
  smc.vocab_size = svoc.size();
  TransformerClassifier sentiment(smc);
  train_supervised(sentiment, encode_labeled(sent, svoc, smc.max_len), tc);
  std::printf("stage 1: sentiment model trained (vocab %d)\n", svoc.size());

  // Stage 2: tag the spam corpus with stage-1 decisions, then train on it.
  Dataset train = synth::gen_spam(400, seed + 1);
  Dataset test = synth::gen_spam(200, seed + 2);
  TagSummary tags;
  Dataset train_tagged = stage1_tag(train, sentiment, svoc, &tags);
  Dataset test_tagged = stage1_tag(test, sentiment, svoc);
  std::printf("stage 2: tags pos %lld / neu %lld / neg %lld\n", tags.positive, tags.neutral,
              tags.negative);

  auto fit = [&](const Dataset& tr, const Dataset& te) {
    Vocab voc = build_vocab(texts_of(tr), 512, 2);
    ModelConfig cfg = mc;
    cfg.vocab_size = voc.size();
    TransformerClassifier model(cfg);
    train_supervised(model, encode_labeled(tr, voc, cfg.max_len), tc);
    Metrics m = evaluate(model, encode_labeled(te, voc, cfg.max_len));
    return std::tuple{std::move(model), std::move(voc), m};
  };

  auto [spam_model, spam_voc, pre] = fit(train_tagged, test_tagged);
  std::printf("tagged model:   acc %.3f  precision %.3f\n", pre.accuracy, pre.precision);

  // Self-improvement: URL bodies become TAGURLS/TAGURLL tokens.
  UrlTagSummary urls;
  Dataset train_improved = improve(train_tagged, false, &urls);
  Dataset test_improved = improve(test_tagged);
  auto [improved_model, improved_voc, post] = fit(train_improved, test_improved);
  std::printf("improved model: acc %.3f  precision %.3f  (TAGURLS %lld, TAGURLL %lld)\n",
              post.accuracy, post.precision, urls.short_urls, urls.long_urls);

  // Reports for the first improved test sentence.
  const Example& probe = test_improved.front();
  TokenSeq seq = encode(tokenize(probe.text), improved_voc, mc.max_len);
  IGConfig ig;
  ig.steps = 64;
  AttributionRecord rec = integrated_gradients(improved_model, seq, ig);
  ImportanceView view;
  view.tokens = rec.tokens;
  view.scores = word_importance(rec);
  view.true_label = *probe.label ? "spam" : "ham";
  const auto probs = improved_model.predict_proba(seq);
  view.predicted_label = probs[1] >= 0.5 ? "spam" : "ham";
  view.predicted_prob = probs[1] >= 0.5 ? probs[1] : probs[0];
  for (double s : rec.scores) view.aggregate += s;
  write_text_file(out_dir + "/importance_1.html", render_importance_html(view));

  AttentionGrid grid = extract_attention(improved_model, seq);
  std::vector<HeadRef> heads;
  for (int l = 0; l < grid.layers; ++l)
    for (int h = 0; h < grid.heads; ++h) heads.push_back({l, h});
  write_text_file(out_dir + "/grid.html", render_head_grid({&grid}, {"improved"}, heads));
  std::printf("reports -> %s/importance_1.html, %s/grid.html\n", out_dir.c_str(),
              out_dir.c_str());
  return 0;
}
