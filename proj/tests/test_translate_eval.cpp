#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mvnmt/eval.hpp"
#include "mvnmt/translate.hpp"
#include "test_util.hpp"

using namespace mvnmt;

namespace {

Model toy_model(uint64_t seed, Variant v = Variant::kVnmt, double init_std = 0.1) {
  ModelConfig mc;
  mc.variant = v;
  mc.d_h = 6;
  mc.d_emb = 4;
  mc.d_z = 3;
  mc.vocab_src = 4;
  mc.vocab_tgt = 4;
  Model model(mc);
  Rng rng(seed);
  model.initialize(rng, init_std);
  return model;
}

TokenSeq toks(const std::string& s) { return split_tokens(s); }

}  // namespace

TEST_CASE("beam of one is exactly stepwise greedy") {
  const std::vector<int> src = {2, 3, 0};
  for (uint64_t seed = 1; seed <= 25; ++seed) {
    Model model = toy_model(seed, seed % 2 ? Variant::kVnmt : Variant::kNmt, 0.3);
    BeamOptions opts;
    opts.beam_size = 1;
    opts.max_len = 8;
    Hypothesis beam = Translator(model, opts).translate(src);
    Hypothesis greedy = testutil::greedy_decode(model, src, 8);
    CHECK(beam.tokens == greedy.tokens);
    CHECK(beam.log_prob == greedy.log_prob);
  }
}

TEST_CASE("uniform model ties break to the shortest lexicographically smallest sequence") {
  Model model = toy_model(1, Variant::kNmt, 0.0);  // all-zero parameters: uniform everywhere
  BeamOptions opts;
  opts.beam_size = 4;
  opts.max_len = 3;
  Hypothesis hyp = Translator(model, opts).translate({2, 0});
  // every sequence has the same score; EOS-only is shortest and smallest
  CHECK(hyp.tokens == std::vector<int>{0});
  CHECK(hyp.finished);
}

TEST_CASE("wide beams recover the exhaustive argmax over 100 random checkpoints") {
  const std::vector<int> src = {2, 3, 0};
  for (uint64_t seed = 1; seed <= 100; ++seed) {
    Model model = toy_model(seed * 13 + 5, Variant::kVnmt, 0.6);
    BeamOptions opts;
    opts.beam_size = 64;
    opts.max_len = 3;
    Hypothesis beam = Translator(model, opts).translate(src);
    Hypothesis oracle = testutil::enumerate_best(model, src, 3);
    CHECK(beam.tokens == oracle.tokens);
    CHECK(beam.log_prob == doctest::Approx(oracle.log_prob).epsilon(1e-12));
  }
}

TEST_CASE("larger beams never return worse hypotheses") {
  const std::vector<int> src = {3, 2, 0};
  for (uint64_t seed = 1; seed <= 100; ++seed) {
    Model model = toy_model(seed * 31 + 2, Variant::kVnmt, 0.5);
    double prev = -1e300;
    for (int64_t b : {1, 2, 4, 8, 16}) {
      BeamOptions opts;
      opts.beam_size = b;
      opts.max_len = 5;
      Hypothesis hyp = Translator(model, opts).translate(src);
      CHECK(hyp.log_prob >= prev - 1e-12);
      prev = hyp.log_prob;
    }
  }
}

TEST_CASE("returned scores recompute through the teacher-forced path") {
  const std::vector<int> src = {2, 2, 3, 0};
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    Model model = toy_model(seed * 7 + 3, Variant::kVnmt, 0.4);
    BeamOptions opts;
    opts.beam_size = 12;
    opts.max_len = 8;
    Hypothesis hyp = Translator(model, opts).translate(src);
    REQUIRE(hyp.finished);
    const double recomputed = testutil::sequence_loglik(model, src, hyp.tokens);
    CHECK(std::abs(recomputed - hyp.log_prob) < 1e-9);
  }
}

TEST_CASE("translation is deterministic for a fixed checkpoint") {
  Model model = toy_model(99, Variant::kVnmt, 0.4);
  BeamOptions opts;
  Hypothesis a = Translator(model, opts).translate({2, 3, 2, 0});
  Hypothesis b = Translator(model, opts).translate({2, 3, 2, 0});
  CHECK(a.tokens == b.tokens);
  CHECK(a.log_prob == b.log_prob);
  CHECK(opts.beam_size == 12);  // paper's default beam width
}

TEST_CASE("zeroed injection matrices make translations latent-invariant") {
  Model model = toy_model(123, Variant::kVnmt, 0.4);
  for (const char* v : {"dec.gru2.V_r", "dec.gru2.V_o", "dec.gru2.V_c"})
    std::fill(model.params().at(v).data.begin(), model.params().at(v).data.end(), 0.0);
  BeamOptions opts;
  Translator tr(model, opts);
  const std::vector<int> src = {3, 2, 0};

  Hypothesis base = tr.translate(src);
  Rng rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    Tensor h_z({3});
    for (double& x : h_z.data) x = rng.normal(0.0, 2.0);
    Hypothesis forced = tr.translate_with_latent(src, h_z);
    CHECK(forced.tokens == base.tokens);
    CHECK(forced.log_prob == base.log_prob);
  }

  // with live injection matrices the latent does change the distribution
  Model live = toy_model(123, Variant::kVnmt, 0.4);
  Translator tr2(live, opts);
  Tensor far({3}, {4.0, -4.0, 4.0});
  Hypothesis moved = tr2.translate_with_latent(src, far);
  Hypothesis mean = tr2.translate(src);
  const bool differs = moved.tokens != mean.tokens || moved.log_prob != mean.log_prob;
  CHECK(differs);
}

TEST_CASE("corpus bleu matches the hand-worked values") {
  CHECK(bleu_corpus({toks("a b c d e f")}, {toks("a b c d e f")}) == 1.0);
  CHECK(bleu_corpus({toks("x y z")}, {toks("a b c")}) == 0.0);
  // precisions 5/6, 4/5, 3/4, 2/3 with BP 1: (1/3)^(1/4)
  const double bleu = bleu_corpus({toks("a b c d e f")}, {toks("a b c d e g")});
  CHECK(std::abs(bleu - 0.7598356856515925) < 1e-4);
  CHECK(bleu == doctest::Approx(std::pow(1.0 / 3.0, 0.25)).epsilon(1e-12));
}

TEST_CASE("brevity penalty punishes short hypotheses") {
  // 4 matched tokens out of 4, reference 6 long: BP = exp(1 - 6/4)
  const double bleu = bleu_corpus({toks("a b c d")}, {toks("a b c d e f")});
  const double p = (4.0 / 4.0) * (3.0 / 3.0) * (2.0 / 2.0) * (1.0 / 1.0);
  CHECK(bleu == doctest::Approx(std::exp(1.0 - 6.0 / 4.0) * std::pow(p, 0.25)).epsilon(1e-12));
  // no penalty when the hypothesis is longer
  const double longer = bleu_corpus({toks("a b c d e f")}, {toks("a b c d")});
  CHECK(longer == doctest::Approx(std::pow((4.0 / 6.0) * (3.0 / 5.0) * (2.0 / 4.0) * (1.0 / 3.0),
                                           0.25))
                      .epsilon(1e-12));
}

TEST_CASE("token accuracy counts positional matches over reference tokens") {
  CHECK(token_accuracy({toks("a b")}, {toks("a b")}) == 1.0);
  CHECK(token_accuracy({toks("x y")}, {toks("a b")}) == 0.0);
  CHECK(token_accuracy({toks("a b")}, {toks("a c")}) == 0.5);
  // length mismatch: extra hypothesis tokens never count, missing ones cost
  CHECK(token_accuracy({toks("a b c d")}, {toks("a b")}) == 1.0);
  CHECK(token_accuracy({toks("a")}, {toks("a b")}) == 0.5);
  CHECK_THROWS_AS(token_accuracy({toks("a")}, {}), DataError);
}

TEST_CASE("bucket report partitions the corpus and reduces to corpus scores") {
  std::vector<TokenSeq> hyp = {toks("a b"), toks("c d e"), toks("a b c d e f g h")};
  std::vector<TokenSeq> ref = {toks("a b"), toks("c d x"), toks("a b c d e f g h")};
  std::vector<int64_t> lengths = {2, 3, 8};

  auto single = length_bucket_report(hyp, ref, lengths, {0, 100});
  REQUIRE(single.size() == 1);
  CHECK(single[0].count == 3);
  CHECK(single[0].bleu == doctest::Approx(bleu_corpus(hyp, ref)).epsilon(1e-12));
  CHECK(single[0].token_acc == doctest::Approx(token_accuracy(hyp, ref)).epsilon(1e-12));

  auto each = length_bucket_report(hyp, ref, lengths, {2, 3, 4, 100});
  REQUIRE(each.size() == 3);
  CHECK(each[0].count == 1);
  CHECK(each[1].count == 1);
  CHECK(each[2].count == 1);
  CHECK(each[0].token_acc == 1.0);
  CHECK(each[1].token_acc == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

  auto with_empty = length_bucket_report(hyp, ref, lengths, {0, 2, 3, 4, 5, 100});
  int64_t total = 0;
  for (const auto& row : with_empty) total += row.count;
  CHECK(total == 3);
  CHECK(with_empty[0].count == 0);
  CHECK(with_empty[0].empty);

  const std::string csv = bucket_csv(with_empty);
  CHECK(csv.rfind("bucket_lo,bucket_hi,count,bleu,token_acc\n", 0) == 0);
  CHECK(csv.find("0,2,0,,\n") != std::string::npos);

  CHECK_THROWS_AS(length_bucket_report(hyp, ref, lengths, {3, 2, 1}), DataError);
  CHECK_THROWS_AS(length_bucket_report(hyp, ref, lengths, {0, 3}), DataError);
}
