#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mvnmt/grad_check.hpp"
#include "mvnmt/image_encoder.hpp"
#include "mvnmt/model.hpp"
#include "test_util.hpp"

using namespace mvnmt;
using testutil::random_tensor;

namespace {

ParamSet image_params(FusionVariant v, int64_t d_pi, int64_t d_fc7, uint64_t seed,
                      bool zero = false) {
  ParamSet ps;
  register_image_encoder(ps, v, d_pi, d_fc7);
  if (!zero) {
    Rng rng(seed);
    for (auto& e : ps.entries())
      if (!e.is_bias)
        for (double& x : e.value.data) x = rng.normal(0.0, 0.4);
  }
  return ps;
}

}  // namespace

TEST_CASE("affine projection arithmetic") {
  // W = 0 leaves the bias.
  {
    ParamSet ps = image_params(FusionVariant::kG, 2, 3, 0, true);
    ps.at("img_proj.b") = Tensor({2}, {7.0, -1.0});
    Graph g;
    ImageEncoderNodes n = image_encoder_nodes(g, ps, FusionVariant::kG, 2);
    NodeId out = project_affine(g, n.W_pi, n.b_pi, g.input(Tensor({3}, {1, 2, 3})));
    CHECK(g.value(out).at(0) == 7.0);
    CHECK(g.value(out).at(1) == -1.0);
  }
  // W = I passes the feature through.
  {
    ParamSet ps = image_params(FusionVariant::kG, 3, 3, 0, true);
    for (int i = 0; i < 3; ++i) ps.at("img_proj.W").at(i, i) = 1.0;
    Graph g;
    ImageEncoderNodes n = image_encoder_nodes(g, ps, FusionVariant::kG, 3);
    NodeId out = project_affine(g, n.W_pi, n.b_pi, g.input(Tensor({3}, {0.5, -2.0, 9.0})));
    CHECK(g.value(out).at(0) == 0.5);
    CHECK(g.value(out).at(1) == -2.0);
    CHECK(g.value(out).at(2) == 9.0);
  }
  // [[1,1],[0,1]] pi + [1,0] with pi = [2,3] -> [6,3].
  {
    ParamSet ps = image_params(FusionVariant::kG, 2, 2, 0, true);
    ps.at("img_proj.W") = Tensor({2, 2}, {1, 1, 0, 1});
    ps.at("img_proj.b") = Tensor({2}, {1, 0});
    Graph g;
    ImageEncoderNodes n = image_encoder_nodes(g, ps, FusionVariant::kG, 2);
    NodeId out = project_affine(g, n.W_pi, n.b_pi, g.input(Tensor({2}, {2, 3})));
    CHECK(g.value(out).at(0) == 6.0);
    CHECK(g.value(out).at(1) == 3.0);
  }
}

TEST_CASE("global encoding consumes only the first row") {
  ParamSet ps = image_params(FusionVariant::kG, 4, 5, 11);
  Rng rng(12);
  Tensor row0 = random_tensor({5}, rng);
  Tensor one({1, 5}), three({3, 5});
  for (int64_t c = 0; c < 5; ++c) {
    one.at(0, c) = row0.at(c);
    three.at(0, c) = row0.at(c);
    three.at(1, c) = rng.normal();
    three.at(2, c) = rng.normal();
  }
  Graph g;
  ImageEncoderNodes n = image_encoder_nodes(g, ps, FusionVariant::kG, 4);
  NodeId a = encode_global(g, n, feature_inputs(g, one));
  NodeId b = encode_global(g, n, feature_inputs(g, three));
  CHECK(g.value(a).data == g.value(b).data);

  // Zero feature row leaves the bias.
  ParamSet zb = image_params(FusionVariant::kG, 4, 5, 0, true);
  zb.at("img_proj.b") = Tensor({4}, {1, 2, 3, 4});
  Graph g2;
  ImageEncoderNodes n2 = image_encoder_nodes(g2, zb, FusionVariant::kG, 4);
  NodeId c = encode_global(g2, n2, feature_inputs(g2, Tensor({1, 5})));
  for (int64_t i = 0; i < 4; ++i) CHECK(g2.value(c).at(i) == static_cast<double>(i + 1));
}

TEST_CASE("table defaults give a 512 x 4096 projection under variant G") {
  ModelConfig mc;
  mc.variant = Variant::kG;
  mc.d_pi = 512;
  mc.d_fc7 = 4096;
  mc.vocab_src = 4;
  mc.vocab_tgt = 4;
  mc.d_h = 8;
  mc.d_emb = 4;
  mc.d_z = 4;
  Model model(mc);
  const Tensor& W = model.params().at("img_proj.W");
  CHECK(W.rows() == 512);
  CHECK(W.cols() == 4096);
}

TEST_CASE("averaged encoding equals the global path for one or identical rows") {
  ParamSet ps = image_params(FusionVariant::kGOAvg, 4, 5, 21);
  Rng rng(22);
  Tensor row = random_tensor({5}, rng);
  Tensor single({1, 5}), repeated({3, 5});
  for (int64_t c = 0; c < 5; ++c) {
    single.at(0, c) = row.at(c);
    for (int64_t r = 0; r < 3; ++r) repeated.at(r, c) = row.at(c);
  }
  Graph g;
  ImageEncoderNodes n = image_encoder_nodes(g, ps, FusionVariant::kGOAvg, 4);
  NodeId avg1 = encode_avg(g, n, feature_inputs(g, single));
  NodeId glob = encode_global(g, n, feature_inputs(g, single));
  CHECK(g.value(avg1).data == g.value(glob).data);

  NodeId avg3 = encode_avg(g, n, feature_inputs(g, repeated));
  for (int64_t i = 0; i < 4; ++i)
    CHECK(g.value(avg3).at(i) == doctest::Approx(g.value(glob).at(i)).epsilon(1e-12));
}

TEST_CASE("averaged encoding is the arithmetic mean of the projections") {
  // Identity projection; rows [1,2] and [3,4] average to [2,3].
  ParamSet ps = image_params(FusionVariant::kGOAvg, 2, 2, 0, true);
  for (int i = 0; i < 2; ++i) ps.at("img_proj.W").at(i, i) = 1.0;
  Graph g;
  ImageEncoderNodes n = image_encoder_nodes(g, ps, FusionVariant::kGOAvg, 2);
  NodeId avg = encode_avg(g, n, feature_inputs(g, Tensor({2, 2}, {1, 2, 3, 4})));
  CHECK(g.value(avg).at(0) == 2.0);
  CHECK(g.value(avg).at(1) == 3.0);
}

TEST_CASE("rnn encoding of a single row with a zero recurrent stack is zero") {
  ParamSet ps = image_params(FusionVariant::kGORnn, 4, 5, 0, true);
  Rng rng(31);
  Tensor feats = random_tensor({1, 5}, rng);
  Graph g;
  ImageEncoderNodes n = image_encoder_nodes(g, ps, FusionVariant::kGORnn, 4);
  NodeId out = encode_rnn(g, n, feature_inputs(g, feats));
  for (int64_t i = 0; i < 4; ++i) CHECK(g.value(out).at(i) == 0.0);
}

TEST_CASE("rnn encoding distinguishes positions of identical rows") {
  ParamSet ps = image_params(FusionVariant::kGORnn, 4, 5, 41);
  Rng rng(42);
  Tensor row = random_tensor({5}, rng);
  Tensor feats({2, 5});
  for (int64_t c = 0; c < 5; ++c) {
    feats.at(0, c) = row.at(c);
    feats.at(1, c) = row.at(c);
  }
  Graph g;
  ImageEncoderNodes n = image_encoder_nodes(g, ps, FusionVariant::kGORnn, 4);
  std::vector<NodeId> projected = project_rows(g, n, feature_inputs(g, feats));
  EncoderOutput enc = encode_sequence(g, *n.rnn, projected);
  double diff = 0.0;
  for (int64_t i = 0; i < 2; ++i)  // forward halves of positions 0 and 1
    diff = std::max(diff, std::abs(g.value(enc.rows[0]).at(i) - g.value(enc.rows[1]).at(i)));
  CHECK(diff > 1e-9);

  // Deterministic pooled output.
  Graph g2;
  ImageEncoderNodes n2 = image_encoder_nodes(g2, ps, FusionVariant::kGORnn, 4);
  NodeId again = encode_rnn(g2, n2, feature_inputs(g2, feats));
  NodeId first = encode_rnn(g, n, feature_inputs(g, feats));
  CHECK(g.value(first).data == g2.value(again).data);
}

TEST_CASE("gradient through the rnn image encoder") {
  ParamSet ps = image_params(FusionVariant::kGORnn, 4, 3, 51);
  Rng rng(52);
  Tensor feats = random_tensor({2, 3}, rng);
  LossBuilder build = [&](Graph& g, const ParamSet& p) {
    ImageEncoderNodes n = image_encoder_nodes(g, p, FusionVariant::kGORnn, 4);
    NodeId out = encode_rnn(g, n, feature_inputs(g, feats));
    Rng crng(9);
    Tensor c({4});
    for (double& v : c.data) v = 2.0 * crng.uniform() - 1.0;
    return g.sum_all(g.mul(out, g.input(c)));
  };
  GradCheckReport report = check_gradient(ps, build, 1e-5);
  CHECK(report.all_ok);
  CHECK(report.worst_rel_err < 1e-4);
}

TEST_CASE("semantic concatenation orders source, target, image") {
  Graph g;
  NodeId h = build_semantic(g, g.input(Tensor({1}, {1.0})), g.input(Tensor({1}, {2.0})),
                            g.input(Tensor({1}, {3.0})));
  CHECK(g.value(h).numel() == 3);
  CHECK(g.value(h).at(0) == 1.0);
  CHECK(g.value(h).at(1) == 2.0);
  CHECK(g.value(h).at(2) == 3.0);

  // Variant G with d_h = 4, d_pi = 2: d_e = 10; G+O-TXT with d_h = 4: d_e = 8.
  ModelConfig mc;
  mc.d_h = 4;
  mc.d_emb = 2;
  mc.d_z = 2;
  mc.d_pi = 2;
  mc.d_fc7 = 3;
  mc.vocab_src = 3;
  mc.vocab_tgt = 3;
  mc.variant = Variant::kG;
  CHECK(Model(mc).semantic_dim() == 10);
  mc.variant = Variant::kGOTxt;
  CHECK(Model(mc).semantic_dim() == 8);
}

TEST_CASE("g-o-txt requires the projection width to match the embedding width") {
  ModelConfig mc;
  mc.variant = Variant::kGOTxt;
  mc.d_h = 4;
  mc.d_emb = 3;
  mc.d_pi = 2;
  mc.d_fc7 = 3;
  mc.d_z = 2;
  mc.vocab_src = 3;
  mc.vocab_tgt = 3;
  CHECK_THROWS_AS((void)Model{mc}, ContractError);
}

TEST_CASE("g-o-txt prefix lengthens the posterior-side sequence only") {
  ModelConfig mc = ModelConfig{};
  mc.variant = Variant::kGOTxt;
  mc.d_h = 6;
  mc.d_emb = 4;
  mc.d_z = 3;
  mc.d_pi = 4;
  mc.d_fc7 = 5;
  mc.vocab_src = 5;
  mc.vocab_tgt = 5;
  Model model(mc);
  Rng rng(61);
  model.initialize(rng, 0.1);

  const std::vector<int> src = {2, 3, 0};
  const std::vector<int> tgt = {4, 0};
  Tensor feats_a = random_tensor({2, 5}, rng);
  Tensor feats_b = random_tensor({2, 5}, rng);

  auto run = [&](const Tensor& f) {
    SentenceView sv;
    sv.src = &src;
    sv.tgt = &tgt;
    sv.features = &f;
    return model.infer(sv);
  };
  Model::Inferred a = run(feats_a);
  Model::Inferred b = run(feats_b);

  // Prior parameters are bit-identical: the prior never sees the image.
  CHECK(a.prior.mu.data == b.prior.mu.data);
  CHECK(a.prior.log_var.data == b.prior.log_var.data);
  // The posterior mean moves with the features.
  double diff = 0.0;
  for (int64_t k = 0; k < a.posterior.dim(); ++k)
    diff = std::max(diff, std::abs(a.posterior.mu.at(k) - b.posterior.mu.at(k)));
  CHECK(diff > 0.0);

  // The attention path is computed from the unprefixed source states: with a
  // pinned latent, every context vector is bit-identical across feature sets.
  auto contexts = [&](const Tensor& f) {
    Graph g;
    SentenceGraphOptions opts;
    opts.mode = LatentMode::kOverride;
    Tensor h_z({mc.d_z});
    h_z.at(0) = 0.7;
    opts.latent_override = &h_z;
    opts.want_posterior = true;
    opts.want_kl = false;
    SentenceView sv;
    sv.src = &src;
    sv.tgt = &tgt;
    sv.features = &f;
    SentenceGraph sg = model.build_sentence(g, sv, opts);
    std::vector<Tensor> out;
    for (const auto& step : sg.decode.steps) out.push_back(g.value(step.context));
    return out;
  };
  auto ca = contexts(feats_a);
  auto cb = contexts(feats_b);
  REQUIRE(ca.size() == cb.size());
  for (size_t j = 0; j < ca.size(); ++j) CHECK(ca[j].data == cb[j].data);
}

TEST_CASE("image variants move the posterior mean when features change") {
  for (Variant v : {Variant::kG, Variant::kGOAvg, Variant::kGORnn}) {
    CAPTURE(variant_name(v));
    ModelConfig mc;
    mc.variant = v;
    mc.d_h = 6;
    mc.d_emb = 4;
    mc.d_z = 3;
    mc.d_pi = 4;
    mc.d_fc7 = 5;
    mc.vocab_src = 5;
    mc.vocab_tgt = 5;
    Model model(mc);
    Rng rng(71);
    model.initialize(rng, 0.1);

    const std::vector<int> src = {2, 3, 0};
    const std::vector<int> tgt = {4, 0};
    Tensor fa = random_tensor({2, 5}, rng);
    Tensor fb = fa;
    fb.at(0, 0) += 1.0;

    SentenceView sa;
    sa.src = &src;
    sa.tgt = &tgt;
    sa.features = &fa;
    SentenceView sb = sa;
    sb.features = &fb;
    Model::Inferred ia = model.infer(sa);
    Model::Inferred ib = model.infer(sb);
    double diff = 0.0;
    for (int64_t k = 0; k < ia.posterior.dim(); ++k)
      diff = std::max(diff, std::abs(ia.posterior.mu.at(k) - ib.posterior.mu.at(k)));
    CHECK(diff > 0.0);
    CHECK(ia.prior.mu.data == ib.prior.mu.data);
  }
}
