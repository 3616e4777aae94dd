#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mvnmt/grad_check.hpp"
#include "mvnmt/text_encoder.hpp"
#include "test_util.hpp"

using namespace mvnmt;
using testutil::random_tensor;

TEST_CASE("embedding lookup is a column read") {
  Graph g;
  Tensor table({3, 4});
  for (int64_t r = 0; r < 3; ++r)
    for (int64_t c = 0; c < 4; ++c)
      table.at(r, c) = 10.0 * static_cast<double>(r) + static_cast<double>(c);
  NodeId t = g.input(table);

  auto rows = embed_sequence(g, t, {0});
  for (int64_t r = 0; r < 3; ++r) CHECK(g.value(rows[0]).at(r) == table.at(r, 0));

  // One-hot columns reproduce the 1-of-k encoding.
  Graph g2;
  Tensor onehot({4, 4});
  for (int i = 0; i < 4; ++i) onehot.at(i, i) = 1.0;
  NodeId t2 = g2.input(onehot);
  auto oh = embed_sequence(g2, t2, {2, 0, 3});
  CHECK(g2.value(oh[0]).at(2) == 1.0);
  CHECK(g2.value(oh[0]).at(0) == 0.0);
  CHECK(g2.value(oh[1]).at(0) == 1.0);
  CHECK(g2.value(oh[2]).at(3) == 1.0);

  // Permuting the sequence permutes the rows.
  Graph g3;
  NodeId t3 = g3.input(table);
  auto fwd = embed_sequence(g3, t3, {1, 2, 3});
  auto perm = embed_sequence(g3, t3, {3, 1, 2});
  for (int64_t r = 0; r < 3; ++r) {
    CHECK(g3.value(fwd[0]).at(r) == g3.value(perm[1]).at(r));
    CHECK(g3.value(fwd[1]).at(r) == g3.value(perm[2]).at(r));
    CHECK(g3.value(fwd[2]).at(r) == g3.value(perm[0]).at(r));
  }
}

TEST_CASE("gru step with zero parameters halves the previous state") {
  ParamSet ps;
  register_gru(ps, "enc", 3, 4);
  Graph g;
  GruNodes n = gru_nodes(g, ps, "enc");
  Tensor prev({4}, {1.0, -2.0, 0.5, 4.0});
  NodeId out = gru_step(g, n, g.input(prev), g.input(Tensor({3})));
  for (int64_t i = 0; i < 4; ++i)
    CHECK(g.value(out).at(i) == doctest::Approx(0.5 * prev.at(i)).epsilon(1e-15));

  NodeId from_zero = gru_step(g, n, g.input(Tensor({4})), g.input(Tensor({3})));
  for (int64_t i = 0; i < 4; ++i) CHECK(g.value(from_zero).at(i) == 0.0);
}

TEST_CASE("gradient through five chained gru steps") {
  ParamSet ps;
  register_gru(ps, "enc", 3, 4);
  Rng rng(21);
  for (auto& e : ps.entries())
    for (double& v : e.value.data) v = rng.normal(0.0, 0.4);
  std::vector<Tensor> inputs;
  for (int i = 0; i < 5; ++i) inputs.push_back(random_tensor({3}, rng, -1.0, 1.0));

  LossBuilder build = [&](Graph& g, const ParamSet& p) {
    GruNodes n = gru_nodes(g, p, "enc");
    NodeId h = g.input(Tensor({4}));
    for (const Tensor& x : inputs) h = gru_step(g, n, h, g.input(x));
    Rng crng(5);
    Tensor c({4});
    for (double& v : c.data) v = 2.0 * crng.uniform() - 1.0;
    return g.sum_all(g.mul(h, g.input(c)));
  };
  GradCheckReport report = check_gradient(ps, build, 1e-5);
  CHECK(report.all_ok);
  CHECK(report.worst_rel_err < 1e-4);
}

TEST_CASE("single-position bidirectional encoding follows the step definition") {
  ParamSet ps;
  register_bidirectional(ps, "enc", 3, 8);
  Rng rng(31);
  for (auto& e : ps.entries())
    for (double& v : e.value.data) v = rng.normal(0.0, 0.4);

  Tensor x = random_tensor({3}, rng, -1.0, 1.0);
  Graph g;
  BiGruNodes n = bidirectional_nodes(g, ps, "enc", 8);
  EncoderOutput out = encode_sequence(g, n, {g.input(x)});

  NodeId fwd = gru_step(g, n.forward, g.input(Tensor({4})), g.input(x));
  NodeId bwd = gru_step(g, n.backward, g.input(Tensor({4})), g.input(x));
  for (int64_t i = 0; i < 4; ++i) {
    CHECK(g.value(out.rows[0]).at(i) == g.value(fwd).at(i));
    CHECK(g.value(out.rows[0]).at(4 + i) == g.value(bwd).at(i));
  }
}

TEST_CASE("palindrome with shared direction parameters has equal halves at the center") {
  ParamSet ps;
  register_bidirectional(ps, "enc", 3, 8);
  Rng rng(77);
  for (auto& e : ps.entries())
    for (double& v : e.value.data) v = rng.normal(0.0, 0.4);
  // Make the backward chain identical to the forward chain.
  for (const char* m : {"W_r", "U_r", "W_o", "U_o", "W_c", "U_c"})
    ps.at(std::string("enc_bwd.") + m) = ps.at(std::string("enc_fwd.") + m);

  Tensor v = random_tensor({3}, rng, -1.0, 1.0);
  Tensor w = random_tensor({3}, rng, -1.0, 1.0);
  Graph g;
  BiGruNodes n = bidirectional_nodes(g, ps, "enc", 8);
  EncoderOutput out = encode_sequence(g, n, {g.input(v), g.input(w), g.input(v)});
  for (int64_t i = 0; i < 4; ++i)
    CHECK(g.value(out.rows[1]).at(i) ==
          doctest::Approx(g.value(out.rows[1]).at(4 + i)).epsilon(1e-15));
}

TEST_CASE("reversing the input swaps the directional roles under swapped parameters") {
  const int64_t T = 3;
  Rng rng(55);
  ParamSet ps;
  register_bidirectional(ps, "enc", 3, 8);
  for (auto& e : ps.entries())
    for (double& v : e.value.data) v = rng.normal(0.0, 0.4);
  ParamSet swapped;
  register_bidirectional(swapped, "enc", 3, 8);
  for (const char* m : {"W_r", "U_r", "W_o", "U_o", "W_c", "U_c"}) {
    swapped.at(std::string("enc_fwd.") + m) = ps.at(std::string("enc_bwd.") + m);
    swapped.at(std::string("enc_bwd.") + m) = ps.at(std::string("enc_fwd.") + m);
  }

  std::vector<Tensor> xs;
  for (int64_t i = 0; i < T; ++i) xs.push_back(random_tensor({3}, rng, -1.0, 1.0));

  Graph g1;
  BiGruNodes n1 = bidirectional_nodes(g1, ps, "enc", 8);
  EncoderOutput orig = encode_sequence(g1, n1, {g1.input(xs[0]), g1.input(xs[1]), g1.input(xs[2])});

  Graph g2;
  BiGruNodes n2 = bidirectional_nodes(g2, swapped, "enc", 8);
  EncoderOutput rev = encode_sequence(g2, n2, {g2.input(xs[2]), g2.input(xs[1]), g2.input(xs[0])});

  // forward-half(i) of the reversed run equals backward-half(T-1-i) of the original
  for (int64_t i = 0; i < T; ++i)
    for (int64_t k = 0; k < 4; ++k)
      CHECK(g2.value(rev.rows[static_cast<size_t>(i)]).at(k) ==
            doctest::Approx(g1.value(orig.rows[static_cast<size_t>(T - 1 - i)]).at(4 + k))
                .epsilon(1e-15));
}

TEST_CASE("mean pooling arithmetic and symmetry") {
  Graph g;
  Tensor v({2}, {3.0, -1.0});
  NodeId pooled = g.mean_rows(g.stack_rows({g.input(v), g.input(v), g.input(v)}));
  CHECK(g.value(pooled).at(0) == 3.0);
  CHECK(g.value(pooled).at(1) == -1.0);

  Tensor neg({2}, {-3.0, 1.0});
  NodeId zero = g.mean_rows(g.stack_rows({g.input(v), g.input(neg)}));
  CHECK(g.value(zero).at(0) == 0.0);
  CHECK(g.value(zero).at(1) == 0.0);

  NodeId m = g.mean_rows(g.input(Tensor({3, 2}, {1, 2, 3, 4, 5, 6})));
  CHECK(g.value(m).at(0) == 3.0);
  CHECK(g.value(m).at(1) == 4.0);
}

TEST_CASE("pooling is permutation invariant, the state rows are not") {
  ParamSet ps;
  register_bidirectional(ps, "enc", 3, 8);
  Rng rng(91);
  for (auto& e : ps.entries())
    for (double& v : e.value.data) v = rng.normal(0.0, 0.4);
  std::vector<Tensor> xs;
  for (int i = 0; i < 3; ++i) xs.push_back(random_tensor({3}, rng, -1.0, 1.0));

  auto encode_with = [&](std::vector<int> order) {
    Graph g;
    BiGruNodes n = bidirectional_nodes(g, ps, "enc", 8);
    std::vector<NodeId> in;
    for (int i : order) in.push_back(g.input(xs[static_cast<size_t>(i)]));
    EncoderOutput out = encode_sequence(g, n, in);
    return std::pair<Tensor, Tensor>{g.value(out.states), g.value(out.pooled)};
  };
  auto [states_a, pooled_a] = encode_with({0, 1, 2});
  auto [states_b, pooled_b] = encode_with({2, 0, 1});

  // Mean pooling over a fixed set of rows is permutation invariant...
  Graph g;
  NodeId mean_a = g.mean_rows(g.input(states_a));
  Tensor perm = states_a;
  for (int64_t c = 0; c < perm.cols(); ++c) {
    perm.at(0, c) = states_a.at(2, c);
    perm.at(1, c) = states_a.at(0, c);
    perm.at(2, c) = states_a.at(1, c);
  }
  NodeId mean_p = g.mean_rows(g.input(perm));
  for (int64_t c = 0; c < 8; ++c)
    CHECK(g.value(mean_a).at(c) == doctest::Approx(g.value(mean_p).at(c)).epsilon(1e-15));

  // ...but the recurrent states change when the input order does.
  double diff = 0.0;
  for (size_t i = 0; i < states_a.data.size(); ++i)
    diff = std::max(diff, std::abs(states_a.data[i] - states_b.data[i]));
  CHECK(diff > 1e-6);
  double pdiff = 0.0;
  for (size_t i = 0; i < pooled_a.data.size(); ++i)
    pdiff = std::max(pdiff, std::abs(pooled_a.data[i] - pooled_b.data[i]));
  CHECK(pdiff > 1e-8);
}

TEST_CASE("encoder output is deterministic and pooled matches the row mean") {
  ParamSet ps;
  register_bidirectional(ps, "enc", 3, 6);
  Rng rng(17);
  for (auto& e : ps.entries())
    for (double& v : e.value.data) v = rng.normal(0.0, 0.4);
  std::vector<Tensor> xs;
  for (int i = 0; i < 4; ++i) xs.push_back(random_tensor({3}, rng, -1.0, 1.0));

  auto run = [&]() {
    Graph g;
    BiGruNodes n = bidirectional_nodes(g, ps, "enc", 6);
    std::vector<NodeId> in;
    for (const auto& x : xs) in.push_back(g.input(x));
    EncoderOutput out = encode_sequence(g, n, in);
    return std::pair<Tensor, Tensor>{g.value(out.states), g.value(out.pooled)};
  };
  auto [s1, p1] = run();
  auto [s2, p2] = run();
  CHECK(s1.data == s2.data);
  CHECK(p1.data == p2.data);

  for (int64_t c = 0; c < 6; ++c) {
    double mean = 0.0;
    for (int64_t r = 0; r < 4; ++r) mean += s1.at(r, c);
    mean /= 4.0;
    CHECK(p1.at(c) == doctest::Approx(mean).epsilon(1e-12));
  }
}

TEST_CASE("odd bidirectional width is rejected") {
  ParamSet ps;
  CHECK_THROWS_AS(register_bidirectional(ps, "enc", 3, 7), ContractError);
}

TEST_CASE("gradients flow through embed, bidirectional encoding and pooling") {
  ParamSet ps;
  ps.add("emb", {3, 5}, false);
  register_bidirectional(ps, "enc", 3, 6);
  Rng rng(131);
  for (auto& e : ps.entries())
    for (double& v : e.value.data) v = rng.normal(0.0, 0.4);
  const std::vector<int> seq = {2, 4, 0};

  LossBuilder build = [&](Graph& g, const ParamSet& p) {
    NodeId table = g.param("emb", p.at("emb"));
    BiGruNodes n = bidirectional_nodes(g, p, "enc", 6);
    EncoderOutput out = encode_sequence(g, n, embed_sequence(g, table, seq));
    Rng crng(3);
    Tensor c({6});
    for (double& v : c.data) v = 2.0 * crng.uniform() - 1.0;
    return g.sum_all(g.mul(out.pooled, g.input(c)));
  };
  GradCheckReport report = check_gradient(ps, build, 1e-5);
  CHECK(report.all_ok);
  CHECK(report.worst_rel_err < 1e-4);
}
