#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mvnmt/checks.hpp"
#include "mvnmt/checkpoint.hpp"
#include "mvnmt/config.hpp"
#include "mvnmt/data.hpp"
#include "mvnmt/eval.hpp"
#include "mvnmt/model.hpp"
#include "mvnmt/trainer.hpp"
#include "mvnmt/translate.hpp"
#include "mvnmt/vocab.hpp"

namespace {

using namespace mvnmt;

struct CommonArgs {
  std::string config_path;
  std::string variant;
  std::optional<uint64_t> seed;
  std::string init_from;
  std::string out_dir;
  int64_t beam = 12;
};

RunConfig effective_config(const CommonArgs& args) {
  RunConfig rc = args.config_path.empty() ? RunConfig{} : load_config(args.config_path);
  if (!args.variant.empty()) rc.variant = args.variant;
  if (args.seed) rc.seed = *args.seed;
  rc.resolve();
  return rc;
}

Vocabulary vocab_from(const std::string& path, const std::vector<std::string>* fallback_lines,
                      int64_t max_size, const std::string& save_to) {
  if (!path.empty()) return Vocabulary::load(path);
  if (!fallback_lines)
    throw DataError("no vocabulary path configured and no corpus to build one from");
  Vocabulary v = Vocabulary::build(*fallback_lines, static_cast<size_t>(max_size));
  if (!save_to.empty()) {
    v.save(save_to);
    std::cerr << "[vocab] built " << v.size() << " entries, wrote " << save_to << "\n";
  }
  return v;
}

int cmd_gen_synthetic(const std::string& task, const std::string& image_mode, int64_t vocab,
                      int64_t pairs, int64_t feature_dim, uint64_t seed, const std::string& out) {
  SyntheticSpec spec;
  spec.task = parse_task(task);
  spec.image_mode = parse_image_mode(image_mode);
  spec.vocab_size = vocab;
  spec.pairs = pairs;
  spec.feature_dim = feature_dim;
  spec.seed = seed;
  SyntheticData data = gen_synthetic(spec);
  write_synthetic(data, out);
  std::cerr << "[gen-synthetic] " << data.train_src.size() << " train / " << data.val_src.size()
            << " val pairs under " << out << "\n";
  return 0;
}

int cmd_build_vocab(const std::string& corpus, int64_t max_size, const std::string& out) {
  Vocabulary v = Vocabulary::build(read_lines(corpus), static_cast<size_t>(max_size));
  v.save(out);
  std::cerr << "[build-vocab] " << v.size() << " entries (incl. <eos>/<unk>) -> " << out << "\n";
  return 0;
}

int cmd_train(const CommonArgs& args) {
  RunConfig rc = effective_config(args);
  const std::string out_dir = args.out_dir.empty() ? "." : args.out_dir;
  std::filesystem::create_directories(out_dir);

  if (rc.train_source.empty() || rc.train_target.empty() || rc.val_source.empty() ||
      rc.val_target.empty())
    throw DataError("train: config must set train_source, train_target, val_source, val_target");

  auto train_src = read_lines(rc.train_source);
  auto train_tgt = read_lines(rc.train_target);
  auto val_src = read_lines(rc.val_source);
  auto val_tgt = read_lines(rc.val_target);

  Vocabulary src_vocab =
      vocab_from(rc.vocab_source, &train_src, rc.vocab_max, out_dir + "/vocab.src.txt");
  Vocabulary tgt_vocab =
      vocab_from(rc.vocab_target, &train_tgt, rc.vocab_max, out_dir + "/vocab.tgt.txt");

  EncodedCorpus train = encode_corpus(train_src, train_tgt, src_vocab, tgt_vocab, rc.maxlen);
  EncodedCorpus val = encode_corpus(val_src, val_tgt, src_vocab, tgt_vocab, rc.maxlen);
  if (train.dropped || val.dropped)
    std::cerr << "[train] dropped " << train.dropped << " train / " << val.dropped
              << " val pairs over maxlen " << rc.maxlen << "\n";

  Model model(to_model_config(rc, static_cast<int64_t>(src_vocab.size()),
                              static_cast<int64_t>(tgt_vocab.size())));

  FeatureSet train_feats, val_feats;
  const FeatureSet* train_feats_ptr = nullptr;
  const FeatureSet* val_feats_ptr = nullptr;
  if (model.uses_image()) {
    if (rc.train_features.empty() || rc.val_features.empty())
      throw DataError("train: variant " + rc.variant +
                      " needs train_features and val_features in the config");
    train_feats = read_features(rc.train_features);
    val_feats = read_features(rc.val_features);
    if (train_feats.count() != train_src.size())
      throw DataError("train: " + std::to_string(train_feats.count()) + " feature blocks for " +
                      std::to_string(train_src.size()) + " training sentences");
    if (val_feats.count() != val_src.size())
      throw DataError("train: " + std::to_string(val_feats.count()) + " feature blocks for " +
                      std::to_string(val_src.size()) + " validation sentences");
    if (train_feats.dim != rc.dim_fc7)
      throw DataError("train: feature dim " + std::to_string(train_feats.dim) +
                      " does not match dim_fc7 " + std::to_string(rc.dim_fc7));
    train_feats_ptr = &train_feats;
    val_feats_ptr = &val_feats;
  }

  Rng rng(rc.seed);
  model.initialize(rng, rc.init_std);

  if (!args.init_from.empty()) {
    Checkpoint base = load_checkpoint(args.init_from);
    CheckpointCompat compat = apply_checkpoint(base, model.params());
    std::cerr << "[train] fine-tune from " << args.init_from << " (" << base.variant
              << "): " << compat.report() << "\n";
  }

  TrainerOptions topts;
  topts.batchsize = rc.batchsize;
  topts.validate_every = rc.validate_every;
  topts.patience = rc.patience;
  topts.max_iters = rc.max_iters;
  topts.decay_c = rc.decay_c;
  topts.lr = rc.lr;
  topts.seed = rc.seed;
  topts.out_dir = out_dir;
  topts.checkpoint_f32 = rc.checkpoint_f32;

  Trainer trainer(model, topts);
  TrainResult result = trainer.train(train.pairs, train_feats_ptr, val.pairs, val_feats_ptr);
  std::cerr << "[train] stopped after " << result.iterations << " iterations; best val loss "
            << result.best_val_loss << " at iteration " << result.best_iteration << "\n"
            << "[train] best checkpoint: " << result.best_checkpoint_path << "\n"
            << "[train] training curve: " << result.curve_path << "\n";
  return 0;
}

int cmd_translate(const CommonArgs& args, const std::string& input) {
  RunConfig rc = effective_config(args);
  if (args.init_from.empty()) throw DataError("translate: --init-from CHECKPOINT is required");
  if (rc.vocab_source.empty() || rc.vocab_target.empty())
    throw DataError("translate: config must set vocab_source and vocab_target");

  Checkpoint ckpt = load_checkpoint(args.init_from);
  if (!args.variant.empty() && args.variant != ckpt.variant)
    throw DataError("translate: --variant " + args.variant + " conflicts with checkpoint variant " +
                    ckpt.variant);
  rc.variant = ckpt.variant;
  rc.resolve();

  Vocabulary src_vocab = Vocabulary::load(rc.vocab_source);
  Vocabulary tgt_vocab = Vocabulary::load(rc.vocab_target);
  Model model(to_model_config(rc, static_cast<int64_t>(src_vocab.size()),
                              static_cast<int64_t>(tgt_vocab.size())));
  load_exact(ckpt, model.params());

  BeamOptions bopts;
  bopts.beam_size = args.beam;
  bopts.max_len = rc.maxlen;
  bopts.length_normalize = rc.length_normalize;
  Translator translator(model, bopts);

  std::ofstream file_out;
  if (!args.out_dir.empty()) {
    std::filesystem::create_directories(args.out_dir);
    file_out.open(args.out_dir + "/translations.txt");
    if (!file_out) throw DataError("translate: cannot write " + args.out_dir + "/translations.txt");
  }
  std::ostream& out = file_out.is_open() ? static_cast<std::ostream&>(file_out) : std::cout;

  for (const std::string& line : read_lines(input)) {
    Hypothesis hyp = translator.translate(src_vocab.encode(line, true));
    out << tgt_vocab.decode(hyp.tokens) << "\n";
  }
  return 0;
}

int cmd_evaluate(const CommonArgs& args, const std::string& src_path, const std::string& hyp_path,
                 const std::string& ref_path) {
  RunConfig rc = effective_config(args);
  auto tokenize_all = [](const std::vector<std::string>& lines) {
    std::vector<TokenSeq> out;
    out.reserve(lines.size());
    for (const auto& l : lines) out.push_back(split_tokens(l));
    return out;
  };
  auto src = tokenize_all(read_lines(src_path));
  auto hyp = tokenize_all(read_lines(hyp_path));
  auto ref = tokenize_all(read_lines(ref_path));
  if (src.size() != hyp.size())
    throw DataError("evaluate: " + std::to_string(src.size()) + " source lines vs " +
                    std::to_string(hyp.size()) + " hypotheses");

  std::vector<int64_t> lengths;
  lengths.reserve(src.size());
  for (const auto& s : src) lengths.push_back(static_cast<int64_t>(s.size()));

  const double bleu = bleu_corpus(hyp, ref);
  const double acc = token_accuracy(hyp, ref);
  auto rows = length_bucket_report(hyp, ref, lengths, parse_bucket_edges(rc.bucket_edges));
  std::cerr << "[evaluate] sentences " << hyp.size() << " bleu " << bleu << " token_acc " << acc
            << "\n";

  const std::string csv = bucket_csv(rows);
  if (!args.out_dir.empty()) {
    std::filesystem::create_directories(args.out_dir);
    std::ofstream out(args.out_dir + "/report.csv");
    if (!out) throw DataError("evaluate: cannot write " + args.out_dir + "/report.csv");
    out << csv;
  } else {
    std::cout << csv;
  }
  return 0;
}

int cmd_grad_check(const CommonArgs& args) {
  const std::string name = args.variant.empty() ? "vnmt" : args.variant;
  GradCheckReport report = run_toy_grad_check(parse_variant(name), args.seed.value_or(1));
  for (const auto& e : report.entries)
    std::cerr << "[grad-check] " << (e.ok ? "ok   " : "FAIL ") << e.param << " max_rel_err "
              << e.max_rel_err << "\n";
  std::cerr << "[grad-check] variant " << name << ": " << report.summary() << "\n";
  return report.all_ok ? 0 : 2;
}

int cmd_kl_check(const CommonArgs& args) {
  KlCheckResult r = run_kl_check(args.seed.value_or(1));
  std::cerr << "[kl-check] " << r.detail << "\n"
            << "[kl-check] closed-form " << (r.closed_form_ok ? "ok" : "FAIL") << ", monte-carlo "
            << (r.monte_carlo_ok ? "ok" : "FAIL") << "\n";
  return r.ok() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multimodal variational neural machine translation at desk scale"};
  app.require_subcommand(1);

  CommonArgs args;

  auto add_common = [&](CLI::App* cmd, bool with_beam = false) {
    cmd->add_option("--config", args.config_path, "key=value run configuration");
    cmd->add_option("--variant", args.variant,
                    "model variant: nmt|vnmt|g|g-o-avg|g-o-rnn|g-o-txt");
    cmd->add_option("--seed", args.seed, "random seed");
    cmd->add_option("--init-from", args.init_from, "checkpoint to start from");
    cmd->add_option("--out", args.out_dir, "output directory");
    if (with_beam) cmd->add_option("--beam", args.beam, "beam size (default 12)");
  };

  std::string task = "copy", image_mode = "correlated", gen_out = "synthetic";
  int64_t gen_vocab = 12, gen_pairs = 517, gen_feature_dim = 64;
  uint64_t gen_seed = 1;
  auto* gen = app.add_subcommand("gen-synthetic", "generate a synthetic parallel corpus");
  gen->add_option("--task", task, "copy|reverse|lexical-map");
  gen->add_option("--image-mode", image_mode, "correlated|random");
  gen->add_option("--vocab", gen_vocab, "distinct word types");
  gen->add_option("--pairs", gen_pairs, "total pairs (1/30 held out)");
  gen->add_option("--feature-dim", gen_feature_dim, "feature vector width");
  gen->add_option("--seed", gen_seed, "random seed");
  gen->add_option("--out", gen_out, "output directory");

  std::string bv_corpus, bv_out = "vocab.txt";
  int64_t bv_max = 50000;
  auto* bv = app.add_subcommand("build-vocab", "build a vocabulary from a corpus");
  bv->add_option("corpus", bv_corpus, "tokenized text, one sentence per line")->required();
  bv->add_option("--max-size", bv_max, "vocabulary cap including reserved ids");
  bv->add_option("--out", bv_out, "output vocabulary file");

  auto* train = app.add_subcommand("train", "train a model with early stopping");
  add_common(train);

  std::string tr_input;
  auto* translate = app.add_subcommand("translate", "beam-search translation of a source file");
  translate->add_option("input", tr_input, "source sentences, one per line")->required();
  add_common(translate, true);

  std::string ev_src, ev_hyp, ev_ref;
  auto* evaluate = app.add_subcommand("evaluate", "corpus BLEU, token accuracy, length buckets");
  evaluate->add_option("source", ev_src, "source file (bucket lengths)")->required();
  evaluate->add_option("hypotheses", ev_hyp, "translated file")->required();
  evaluate->add_option("references", ev_ref, "reference file")->required();
  add_common(evaluate);

  auto* gc = app.add_subcommand("grad-check", "finite-difference check of the full loss");
  add_common(gc);

  auto* kc = app.add_subcommand("kl-check", "closed-form and Monte Carlo KL checks");
  add_common(kc);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed())
      return cmd_gen_synthetic(task, image_mode, gen_vocab, gen_pairs, gen_feature_dim, gen_seed,
                               gen_out);
    if (bv->parsed()) return cmd_build_vocab(bv_corpus, bv_max, bv_out);
    if (train->parsed()) return cmd_train(args);
    if (translate->parsed()) return cmd_translate(args, tr_input);
    if (evaluate->parsed()) return cmd_evaluate(args, ev_src, ev_hyp, ev_ref);
    if (gc->parsed()) return cmd_grad_check(args);
    if (kc->parsed()) return cmd_kl_check(args);
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
