// sercl/cli.cc

// Copyright 2026  The sercl authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sercl/cli.h"

#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sercl/config.h"
#include "sercl/corpus.h"
#include "sercl/dsp.h"
#include "sercl/error.h"
#include "sercl/evaluation.h"
#include "sercl/io.h"
#include "sercl/trainer.h"

namespace sercl {

namespace {

namespace fs = std::filesystem;

#if defined(__GNUC__)
__attribute__((format(printf, 1, 2)))
#endif
std::string fmt(const char *f, ...) {
  char buf[256];
  va_list ap;
  va_start(ap, f);
  int n = std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  if (n < 0) return {};
  return std::string(buf, static_cast<size_t>(n));
}

Spectrogram extract_one(const AudioClip &clip, const RunConfig &cfg) {
  const AudioClip cut = truncate_middle(clip, cfg.dsp.max_duration);
  return cfg.frontend == "mel" ? mel_spectrogram(cut, cfg.dsp)
                               : stft_spectrogram(cut, cfg.dsp);
}

struct LoadedCorpus {
  Manifest manifest;
  Dataset data;
};

LoadedCorpus load_corpus(const RunConfig &cfg) {
  if (cfg.data_dir.empty()) throw UsageError("--data <dir> is required");
  LoadedCorpus c;
  c.manifest =
      read_manifest((fs::path(cfg.data_dir) / "manifest.csv").string(),
                    cfg.class_names);
  if (c.manifest.records.empty()) {
    throw DataError("manifest in " + cfg.data_dir + " has no rows");
  }
  for (const ManifestRecord &rec : c.manifest.records) {
    const AudioClip clip =
        read_wav((fs::path(cfg.data_dir) / rec.path).string());
    c.data.specs.push_back(extract_one(clip, cfg).values);
    c.data.labels.push_back(rec.label);
  }
  c.data.validate(cfg.encoder.n_classes);
  return c;
}

Dataset subset_of(const Dataset &ds, const std::vector<int> &idx) {
  Dataset out;
  for (int i : idx) {
    out.specs.push_back(ds.specs[static_cast<size_t>(i)]);
    out.labels.push_back(ds.labels[static_cast<size_t>(i)]);
  }
  return out;
}

struct Split {
  Dataset train, dev, test;
};

// Subset tags win when present; otherwise fold 0 of the seeded 5-fold
// partition stands in.
Split make_split(const LoadedCorpus &c, const RunConfig &cfg) {
  bool tagged = false;
  for (const ManifestRecord &rec : c.manifest.records) {
    if (!rec.subset.empty()) tagged = true;
  }
  Split sp;
  if (tagged) {
    for (size_t i = 0; i < c.manifest.records.size(); ++i) {
      const std::string &tag = c.manifest.records[i].subset;
      Dataset *dst = nullptr;
      if (tag == "train") {
        dst = &sp.train;
      } else if (tag == "dev") {
        dst = &sp.dev;
      } else if (tag == "test") {
        dst = &sp.test;
      } else {
        throw DataError("manifest row " + std::to_string(i + 2) +
                        ": subset must be train/dev/test, got '" + tag + "'");
      }
      dst->specs.push_back(c.data.specs[i]);
      dst->labels.push_back(c.data.labels[i]);
    }
    if (sp.train.size() == 0) throw DataError("manifest has no train rows");
    if (sp.dev.size() == 0) throw DataError("manifest has no dev rows");
  } else {
    const std::vector<Fold> folds = cv_splits(c.data.labels, cfg.train.seed);
    sp.train = subset_of(c.data, folds[0].train);
    sp.dev = subset_of(c.data, folds[0].dev);
    sp.test = subset_of(c.data, folds[0].test);
  }
  return sp;
}

void ensure_out_dir(const RunConfig &cfg) {
  if (cfg.out_dir.empty()) throw UsageError("--out <dir> is required");
  fs::create_directories(cfg.out_dir);
}

std::string history_tsv(const std::vector<EpochRecord> &history) {
  std::string out = "epoch\tl_s\tl_c\tdev_ua\tdev_wa\n";
  for (const EpochRecord &r : history) {
    out += fmt("%d\t%.9f\t%.9f\t%.6f\t%.6f\n", r.epoch, r.l_s, r.l_c, r.dev_ua,
               r.dev_wa);
  }
  return out;
}

int run_synth(const RunConfig &cfg) {
  ensure_out_dir(cfg);
  SynthSpec spec = SynthSpec::default_four(cfg.synth_total, cfg.train.seed);
  spec.validate();
  const SynthCorpus corpus = generate_synthetic_corpus(spec);
  std::vector<std::string> names;
  for (const ClassRecipe &r : spec.classes) names.push_back(r.name);
  export_corpus(corpus, names, cfg.out_dir);
  std::cout << fmt("wrote %d clips and manifest.csv to %s\n", corpus.size(),
                   cfg.out_dir.c_str());
  return 0;
}

int run_extract(const RunConfig &cfg) {
  if (cfg.data_dir.empty()) throw UsageError("--data <dir> is required");
  ensure_out_dir(cfg);
  Manifest in =
      read_manifest((fs::path(cfg.data_dir) / "manifest.csv").string(),
                    cfg.class_names);
  Manifest out = in;
  int bins = -1;
  for (size_t i = 0; i < in.records.size(); ++i) {
    const ManifestRecord &rec = in.records[i];
    const AudioClip clip =
        read_wav((fs::path(cfg.data_dir) / rec.path).string());
    const Spectrogram s = extract_one(clip, cfg);
    bins = s.n_bins();
    const std::string name = fs::path(rec.path).stem().string() + ".spec";
    write_spectrogram((fs::path(cfg.out_dir) / name).string(), s);
    out.records[i].path = name;
  }
  write_manifest((fs::path(cfg.out_dir) / "specs.csv").string(), out);
  std::cout << fmt("wrote %zu %s spectrograms (%d bins) to %s\n",
                   in.records.size(), cfg.frontend.c_str(), bins,
                   cfg.out_dir.c_str());
  return 0;
}

int run_train(const RunConfig &cfg) {
  ensure_out_dir(cfg);
  const LoadedCorpus c = load_corpus(cfg);
  const Split sp = make_split(c, cfg);
  const FitResult res = fit(sp.train, sp.dev, cfg.encoder, cfg.train);
  const Checkpoint ck{cfg.encoder, res.best_params, res.best_centers};
  write_checkpoint((fs::path(cfg.out_dir) / "checkpoint.bin").string(), ck);
  atomic_write_file((fs::path(cfg.out_dir) / "history.tsv").string(),
                    history_tsv(res.history));
  std::cout << fmt("best epoch %d  dev ua %.6f  (checkpoint.bin, history.tsv)\n",
                   res.best_epoch, res.best_dev_ua);
  return 0;
}

int run_eval(const RunConfig &cfg, const std::string &model) {
  if (model.empty()) throw UsageError("eval: --model <checkpoint> is required");
  ensure_out_dir(cfg);
  const Checkpoint ck = read_checkpoint(model);
  if (static_cast<int>(cfg.class_names.size()) != ck.config.n_classes) {
    throw DataError("checkpoint expects " +
                    std::to_string(ck.config.n_classes) + " classes, config " +
                    "names " + std::to_string(cfg.class_names.size()));
  }
  const LoadedCorpus c = load_corpus(cfg);
  Dataset evalset;
  bool any_test = false;
  for (const ManifestRecord &rec : c.manifest.records) any_test |= rec.subset == "test";
  if (any_test) {
    for (size_t i = 0; i < c.manifest.records.size(); ++i) {
      if (c.manifest.records[i].subset != "test") continue;
      evalset.specs.push_back(c.data.specs[i]);
      evalset.labels.push_back(c.data.labels[i]);
    }
  } else {
    evalset = c.data;
  }
  const std::vector<int> preds =
      predict(ck.config, ck.params, evalset, cfg.train.batch_size);
  EvalReport rep;
  rep.confusion = confusion_matrix(preds, evalset.labels, ck.config.n_classes);
  rep.ua = ua(rep.confusion);
  rep.wa = wa(preds, evalset.labels);
  atomic_write_file((fs::path(cfg.out_dir) / "report.txt").string(),
                    format_report(rep, cfg.class_names));
  std::cout << fmt("ua %.6f  wa %.6f  on %d utterances (report.txt)\n", rep.ua,
                   rep.wa, evalset.size());
  return 0;
}

int run_cv(const RunConfig &cfg) {
  ensure_out_dir(cfg);
  const LoadedCorpus c = load_corpus(cfg);
  EvalReport rep;
  std::vector<ConfusionMatrix> cms;
  double wa_sum = 0.0;
  for (int r = 0; r < cfg.cv_repeats; ++r) {
    const std::vector<Fold> folds =
        cv_splits(c.data.labels, cfg.train.seed + static_cast<std::uint64_t>(r));
    for (size_t f = 0; f < folds.size(); ++f) {
      TrainConfig tc = cfg.train;
      tc.seed = cfg.train.seed + 1000 * static_cast<std::uint64_t>(r) + f + 1;
      const Dataset train = subset_of(c.data, folds[f].train);
      const Dataset dev = subset_of(c.data, folds[f].dev);
      const Dataset test = subset_of(c.data, folds[f].test);
      const FitResult res = fit(train, dev, cfg.encoder, tc);
      const std::vector<int> preds =
          predict(cfg.encoder, res.best_params, test, tc.batch_size);
      const ConfusionMatrix cm =
          confusion_matrix(preds, test.labels, cfg.encoder.n_classes);
      FoldScore score;
      score.repetition = r;
      score.fold = static_cast<int>(f);
      score.ua = ua(cm);
      score.wa = wa(preds, test.labels);
      rep.folds.push_back(score);
      cms.push_back(cm);
      wa_sum += score.wa;
      std::cout << fmt("rep %d fold %zu  ua %.6f  wa %.6f\n", r, f, score.ua,
                       score.wa);
    }
  }
  rep.confusion = average_confusion(cms);
  rep.ua = ua(rep.confusion);
  rep.wa = wa_sum / static_cast<double>(cms.size());
  atomic_write_file((fs::path(cfg.out_dir) / "cv_report.txt").string(),
                    format_report(rep, cfg.class_names));
  std::cout << fmt("cv mean ua %.6f  wa %.6f over %zu folds (cv_report.txt)\n",
                   rep.ua, rep.wa, cms.size());
  return 0;
}

int run_embed(const RunConfig &cfg, const std::string &model) {
  if (model.empty()) {
    throw UsageError("embed: --model <checkpoint> is required");
  }
  ensure_out_dir(cfg);
  const Checkpoint ck = read_checkpoint(model);
  const LoadedCorpus c = load_corpus(cfg);
  const FeatureBatch fb =
      encode_dataset(ck.config, ck.params, c.data, cfg.train.batch_size);
  const PcaResult pca = pca_embed(fb.z, 2);
  std::string out;
  if (pca.degenerate) out += "# degenerate\n";
  out += fmt("# explained\t%.6f\t%.6f\n", pca.explained[0], pca.explained[1]);
  out += "x\ty\tlabel\n";
  for (int i = 0; i < fb.size(); ++i) {
    const int y = fb.labels[static_cast<size_t>(i)];
    out += fmt("%.9f\t%.9f\t%s\n", pca.coords.at(i, 0), pca.coords.at(i, 1),
               cfg.class_names[static_cast<size_t>(y)].c_str());
  }
  atomic_write_file((fs::path(cfg.out_dir) / "embedding.tsv").string(), out);
  std::cout << fmt("wrote %d projected utterances (embedding.tsv)\n",
                   fb.size());
  return 0;
}

int run_sweep(const RunConfig &cfg) {
  ensure_out_dir(cfg);
  const LoadedCorpus c = load_corpus(cfg);
  const Split sp = make_split(c, cfg);
  std::string out = "lambda\talpha\tua\twa\n";
  double best_ua = -1.0;
  double best_lambda = 0.0, best_alpha = 0.0;
  for (double lambda : cfg.sweep_lambda) {
    for (double alpha : cfg.sweep_alpha) {
      TrainConfig tc = cfg.train;
      tc.lambda = lambda;
      tc.alpha = alpha;
      const FitResult res = fit(sp.train, sp.dev, cfg.encoder, tc);
      const std::vector<int> preds =
          predict(cfg.encoder, res.best_params, sp.test, tc.batch_size);
      const ConfusionMatrix cm =
          confusion_matrix(preds, sp.test.labels, cfg.encoder.n_classes);
      const double cell_ua = ua(cm);
      const double cell_wa = wa(preds, sp.test.labels);
      out += fmt("%.3f\t%.3f\t%.6f\t%.6f\n", lambda, alpha, cell_ua, cell_wa);
      std::cout << fmt("lambda %.3f alpha %.3f  ua %.6f  wa %.6f\n", lambda,
                       alpha, cell_ua, cell_wa);
      if (cell_ua > best_ua) {
        best_ua = cell_ua;
        best_lambda = lambda;
        best_alpha = alpha;
      }
    }
  }
  atomic_write_file((fs::path(cfg.out_dir) / "sweep.tsv").string(), out);
  std::cout << fmt("best cell lambda %.3f alpha %.3f  ua %.6f (sweep.tsv)\n",
                   best_lambda, best_alpha, best_ua);
  return 0;
}

struct FlagVals {
  std::string config_path, frontend, out_dir, data_dir, model_path;
  std::uint64_t seed = 0;
  double lambda = 0.0, alpha = 0.0;
  int repeats = 0;
};

void add_common(CLI::App *sub, FlagVals &f) {
  sub->add_option("--config", f.config_path, "flat key = value config file");
  sub->add_option("--seed", f.seed, "run seed");
  sub->add_option("--lambda", f.lambda, "center loss weight");
  sub->add_option("--alpha", f.alpha, "center update rate");
  sub->add_option("--frontend", f.frontend, "spectrogram frontend: stft or mel");
  sub->add_option("--out", f.out_dir, "output directory");
}

RunConfig merge_config(const CLI::App *sub, const FlagVals &f) {
  RunConfig cfg;
  if (sub->count("--config")) cfg.load_file(f.config_path);
  if (sub->count("--seed")) cfg.train.seed = f.seed;
  if (sub->count("--lambda")) cfg.train.lambda = f.lambda;
  if (sub->count("--alpha")) cfg.train.alpha = f.alpha;
  if (sub->count("--frontend")) cfg.frontend = f.frontend;
  if (sub->count("--out")) cfg.out_dir = f.out_dir;
  if (sub->get_option_no_throw("--data") && sub->count("--data")) {
    cfg.data_dir = f.data_dir;
  }
  if (sub->get_option_no_throw("--repeats") && sub->count("--repeats")) {
    cfg.cv_repeats = f.repeats;
  }
  cfg.finalize();
  return cfg;
}

}  // namespace

int dispatch(const std::vector<std::string> &args) {
  CLI::App app{"speech emotion recognition with a center loss regularizer",
               "sercl"};
  app.require_subcommand(0, 1);
  FlagVals f;

  CLI::App *synth = app.add_subcommand("synth-data",
                                       "generate a labeled tone corpus");
  CLI::App *extract = app.add_subcommand("extract-spec",
                                         "write spectrogram files");
  CLI::App *train = app.add_subcommand("train", "fit a model");
  CLI::App *eval = app.add_subcommand("eval", "score a checkpoint");
  CLI::App *cv = app.add_subcommand("cv", "repeated 5-fold cross validation");
  CLI::App *embed = app.add_subcommand("embed",
                                       "2-d pca of utterance features");
  CLI::App *sweep = app.add_subcommand("sweep", "lambda/alpha grid search");

  for (CLI::App *sub : {synth, extract, train, eval, cv, embed, sweep}) {
    add_common(sub, f);
  }
  for (CLI::App *sub : {extract, train, eval, cv, embed, sweep}) {
    sub->add_option("--data", f.data_dir, "corpus directory with manifest.csv");
  }
  for (CLI::App *sub : {eval, embed}) {
    sub->add_option("--model", f.model_path, "checkpoint file");
  }
  cv->add_option("--repeats", f.repeats, "partition redraws");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
    if (app.get_subcommands().empty()) {
      std::cerr << app.help();
      return 1;
    }
    const CLI::App *sub = app.get_subcommands().front();
    const RunConfig cfg = merge_config(sub, f);
    if (sub == synth) return run_synth(cfg);
    if (sub == extract) return run_extract(cfg);
    if (sub == train) return run_train(cfg);
    if (sub == eval) return run_eval(cfg, f.model_path);
    if (sub == cv) return run_cv(cfg);
    if (sub == embed) return run_embed(cfg, f.model_path);
    if (sub == sweep) return run_sweep(cfg);
    std::cerr << "sercl: unhandled subcommand\n";
    return 1;
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return 1;
  } catch (const UsageError &e) {
    std::cerr << "sercl: " << e.what() << '\n';
    return 1;
  } catch (const NumericError &e) {
    std::cerr << "sercl: " << e.what() << '\n';
    return 3;
  } catch (const DataError &e) {
    std::cerr << "sercl: " << e.what() << '\n';
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "sercl: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace sercl
