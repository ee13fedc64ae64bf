// Command-line front end over the unidial C API.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 training/internal
// error.

#include <CLI11.hpp>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "unidial.h"

namespace {

struct ConfigGuard {
  ud_config* ptr = ud_config_new();
  ~ConfigGuard() { ud_config_free(ptr); }
};

struct CommonOpts {
  std::string config_path;
  std::string seed;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "config file (key=value lines)");
  cmd->add_option("--seed", opts.seed, "override train.seed");
  cmd->add_option("--set", opts.overrides,
                  "override a config key, e.g. --set model.dim=64")
      ->take_all();
}

int fail(ud_status status) {
  std::fprintf(stderr, "error: %s\n", ud_last_error());
  switch (status) {
    case UD_ERR_USAGE:
      return 1;
    case UD_ERR_DATA:
      return 2;
    default:
      return 3;  // training and internal failures abort the run
  }
}

int apply_common(ud_config* cfg, const CommonOpts& opts) {
  if (!opts.config_path.empty()) {
    if (ud_status s = ud_config_load(cfg, opts.config_path.c_str()); s != UD_OK)
      return fail(s);
  }
  for (const auto& kv : opts.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "error: --set expects key=value, got '%s'\n",
                   kv.c_str());
      return 1;
    }
    if (ud_status s = ud_config_set(cfg, kv.substr(0, eq).c_str(),
                                    kv.substr(eq + 1).c_str());
        s != UD_OK)
      return fail(s);
  }
  if (!opts.seed.empty()) {
    if (ud_status s = ud_config_set(cfg, "train.seed", opts.seed.c_str());
        s != UD_OK)
      return fail(s);
  }
  return 0;
}

void print_and_free(char* text) {
  if (text != nullptr) {
    std::fputs(text, stdout);
    ud_free(text);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"unified vision-dialog transformer"};
  app.require_subcommand(1);

  CommonOpts train_opts, eval_opts, gen_opts, ablate_opts, params_opts,
      synth_opts;
  std::string out_dir = "runs/latest";
  std::string checkpoint, split = "eval";
  std::size_t index = 0, count = 1, max_len = 8;
  std::string turns = "0,3,9", vis = "1";
  std::size_t ctx_len = 4, ans_len = 2;
  bool bidirectional = false;

  auto* train = app.add_subcommand("train", "train a model");
  add_common(train, train_opts);
  train->add_option("--out", out_dir, "output directory");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(eval, eval_opts);
  eval->add_option("--checkpoint", checkpoint, "model.ckpt path")->required();
  eval->add_option("--split", split, "train or eval");
  eval->add_option("--out", out_dir, "output directory");

  auto* gen = app.add_subcommand("generate", "greedy answers for instances");
  add_common(gen, gen_opts);
  gen->add_option("--checkpoint", checkpoint, "model.ckpt path")->required();
  gen->add_option("--index", index, "first eval instance");
  gen->add_option("--count", count, "number of instances");
  gen->add_option("--max-len", max_len, "decoding budget per answer");

  auto* ablate = app.add_subcommand("ablate", "history/vision condition sweep");
  add_common(ablate, ablate_opts);
  ablate->add_option("--turns", turns, "comma-separated history depths");
  ablate->add_option("--vis", vis, "comma-separated 0/1 image flags");
  ablate->add_option("--out", out_dir, "output directory");

  auto* params = app.add_subcommand("params", "parameter accounting report");
  add_common(params, params_opts);

  auto* synth = app.add_subcommand("synth", "write the synthetic corpus");
  add_common(synth, synth_opts);
  synth->add_option("--out", out_dir, "output directory")->required();

  auto* masks = app.add_subcommand("masks", "dump an attention mask grid");
  masks->add_option("--context", ctx_len, "context length");
  masks->add_option("--answer", ans_len, "answer length");
  masks->add_flag("--bidirectional", bidirectional,
                  "full visibility instead of the seq2seq rule");

  CLI11_PARSE(app, argc, argv);

  ConfigGuard cfg;
  char* text = nullptr;

  if (train->parsed()) {
    if (int rc = apply_common(cfg.ptr, train_opts); rc != 0) return rc;
    if (ud_status s = ud_train(cfg.ptr, out_dir.c_str(), &text); s != UD_OK)
      return fail(s);
    print_and_free(text);
  } else if (eval->parsed()) {
    if (int rc = apply_common(cfg.ptr, eval_opts); rc != 0) return rc;
    if (ud_status s = ud_eval(cfg.ptr, checkpoint.c_str(), split.c_str(),
                              out_dir.c_str(), &text);
        s != UD_OK)
      return fail(s);
    print_and_free(text);
  } else if (gen->parsed()) {
    if (int rc = apply_common(cfg.ptr, gen_opts); rc != 0) return rc;
    if (ud_status s = ud_generate(cfg.ptr, checkpoint.c_str(), index, count,
                                  max_len, &text);
        s != UD_OK)
      return fail(s);
    print_and_free(text);
  } else if (ablate->parsed()) {
    if (int rc = apply_common(cfg.ptr, ablate_opts); rc != 0) return rc;
    if (ud_status s = ud_ablate(cfg.ptr, turns.c_str(), vis.c_str(),
                                out_dir.c_str(), &text);
        s != UD_OK)
      return fail(s);
    print_and_free(text);
  } else if (params->parsed()) {
    if (int rc = apply_common(cfg.ptr, params_opts); rc != 0) return rc;
    if (ud_status s = ud_params_report(cfg.ptr, &text); s != UD_OK)
      return fail(s);
    print_and_free(text);
  } else if (synth->parsed()) {
    if (int rc = apply_common(cfg.ptr, synth_opts); rc != 0) return rc;
    if (ud_status s = ud_synth(cfg.ptr, out_dir.c_str(), &text); s != UD_OK)
      return fail(s);
    print_and_free(text);
  } else if (masks->parsed()) {
    if (ud_status s = ud_mask_grid(ctx_len, ans_len, bidirectional ? 1 : 0,
                                   &text);
        s != UD_OK)
      return fail(s);
    print_and_free(text);
  }
  return 0;
}
