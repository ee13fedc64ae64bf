#include "unidial.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "runner.hpp"

using namespace unidial;

struct ud_config {
  RunConfig cfg;
};

namespace {

thread_local std::string g_last_error = "no error";

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(::malloc(s.size() + 1));
  if (out != nullptr) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

ud_status classify(const std::exception& e) {
  if (dynamic_cast<const ParamError*>(&e)) return UD_ERR_USAGE;
  if (dynamic_cast<const TrainError*>(&e)) return UD_ERR_TRAIN;
  if (dynamic_cast<const DataError*>(&e) ||
      dynamic_cast<const TruncationError*>(&e) ||
      dynamic_cast<const IndexError*>(&e)) {
    return UD_ERR_DATA;
  }
  return UD_ERR_INTERNAL;
}

template <typename Fn>
ud_status guarded(Fn&& fn) {
  try {
    fn();
    return UD_OK;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return classify(e);
  } catch (...) {
    g_last_error = "unknown error";
    return UD_ERR_INTERNAL;
  }
}

std::vector<int> parse_csv_ints(const char* csv, const char* what) {
  if (csv == nullptr) throw ParamError(std::string(what) + ": null list");
  std::vector<int> out;
  std::string token;
  for (const char* p = csv;; ++p) {
    if (*p == ',' || *p == '\0') {
      if (!token.empty()) {
        try {
          std::size_t pos = 0;
          out.push_back(std::stoi(token, &pos));
          if (pos != token.size()) throw std::invalid_argument(token);
        } catch (const std::exception&) {
          throw ParamError(std::string(what) + ": bad integer '" + token + "'");
        }
        token.clear();
      }
      if (*p == '\0') break;
    } else if (*p != ' ') {
      token.push_back(*p);
    }
  }
  if (out.empty()) throw ParamError(std::string(what) + ": empty list");
  return out;
}

void require(const void* p, const char* what) {
  if (p == nullptr) throw ParamError(std::string(what) + " is null");
}

}  // namespace

extern "C" {

const char* ud_last_error(void) { return g_last_error.c_str(); }

void ud_free(char* text) { ::free(text); }

ud_config* ud_config_new(void) { return new ud_config{default_config()}; }

void ud_config_free(ud_config* cfg) { delete cfg; }

ud_status ud_config_load(ud_config* cfg, const char* path) {
  return guarded([&] {
    require(cfg, "config");
    require(path, "path");
    cfg->cfg = load_config_file(path);
  });
}

ud_status ud_config_set(ud_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    require(cfg, "config");
    require(key, "key");
    require(value, "value");
    set_key(cfg->cfg, key, value);
  });
}

ud_status ud_config_dump(const ud_config* cfg, char** text) {
  return guarded([&] {
    require(cfg, "config");
    require(text, "out pointer");
    *text = dup_string(resolved_text(cfg->cfg));
  });
}

ud_status ud_config_hash(const ud_config* cfg, char** hex) {
  return guarded([&] {
    require(cfg, "config");
    require(hex, "out pointer");
    *hex = dup_string(config_hash_hex(cfg->cfg));
  });
}

ud_status ud_train(const ud_config* cfg, const char* out_dir, char** summary) {
  return guarded([&] {
    require(cfg, "config");
    require(out_dir, "out_dir");
    TrainOutcome outcome = run_train(cfg->cfg, out_dir);
    if (summary != nullptr) {
      std::string s = "checkpoint=" + outcome.checkpoint_path +
                      "\nsteps=" + std::to_string(outcome.steps) +
                      "\nfinal_loss=" + format_double(outcome.final_loss) +
                      "\nvocab_size=" + std::to_string(outcome.vocab_size) +
                      "\n";
      *summary = dup_string(s);
    }
  });
}

ud_status ud_eval(const ud_config* cfg, const char* checkpoint,
                  const char* split, const char* out_dir, char** report) {
  return guarded([&] {
    require(cfg, "config");
    require(checkpoint, "checkpoint");
    require(split, "split");
    require(out_dir, "out_dir");
    SplitReport rep = run_eval(cfg->cfg, checkpoint, split, out_dir);
    if (report != nullptr) *report = dup_string(format_report(rep));
  });
}

ud_status ud_generate(const ud_config* cfg, const char* checkpoint,
                      size_t start, size_t count, size_t max_len,
                      char** answers) {
  return guarded([&] {
    require(cfg, "config");
    require(checkpoint, "checkpoint");
    require(answers, "out pointer");
    auto lines = run_generate(cfg->cfg, checkpoint, start, count, max_len);
    std::string joined;
    for (const auto& line : lines) {
      joined += line;
      joined += '\n';
    }
    *answers = dup_string(joined);
  });
}

ud_status ud_ablate(const ud_config* cfg, const char* turns_csv,
                    const char* vis_csv, const char* out_dir, char** table) {
  return guarded([&] {
    require(cfg, "config");
    require(out_dir, "out_dir");
    auto cells = run_ablate(cfg->cfg, parse_csv_ints(turns_csv, "turns"),
                            parse_csv_ints(vis_csv, "vis"), out_dir);
    if (table != nullptr) *table = dup_string(format_ablation_table(cells));
  });
}

ud_status ud_params_report(const ud_config* cfg, char** report) {
  return guarded([&] {
    require(cfg, "config");
    require(report, "out pointer");
    *report = dup_string(run_params(cfg->cfg));
  });
}

ud_status ud_synth(const ud_config* cfg, const char* out_dir, char** summary) {
  return guarded([&] {
    require(cfg, "config");
    require(out_dir, "out_dir");
    std::string s = run_synth(cfg->cfg, out_dir);
    if (summary != nullptr) *summary = dup_string(s);
  });
}

ud_status ud_mask_grid(size_t context_len, size_t answer_len,
                       int bidirectional, char** grid) {
  return guarded([&] {
    require(grid, "out pointer");
    *grid = dup_string(
        mask_grid_text(context_len, answer_len, bidirectional != 0));
  });
}

uint64_t ud_count_patch_params(size_t patch, size_t channels, size_t dim) {
  return static_cast<uint64_t>(count_patch_params(patch, channels, dim));
}

}  // extern "C"
