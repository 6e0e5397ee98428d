#include "cellfree/cellfree.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "commands.hpp"
#include "config.hpp"

namespace {

thread_local std::string g_create_error;

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

struct cf_context {
  cellfree::cfg::RunConfig config;
  cellfree::cmd::RunOptions options;
  std::string last_error;
};

namespace {

cf_status classify(const std::exception& e, std::string* msg) {
  *msg = e.what();
  if (dynamic_cast<const cellfree::FeasibilityError*>(&e))
    return CF_ERROR_INFEASIBLE;
  if (dynamic_cast<const cellfree::SimulationError*>(&e))
    return CF_ERROR_SIMULATION;
  if (dynamic_cast<const cellfree::ConfigError*>(&e)) return CF_ERROR_CONFIG;
  if (dynamic_cast<const std::domain_error*>(&e)) return CF_ERROR_CONFIG;
  if (dynamic_cast<const std::invalid_argument*>(&e)) return CF_ERROR_CONFIG;
  return CF_ERROR;
}

template <typename Fn>
cf_status guarded(cf_context* ctx, Fn&& fn) {
  if (!ctx) return CF_ERROR_CONFIG;
  try {
    fn();
    return CF_OK;
  } catch (const std::exception& e) {
    return classify(e, &ctx->last_error);
  } catch (...) {
    ctx->last_error = "unknown error";
    return CF_ERROR;
  }
}

}  // namespace

extern "C" {

const char* cf_version(void) { return "1.0.0"; }

cf_status cf_context_create(const char* config_json, cf_context** out_ctx) {
  if (!out_ctx) return CF_ERROR_CONFIG;
  *out_ctx = nullptr;
  if (!config_json) {
    g_create_error = "config_json is NULL";
    return CF_ERROR_CONFIG;
  }
  try {
    auto ctx = new cf_context();
    ctx->config = cellfree::cfg::parse_config(config_json);
    *out_ctx = ctx;
    return CF_OK;
  } catch (const std::exception& e) {
    std::string msg;
    const cf_status st = classify(e, &msg);
    g_create_error = msg;
    return st;
  }
}

cf_status cf_context_create_from_file(const char* path, cf_context** out_ctx) {
  if (!out_ctx) return CF_ERROR_CONFIG;
  *out_ctx = nullptr;
  if (!path) {
    g_create_error = "path is NULL";
    return CF_ERROR_CONFIG;
  }
  try {
    auto ctx = new cf_context();
    ctx->config = cellfree::cfg::load_config(path);
    *out_ctx = ctx;
    return CF_OK;
  } catch (const std::exception& e) {
    std::string msg;
    const cf_status st = classify(e, &msg);
    g_create_error = msg;
    return st;
  }
}

void cf_context_free(cf_context* ctx) { delete ctx; }

const char* cf_last_error(const cf_context* ctx) {
  return ctx ? ctx->last_error.c_str() : g_create_error.c_str();
}

cf_status cf_context_set_seed(cf_context* ctx, uint64_t seed) {
  return guarded(ctx, [&] { ctx->options.seed = seed; });
}

cf_status cf_context_set_option(cf_context* ctx, const char* key,
                                const char* value) {
  if (!ctx) return CF_ERROR_CONFIG;
  if (!key || !value) {
    ctx->last_error = "option key/value is NULL";
    return CF_ERROR_CONFIG;
  }
  return guarded(ctx, [&] {
    const std::string k = key, v = value;
    if (k == "strict_paper") {
      if (v != "0" && v != "1")
        throw cellfree::ConfigError("strict_paper: expected 0 or 1");
      ctx->options.strict_paper = v == "1";
    } else if (k == "apc_mode") {
      if (v == "polynomial")
        ctx->options.apc_mode = cellfree::ApcMode::kPolynomial;
      else if (v == "first-principles")
        ctx->options.apc_mode = cellfree::ApcMode::kFirstPrinciples;
      else
        throw cellfree::ConfigError(
            "apc_mode: expected polynomial or first-principles");
    } else {
      throw cellfree::ConfigError("unknown option '" + k + "'");
    }
  });
}

cf_status cf_evaluate(cf_context* ctx, char** out_json) {
  if (!ctx || !out_json) return CF_ERROR_CONFIG;
  return guarded(ctx, [&] {
    *out_json = dup_string(cellfree::cmd::evaluate_json(ctx->config, ctx->options));
  });
}

cf_status cf_sweep(cf_context* ctx, const char* format, char** out_doc) {
  if (!ctx || !out_doc) return CF_ERROR_CONFIG;
  return guarded(ctx, [&] {
    const std::string fmt = format ? format : "csv";
    if (fmt != "csv" && fmt != "json")
      throw cellfree::ConfigError("format: expected csv or json");
    *out_doc = dup_string(cellfree::cmd::sweep_doc(ctx->config, ctx->options, fmt));
  });
}

cf_status cf_optimize(cf_context* ctx, const char* variables,
                      char** out_json) {
  if (!ctx || !out_json) return CF_ERROR_CONFIG;
  return guarded(ctx, [&] {
    *out_json = dup_string(cellfree::cmd::optimize_json(
        ctx->config, ctx->options, variables ? variables : "all"));
  });
}

cf_status cf_simulate(cf_context* ctx, char** out_summary_json,
                      char** out_records_ndjson) {
  if (!ctx || !out_summary_json) return CF_ERROR_CONFIG;
  return guarded(ctx, [&] {
    const cellfree::cmd::SimulateResult r =
        cellfree::cmd::simulate(ctx->config, ctx->options);
    *out_summary_json = dup_string(r.summary_json);
    if (out_records_ndjson) *out_records_ndjson = dup_string(r.records_ndjson);
  });
}

cf_status cf_reproduce(cf_context* ctx, const char* figure,
                       char** out_dataset_csv, char** out_meta_json) {
  if (!ctx || !figure || !out_dataset_csv || !out_meta_json)
    return CF_ERROR_CONFIG;
  return guarded(ctx, [&] {
    const cellfree::cmd::ReproduceResult r =
        cellfree::cmd::reproduce(ctx->config, ctx->options, figure);
    *out_dataset_csv = dup_string(r.dataset_csv);
    *out_meta_json = dup_string(r.meta_json);
  });
}

void cf_string_free(char* s) { std::free(s); }

}  // extern "C"
