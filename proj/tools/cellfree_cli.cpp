// cellfree command-line tool. Talks to the shared library exclusively
// through the C interface in cellfree/cellfree.h.

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cellfree/cellfree.h"

namespace {

int status_to_exit_code(cf_status st) {
  switch (st) {
    case CF_OK:
      return 0;
    case CF_ERROR_CONFIG:
      return 2;
    case CF_ERROR_INFEASIBLE:
      return 3;
    case CF_ERROR_SIMULATION:
      return 4;
    default:
      return 1;
  }
}

struct StringResult {
  char* ptr = nullptr;
  ~StringResult() { cf_string_free(ptr); }
  std::string str() const { return ptr ? std::string(ptr) : std::string(); }
};

struct ContextHandle {
  cf_context* ctx = nullptr;
  ~ContextHandle() { cf_context_free(ctx); }
};

int fail(cf_status st, const cf_context* ctx) {
  std::cerr << "error: " << cf_last_error(ctx) << "\n";
  return status_to_exit_code(st);
}

bool write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    if (!content.empty() && content.back() != '\n') std::cout << "\n";
    return true;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    std::cerr << "error: cannot write '" << path << "'\n";
    return false;
  }
  out << content;
  return true;
}

std::optional<uint64_t> parse_seed_env() {
  const char* env = std::getenv("CELLFREE_EE_SEED");
  if (!env || !*env) return std::nullopt;
  try {
    return std::stoull(env);
  } catch (const std::exception&) {
    std::cerr << "warning: ignoring malformed CELLFREE_EE_SEED\n";
    return std::nullopt;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Downlink energy-efficiency analysis for cell-free massive "
               "MIMO networks with Poisson-distributed access points"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  std::string config_path;
  std::string out_path = "-";
  std::string format;
  std::string variables = "all";
  std::string figure;
  std::optional<uint64_t> seed_flag;
  bool strict_paper = false;
  std::string apc_mode = "polynomial";

  app.add_option("--config", config_path, "JSON configuration file")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", seed_flag, "Monte Carlo seed (u64)");
  app.add_option("--out", out_path, "output path, '-' for stdout");
  app.add_option("--format", format, "csv|json (sweep output)");
  app.add_flag("--strict-paper", strict_paper,
               "use the published power-model coefficients verbatim");
  app.add_option("--apc-mode", apc_mode,
                 "polynomial|first-principles area power construction")
      ->check(CLI::IsMember({"polynomial", "first-principles"}));

  CLI::App* sweep = app.add_subcommand("sweep", "parameter sweep (CSV/JSON)");
  CLI::App* optimize =
      app.add_subcommand("optimize", "closed-form + oracle optimizer reports");
  optimize->add_option("--variable", variables,
                       "comma list of zeta,lambda,K,N or 'all'");
  CLI::App* simulate =
      app.add_subcommand("simulate", "Monte Carlo SE estimation");
  CLI::App* reproduce = app.add_subcommand(
      "reproduce", "regenerate a reference figure dataset");
  reproduce->add_option("figure", figure, "fig1|fig3|fig4|fig5")->required();

  CLI11_PARSE(app, argc, argv);

  ContextHandle h;
  cf_status st;
  if (!config_path.empty())
    st = cf_context_create_from_file(config_path.c_str(), &h.ctx);
  else
    st = cf_context_create("{}", &h.ctx);
  if (st != CF_OK) return fail(st, nullptr);

  const std::optional<uint64_t> seed =
      seed_flag ? seed_flag : parse_seed_env();
  if (seed) {
    st = cf_context_set_seed(h.ctx, *seed);
    if (st != CF_OK) return fail(st, h.ctx);
  }
  st = cf_context_set_option(h.ctx, "strict_paper", strict_paper ? "1" : "0");
  if (st != CF_OK) return fail(st, h.ctx);
  st = cf_context_set_option(h.ctx, "apc_mode", apc_mode.c_str());
  if (st != CF_OK) return fail(st, h.ctx);

  if (sweep->parsed()) {
    StringResult doc;
    const std::string fmt = format.empty() ? "csv" : format;
    st = cf_sweep(h.ctx, fmt.c_str(), &doc.ptr);
    if (st != CF_OK) return fail(st, h.ctx);
    return write_output(out_path, doc.str()) ? 0 : 1;
  }
  if (optimize->parsed()) {
    StringResult doc;
    st = cf_optimize(h.ctx, variables.c_str(), &doc.ptr);
    if (st != CF_OK) return fail(st, h.ctx);
    return write_output(out_path, doc.str()) ? 0 : 1;
  }
  if (simulate->parsed()) {
    StringResult summary, records;
    st = cf_simulate(h.ctx, &summary.ptr, &records.ptr);
    if (st != CF_OK) return fail(st, h.ctx);
    if (!write_output(out_path, summary.str())) return 1;
    if (records.ptr && *records.ptr) {
      const std::string rec_path =
          (out_path.empty() || out_path == "-") ? std::string("-")
                                                : out_path + ".records.ndjson";
      if (rec_path == "-")
        std::cout << records.str();
      else if (!write_output(rec_path, records.str()))
        return 1;
    }
    return 0;
  }
  if (reproduce->parsed()) {
    StringResult csv, meta;
    st = cf_reproduce(h.ctx, figure.c_str(), &csv.ptr, &meta.ptr);
    if (st != CF_OK) return fail(st, h.ctx);
    if (out_path.empty() || out_path == "-") {
      std::cout << csv.str();
      std::cerr << meta.str() << "\n";
      return 0;
    }
    if (!write_output(out_path + ".csv", csv.str())) return 1;
    if (!write_output(out_path + ".meta.json", meta.str())) return 1;
    return 0;
  }
  return 1;
}
