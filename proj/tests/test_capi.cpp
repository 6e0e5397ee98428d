#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <string>

#include <json.hpp>

#include "cellfree/cellfree.h"

using nlohmann::json;

#ifndef CONFIG_DIR
#define CONFIG_DIR "configs"
#endif

namespace {

struct Ctx {
  cf_context* p = nullptr;
  ~Ctx() { cf_context_free(p); }
};

struct Str {
  char* p = nullptr;
  ~Str() { cf_string_free(p); }
  std::string s() const { return p ? std::string(p) : std::string(); }
};

}  // namespace

TEST_CASE("version and null-safety") {
  REQUIRE(cf_version() != nullptr);
  CHECK(std::strlen(cf_version()) > 0);
  cf_string_free(nullptr);  // must be a no-op
  CHECK(cf_context_create(nullptr, nullptr) == CF_ERROR_CONFIG);
  cf_context_free(nullptr);
}

TEST_CASE("context creation and error reporting") {
  Ctx ok;
  REQUIRE(cf_context_create("{}", &ok.p) == CF_OK);
  REQUIRE(ok.p != nullptr);

  Ctx bad;
  CHECK(cf_context_create("not json", &bad.p) == CF_ERROR_CONFIG);
  CHECK(bad.p == nullptr);
  CHECK(std::strlen(cf_last_error(nullptr)) > 0);

  Ctx unknown;
  CHECK(cf_context_create(R"({"system":{"nope":1}})", &unknown.p) ==
        CF_ERROR_CONFIG);
  CHECK(std::string(cf_last_error(nullptr)).find("nope") != std::string::npos);
}

TEST_CASE("context creation from the shipped config file") {
  Ctx c;
  const std::string path = std::string(CONFIG_DIR) + "/defaults.json";
  REQUIRE(cf_context_create_from_file(path.c_str(), &c.p) == CF_OK);
  Str out;
  REQUIRE(cf_evaluate(c.p, &out.p) == CF_OK);
  const json j = json::parse(out.s());
  CHECK(j["check_gamma"].get<double>() > 35.0);

  Ctx missing;
  CHECK(cf_context_create_from_file("/no/such/file.json", &missing.p) ==
        CF_ERROR_CONFIG);
}

TEST_CASE("options validate their values") {
  Ctx c;
  REQUIRE(cf_context_create("{}", &c.p) == CF_OK);
  CHECK(cf_context_set_option(c.p, "strict_paper", "1") == CF_OK);
  CHECK(cf_context_set_option(c.p, "apc_mode", "first-principles") == CF_OK);
  CHECK(cf_context_set_option(c.p, "apc_mode", "bogus") == CF_ERROR_CONFIG);
  CHECK(std::string(cf_last_error(c.p)).find("apc_mode") != std::string::npos);
  CHECK(cf_context_set_option(c.p, "wat", "1") == CF_ERROR_CONFIG);
}

TEST_CASE("sweep through the C surface") {
  Ctx c;
  REQUIRE(cf_context_create(
              R"({"sweep":{"variables":[{"name":"lambda","min":5,"max":200,"steps":10,"scale":"log"}]}})",
              &c.p) == CF_OK);
  Str doc;
  REQUIRE(cf_sweep(c.p, "csv", &doc.p) == CF_OK);
  CHECK(doc.s().rfind("lambda_ap_per_km2,", 0) == 0);
  Str jdoc;
  REQUIRE(cf_sweep(c.p, "json", &jdoc.p) == CF_OK);
  CHECK(json::parse(jdoc.s()).size() == 11);
  Str bad;
  CHECK(cf_sweep(c.p, "xml", &bad.p) == CF_ERROR_CONFIG);
}

TEST_CASE("infeasible optimization maps to CF_ERROR_INFEASIBLE") {
  Ctx c;
  REQUIRE(cf_context_create("{}", &c.p) == CF_OK);  // default gamma0 = 3
  Str out;
  CHECK(cf_optimize(c.p, "zeta", &out.p) == CF_ERROR_INFEASIBLE);
  CHECK(std::strlen(cf_last_error(c.p)) > 0);

  Ctx c2;
  REQUIRE(cf_context_create(R"({"constraint":{"gamma0":0.03}})", &c2.p) ==
          CF_OK);
  Str out2;
  REQUIRE(cf_optimize(c2.p, "zeta,lambda", &out2.p) == CF_OK);
  const json j = json::parse(out2.s());
  CHECK(j["reports"].size() == 2);
}

TEST_CASE("simulation determinism across worker counts, C surface") {
  const char* cfg1 =
      R"({"mc":{"n_realizations":64,"seed":99,"threads":1,"emit_records":true}})";
  const char* cfg8 =
      R"({"mc":{"n_realizations":64,"seed":99,"threads":8,"emit_records":true}})";
  Ctx a, b;
  REQUIRE(cf_context_create(cfg1, &a.p) == CF_OK);
  REQUIRE(cf_context_create(cfg8, &b.p) == CF_OK);
  Str sa, ra, sb, rb;
  REQUIRE(cf_simulate(a.p, &sa.p, &ra.p) == CF_OK);
  REQUIRE(cf_simulate(b.p, &sb.p, &rb.p) == CF_OK);
  CHECK(ra.s() == rb.s());  // per-realization records byte-identical
  const json ja = json::parse(sa.s());
  const json jb = json::parse(sb.s());
  CHECK(ja["mean_se_bps_hz"] == jb["mean_se_bps_hz"]);
  CHECK(ja["stderr_se_bps_hz"] == jb["stderr_se_bps_hz"]);

  // seed override through the API
  REQUIRE(cf_context_set_seed(a.p, 1234) == CF_OK);
  Str sa2, ra2;
  REQUIRE(cf_simulate(a.p, &sa2.p, &ra2.p) == CF_OK);
  CHECK(json::parse(sa2.s())["seed"] == 1234);
}

TEST_CASE("reproduce through the C surface") {
  Ctx c;
  REQUIRE(cf_context_create(R"({"mc":{"n_realizations":16,"seed":5}})", &c.p) ==
          CF_OK);
  Str csv, meta;
  REQUIRE(cf_reproduce(c.p, "fig5", &csv.p, &meta.p) == CF_OK);
  CHECK(json::parse(meta.s())["figure"] == "fig5");
  CHECK(!csv.s().empty());
  Str c2, m2;
  CHECK(cf_reproduce(c.p, "fig9", &c2.p, &m2.p) == CF_ERROR_CONFIG);
}
