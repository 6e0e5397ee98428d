#pragma once

#include <optional>
#include <string>

#include "config.hpp"

namespace cellfree::cmd {

/// Execution options layered on top of a RunConfig by the caller (CLI flags).
struct RunOptions {
  std::optional<uint64_t> seed;  // overrides config mc.seed
  bool strict_paper = false;     // published APC coefficients verbatim
  ApcMode apc_mode = ApcMode::kPolynomial;
};

/// Single-point evaluation, JSON document.
std::string evaluate_json(const cfg::RunConfig& c, const RunOptions& o);

/// Parameter sweep over the configured axes; format csv | json.
/// Rows appear in deterministic grid order; the CSV header names every
/// column. Grid points violating the parameter invariants are skipped.
std::string sweep_doc(const cfg::RunConfig& c, const RunOptions& o,
                      const std::string& format);

/// Single-variable reports (and a joint 2-D sweep when two integer
/// variables are requested). `variables` is a comma list of
/// zeta|lambda|K|N or "all".
std::string optimize_json(const cfg::RunConfig& c, const RunOptions& o,
                          const std::string& variables);

struct SimulateResult {
  std::string summary_json;
  std::string records_ndjson;  // empty unless mc.emit_records
};
SimulateResult simulate(const cfg::RunConfig& c, const RunOptions& o);

struct ReproduceResult {
  std::string dataset_csv;
  std::string meta_json;
};
/// figure: fig1 | fig3 | fig4 | fig5. Datasets carry the reference operating
/// points baked in; meta holds argmax annotations.
ReproduceResult reproduce(const cfg::RunConfig& c, const RunOptions& o,
                          const std::string& figure);

}  // namespace cellfree::cmd
