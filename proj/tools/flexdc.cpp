// flexdc: ingest a MATPOWER case and a flexibility overlay, build ED / NCUC /
// transportation models on the global branch model, solve or export them.
//
// Exit codes: 0 optimal (and verified), 1 usage or input error, 2 infeasible,
// 3 unbounded, 4 verification or validation failure, 5 limit reached without
// a certified optimum.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "flexdc/case_io.hpp"
#include "flexdc/formulations.hpp"
#include "flexdc/mps.hpp"
#include "flexdc/reporting.hpp"

namespace fs = std::filesystem;
using namespace flexdc;

namespace {

enum Exit : int { kOk = 0, kUsage = 1, kInfeasible = 2, kUnbounded = 3, kVerifyFailed = 4, kLimit = 5 };

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw InputError("cannot read " + p.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const fs::path& p, std::string_view text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw InputError("cannot write " + p.string());
  out << text;
}

struct Loaded {
  Scenario scenario;
  std::string case_fp;
  std::string overlay_fp;
};

Loaded load(const std::string& case_path, const std::string& overlay_path) {
  const std::string case_text = read_file(case_path);
  std::vector<std::string> warnings;
  SystemCase base;
  try {
    base = parse_case(case_text, &warnings);
  } catch (const MalformedCase& e) {
    throw InputError(fmt::format("{}: {}", case_path, e.what()));
  }
  for (const auto& w : warnings) spdlog::info("{}: {}", case_path, w);
  FlexOverlay overlay;
  std::string overlay_text;
  if (!overlay_path.empty()) {
    overlay_text = read_file(overlay_path);
    try {
      overlay = parse_overlay(overlay_text);
    } catch (const OverlayError& e) {
      throw InputError(fmt::format("{}: {}", overlay_path, e.what()));
    }
  }
  Loaded l;
  try {
    l.scenario = apply_overlay(base, overlay);
  } catch (const OverlayError& e) {
    throw InputError(fmt::format("{}: {}", overlay_path, e.what()));
  }
  l.case_fp = fingerprint(case_text);
  l.overlay_fp = fingerprint(overlay_text);
  return l;
}

void warn_violations(const Scenario& s) {
  for (const auto& v : validate_case(s.system)) spdlog::warn("{}: {}", v.subject, v.message);
  for (const auto& v : validate_horizon(s.horizon)) spdlog::warn("{}: {}", v.subject, v.message);
}

Formulation parse_formulation(const std::string& s) {
  if (s == "ed") return Formulation::Ed;
  if (s == "ncuc") return Formulation::Ncuc;
  return Formulation::Transportation;
}

SolveOptions solve_options(double gap, double time_limit) {
  SolveOptions o;
  o.gap_tol = gap;
  o.time_limit = time_limit;
  o.log = [](std::string_view msg) { spdlog::debug("{}", msg); };
  return o;
}

int exit_for(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return kOk;
    case SolveStatus::Infeasible: return kInfeasible;
    case SolveStatus::Unbounded: return kUnbounded;
    default: return kLimit;
  }
}

struct SolveArgs {
  std::string case_path, overlay_path, formulation = "ed", solver = "embedded", out, verify;
  double gap = 1e-6;
  double time_limit = 1e30;
  bool tie_break = false;
};

struct Solved {
  Problem problem;
  SolveResult result;
  DispatchSolution solution;
};

Solved solve_scenario(const Loaded& in, Formulation f, const SolveArgs& a) {
  Solved s;
  s.problem = build_problem(in.scenario.system, in.scenario.horizon, f);
  spdlog::info("model: {} variables ({} binary), {} rows", s.problem.model.num_variables(), s.problem.model.num_binaries(),
               s.problem.model.num_constraints());
  const SolveOptions opts = solve_options(a.gap, a.time_limit);
  s.result = solve_milp(s.problem.model, opts);
  if (a.tie_break && s.result.status == SolveStatus::Optimal) s.result = solve_tie_broken(s.problem, s.result, opts);
  s.solution = make_solution(s.problem, in.scenario.system, s.result);
  s.solution.case_fingerprint = in.case_fp;
  s.solution.overlay_fingerprint = in.overlay_fp;
  return s;
}

int verify_against(const Solved& s, const SolveArgs& a) {
  const fs::path ref_path = a.verify;
  const ReferenceTable ref = parse_reference(read_file(ref_path));
  std::map<std::string, double> costs;
  if (ref.subject == ReferenceTable::Subject::Ordering) {
    const Formulation f = ref.formulation.empty() ? s.problem.kind : parse_formulation(ref.formulation);
    for (const auto& [member, overlay] : ref.member_overlays) {
      const fs::path overlay_path = ref_path.parent_path() / overlay;
      const Loaded other = load(a.case_path, overlay_path.string());
      if (other.overlay_fp == s.solution.overlay_fingerprint && f == s.problem.kind) {
        costs[member] = s.solution.objective;
        continue;
      }
      spdlog::info("solving chain member {} ({})", member, overlay_path.string());
      const Solved m = solve_scenario(other, f, a);
      if (m.result.status != SolveStatus::Optimal) {
        spdlog::error("chain member {} ended {}", member, to_string(m.result.status));
        return kVerifyFailed;
      }
      costs[member] = m.result.objective;
    }
  }
  const VerifyReport rep = verify(s.solution, ref, costs);
  fmt::print("{}", rep.summary());
  return rep.pass() ? kOk : kVerifyFailed;
}

int cmd_solve(const SolveArgs& a) {
  const Loaded in = load(a.case_path, a.overlay_path);
  warn_violations(in.scenario);
  const Formulation f = parse_formulation(a.formulation);
  if (a.solver == "mps") {
    if (a.out.empty()) throw InputError("--solver mps needs --out");
    const Problem p = build_problem(in.scenario.system, in.scenario.horizon, f);
    const MpsDocument doc = write_mps(p.model);
    for (const auto& w : doc.warnings) spdlog::warn("{}", w);
    write_file(fs::path(a.out) / "model.mps", doc.text);
    spdlog::info("wrote {}", (fs::path(a.out) / "model.mps").string());
    return kOk;
  }
  const Solved s = solve_scenario(in, f, a);
  spdlog::info("{} after {} nodes, {} simplex iterations, {:.3f} s", to_string(s.result.status), s.result.stats.nodes,
               s.result.stats.iterations, s.result.stats.wall_seconds);
  fmt::print("status: {}\n", to_string(s.result.status));
  if (s.result.has_solution()) {
    fmt::print("objective: {}\ngap: {}\n", s.result.objective, s.result.gap);
    const double recomputed = recompute_cost(s.solution, in.scenario.system);
    if (std::abs(recomputed - s.result.objective) > 1e-6 * std::max(1.0, std::abs(recomputed))) {
      spdlog::warn("objective {} differs from recomputed cost {}", s.result.objective, recomputed);
    }
    if (a.out.empty()) {
      fmt::print("\n{}\n{}", render_generation(s.solution), render_solution(s.solution, RenderFormat::Csv));
    } else {
      const fs::path dir = a.out;
      write_file(dir / "flows.csv", render_solution(s.solution, RenderFormat::Csv));
      write_file(dir / "generation.csv", render_generation(s.solution));
      write_file(dir / "solution.json", render_solution(s.solution, RenderFormat::Json));
    }
  }
  const int code = exit_for(s.result.status);
  if (code != kOk || a.verify.empty()) return code;
  return verify_against(s, a);
}

int cmd_validate(const std::string& case_path, const std::string& overlay_path) {
  const Loaded in = load(case_path, overlay_path);
  auto v = validate_case(in.scenario.system);
  const auto h = validate_horizon(in.scenario.horizon);
  v.insert(v.end(), h.begin(), h.end());
  for (const auto& x : v) fmt::print("{}: {}\n", x.subject, x.message);
  const auto& c = in.scenario.system;
  int counts[4] = {0, 0, 0, 0};
  for (const auto& b : c.branches) ++counts[static_cast<int>(b.typology)];
  fmt::print("{} buses, {} generators, {} branches (fixed_ac {}, vssa {}, hvdc {}, zil {}); {} violation(s)\n",
             c.buses.size(), c.generators.size(), c.branches.size(), counts[0], counts[1], counts[2], counts[3], v.size());
  return v.empty() ? kOk : kVerifyFailed;
}

int cmd_export(const std::string& case_path, const std::string& overlay_path, const std::string& formulation,
               const std::string& out) {
  const Loaded in = load(case_path, overlay_path);
  warn_violations(in.scenario);
  const Problem p = build_problem(in.scenario.system, in.scenario.horizon, parse_formulation(formulation));
  const MpsDocument doc = write_mps(p.model, fs::path(case_path).stem().string());
  for (const auto& w : doc.warnings) spdlog::warn("{}", w);
  write_file(out, doc.text);
  fmt::print("{} variables ({} binary), {} rows -> {}\n", p.model.num_variables(), p.model.num_binaries(),
             p.model.num_constraints(), out);
  return kOk;
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("flexdc");
  logger->set_pattern("%^%l%$: %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("FLEXDC_LOG")) spdlog::set_level(spdlog::level::from_str(env));
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"DC-OPF with a global branch model: economic dispatch, unit commitment, switching"};
  app.require_subcommand(1);
  const std::vector<std::string> formulations{"ed", "ncuc", "transportation"};

  SolveArgs sa;
  auto* solve = app.add_subcommand("solve", "build and solve a scenario");
  solve->add_option("--case", sa.case_path, "MATPOWER case file")->required()->check(CLI::ExistingFile);
  solve->add_option("--overlay", sa.overlay_path, "flexibility overlay (TOML)")->check(CLI::ExistingFile);
  solve->add_option("--formulation", sa.formulation)->required()->check(CLI::IsMember(formulations));
  solve->add_option("--solver", sa.solver, "embedded, or mps to only write the model")
      ->check(CLI::IsMember({"embedded", "mps"}));
  solve->add_option("--out", sa.out, "output directory");
  solve->add_option("--verify", sa.verify, "reference table to check against")->check(CLI::ExistingFile);
  solve->add_option("--gap", sa.gap, "relative MILP gap")->check(CLI::NonNegativeNumber);
  solve->add_option("--time-limit", sa.time_limit, "seconds")->check(CLI::PositiveNumber);
  solve->add_flag("--tie-break", sa.tie_break, "prefer fewest open branches, then least |shift|");

  std::string v_case, v_overlay;
  auto* validate = app.add_subcommand("validate", "check a case (and overlay) against the model invariants");
  validate->add_option("--case", v_case)->required()->check(CLI::ExistingFile);
  validate->add_option("--overlay", v_overlay)->check(CLI::ExistingFile);

  std::string e_case, e_overlay, e_formulation, e_out;
  auto* exp = app.add_subcommand("export", "write the model as free MPS without solving");
  exp->add_option("--case", e_case)->required()->check(CLI::ExistingFile);
  exp->add_option("--overlay", e_overlay)->check(CLI::ExistingFile);
  exp->add_option("--formulation", e_formulation)->required()->check(CLI::IsMember(formulations));
  exp->add_option("--out", e_out, "MPS file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, std::cout, std::cerr);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*solve) return cmd_solve(sa);
    if (*validate) return cmd_validate(v_case, v_overlay);
    return cmd_export(e_case, e_overlay, e_formulation, e_out);
  } catch (const InputError& e) {
    spdlog::error("{}", e.what());
    return kUsage;
  } catch (const DimensionMismatch& e) {
    spdlog::error("verification: {}", e.what());
    return kVerifyFailed;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kUsage;
  }
}
