// multilens: image counting for multiplane point-mass lenses.
//
// Subcommands
//   bound     image-count bound from a mass layout
//   solve     find and count the images of a point source
//   caustics  trace critical curves and caustics
//   sweep     randomized bound-safety sweep
//   validate  check a configuration file
//
// Exit codes: 0 ok, 2 invalid configuration or mass layout, 3 non-generic
// source, 4 the two solvers disagree, 5 a count exceeded its bound,
// 6 empty result (no critical curve in the window).

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "multilens/multilens.hpp"

namespace {

using namespace multilens;

constexpr int exit_ok = 0;
constexpr int exit_invalid = 2;
constexpr int exit_non_generic = 3;
constexpr int exit_disagreement = 4;
constexpr int exit_bound_violation = 5;
constexpr int exit_empty = 6;

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) parts.push_back(item);
  return parts;
}

std::vector<int> parse_g(const std::string& s) {
  std::vector<int> g;
  for (const std::string& part : split_commas(s)) {
    size_t pos = 0;
    const int v = std::stoi(part, &pos);
    if (pos != part.size() || v <= 0)
      throw std::invalid_argument("--g expects positive integers, got \"" + part + "\"");
    g.push_back(v);
  }
  if (g.empty()) throw std::invalid_argument("--g must not be empty");
  return g;
}

cplx parse_complex_pair(const std::string& s, const char* what) {
  const auto parts = split_commas(s);
  if (parts.size() != 2)
    throw std::invalid_argument(std::string(what) + " expects RE,IM");
  size_t p1 = 0, p2 = 0;
  const double re = std::stod(parts[0], &p1);
  const double im = std::stod(parts[1], &p2);
  if (p1 != parts[0].size() || p2 != parts[1].size())
    throw std::invalid_argument(std::string(what) + " expects RE,IM");
  return {re, im};
}

// --window accepts HALF_WIDTH or CX,CY,HALF_WIDTH
grid_spec parse_window(const std::string& s, grid_spec base) {
  const auto parts = split_commas(s);
  std::vector<double> v;
  for (const std::string& p : parts) {
    size_t pos = 0;
    v.push_back(std::stod(p, &pos));
    if (pos != p.size()) throw std::invalid_argument("--window expects numbers");
  }
  if (v.size() == 1) {
    base.half_width = v[0];
  } else if (v.size() == 3) {
    base.center = cplx(v[0], v[1]);
    base.half_width = v[2];
  } else {
    throw std::invalid_argument("--window expects HW or CX,CY,HW");
  }
  if (base.half_width <= 0) throw std::invalid_argument("--window half width must be positive");
  return base;
}

int thread_count() {
  if (const char* env = std::getenv("MULTILENS_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

void write_text(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot open output file: " + out_path);
  out << text;
}

jval_ptr images_to_jval(const std::vector<image_solution>& images) {
  auto arr = jval::array();
  for (const image_solution& img : images) {
    auto ji = jval::object();
    ji->set("position", complex_to_jval(img.position));
    ji->set("residual", jval::make(img.residual));
    ji->set("jac_det", jval::make(img.jac_det));
    ji->set("parity", jval::make(img.parity));
    ji->set("method", jval::make(method_name(img.method)));
    arr->push(ji);
  }
  return arr;
}

jval_ptr bound_to_jval(const bound_report& rep) {
  auto root = jval::object();
  auto g = jval::array();
  for (int v : rep.g) g->push(jval::make(v));
  root->set("g", g);
  auto coeffs = jval::array();
  for (int64_t c : rep.coeffs) coeffs->push(jval::make(c));
  root->set("coeffs", coeffs);
  root->set("e", jval::make(rep.e));
  root->set("o", jval::make(rep.o));
  root->set("theorem1", jval::make(rep.theorem1));
  root->set("bezout", jval::make(rep.bezout));
  auto specials = jval::object();
  for (const auto& [name, value] : rep.specials) specials->set(name, jval::make(value));
  root->set("specials", specials);
  return root;
}

std::string bound_to_csv(const bound_report& rep) {
  std::string g;
  for (size_t i = 0; i < rep.g.size(); ++i) {
    if (i) g += ' ';
    g += std::to_string(rep.g[i]);
  }
  std::string out = "g,e,o,theorem1,bezout\n";
  out += '"' + g + "\"," + std::to_string(rep.e) + ',' + std::to_string(rep.o) + ',' +
         std::to_string(rep.theorem1) + ',' + std::to_string(rep.bezout) + '\n';
  return out;
}

struct common_opts {
  std::string config_path;
  std::string source_str;
  std::string out_path;
  std::string format = "json";
  std::string window_str;
  double tol = 0;  // 0 keeps the default
  int grid_n = 200;
};

solve_tolerances make_tolerances(const common_opts& opt) {
  solve_tolerances tol;
  if (opt.tol > 0) tol.accept_tol_base = opt.tol;
  return tol;
}

cplx resolve_source(const common_opts& opt, const ensemble_config& cfg) {
  if (!opt.source_str.empty()) return parse_complex_pair(opt.source_str, "--source");
  if (cfg.source) return *cfg.source;
  throw std::invalid_argument("no source: pass --source RE,IM or add \"source\" to the config");
}

int run_bound(const common_opts& opt, const std::string& g_str) {
  std::vector<int> g;
  if (!g_str.empty())
    g = parse_g(g_str);
  else if (!opt.config_path.empty())
    g = load_config(opt.config_path).to_ensemble().mass_counts();
  else
    throw std::invalid_argument("bound needs --g or --config");
  const bound_report rep = make_bound_report(g);
  if (opt.format == "csv")
    write_text(opt.out_path, bound_to_csv(rep));
  else
    write_text(opt.out_path, dump_json(bound_to_jval(rep)) + "\n");
  return exit_ok;
}

int run_solve(const common_opts& opt) {
  if (opt.format == "csv") throw std::invalid_argument("solve supports only --format json");
  const ensemble_config cfg = load_config(opt.config_path);
  const ensemble ens = cfg.to_ensemble();
  const cplx w = resolve_source(opt, cfg);
  const solve_tolerances tol = make_tolerances(opt);
  std::optional<grid_spec> image_grid;
  grid_spec base = grid_spec::covering(ens, w, opt.grid_n);
  if (!opt.window_str.empty())
    image_grid = parse_window(opt.window_str, base);
  else if (opt.grid_n != 200)
    image_grid = base;

  const auto t0 = std::chrono::steady_clock::now();
  const count_report rep = count_images(ens, w, tol, solver_caps{}, image_grid, {});
  const auto wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - t0)
                           .count();

  auto root = jval::object();
  root->set("config_digest", jval::make(static_cast<int64_t>(config_digest(cfg))));
  root->set("source", complex_to_jval(w));
  root->set("count", jval::make(rep.count));
  root->set("bound", jval::make(rep.bound));
  root->set("resultant_ran", jval::make(rep.resultant_ran));
  if (!rep.resultant_skip_reason.empty())
    root->set("resultant_skip_reason", jval::make(rep.resultant_skip_reason));
  root->set("caustic_distance", jval::make(rep.gen.caustic_distance));
  root->set("images", images_to_jval(rep.images));
  root->set("wall_ms", jval::make(static_cast<int64_t>(wall_ms)));
  write_text(opt.out_path, dump_json(root) + "\n");
  return exit_ok;
}

int run_caustics(const common_opts& opt) {
  if (opt.format == "csv") throw std::invalid_argument("caustics supports only --format json");
  const ensemble_config cfg = load_config(opt.config_path);
  const ensemble ens = cfg.to_ensemble();
  const solve_tolerances tol = make_tolerances(opt);
  grid_spec grid = grid_spec::critical_window(ens, opt.grid_n);
  if (!opt.window_str.empty()) grid = parse_window(opt.window_str, grid);

  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<caustic_sample> samples =
      trace_critical_and_caustics(ens, grid, tol.trace_tol);
  const auto wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - t0)
                           .count();

  auto root = jval::object();
  root->set("config_digest", jval::make(static_cast<int64_t>(config_digest(cfg))));
  root->set("grid_n", jval::make(grid.n));
  auto window = jval::array();
  window->push(jval::make(grid.center.real()));
  window->push(jval::make(grid.center.imag()));
  window->push(jval::make(grid.half_width));
  root->set("window", window);
  auto arr = jval::array();
  for (const caustic_sample& s : samples) {
    auto js = jval::object();
    js->set("critical", complex_to_jval(s.critical_point));
    js->set("caustic", complex_to_jval(s.caustic_point));
    arr->push(js);
  }
  root->set("samples", arr);
  root->set("count", jval::make(static_cast<int64_t>(samples.size())));
  root->set("wall_ms", jval::make(static_cast<int64_t>(wall_ms)));
  write_text(opt.out_path, dump_json(root) + "\n");
  return exit_ok;
}

int run_validate(const common_opts& opt) {
  if (opt.format == "csv") throw std::invalid_argument("validate supports only --format json");
  const ensemble_config cfg = load_config(opt.config_path);
  const ensemble ens = cfg.to_ensemble();
  auto root = jval::object();
  root->set("valid", jval::make(true));
  root->set("planes", jval::make(ens.plane_count()));
  auto g = jval::array();
  for (int v : ens.mass_counts()) g->push(jval::make(v));
  root->set("g", g);
  root->set("total_mass", jval::make(ens.total_mass()));
  root->set("theorem1", jval::make(image_bound(ens.mass_counts())));
  root->set("config_digest", jval::make(static_cast<int64_t>(config_digest(cfg))));
  if (cfg.source) {
    const genericity_report gen = genericity_check(ens, *cfg.source, make_tolerances(opt));
    root->set("source", complex_to_jval(*cfg.source));
    root->set("generic", jval::make(gen.pass));
    root->set("caustic_distance", jval::make(gen.caustic_distance));
    root->set("min_abs_jac_det", jval::make(gen.min_abs_jac_det));
  }
  write_text(opt.out_path, dump_json(root) + "\n");
  return exit_ok;
}

// One sweep trial; failures that should abort the sweep are rethrown by the
// caller via the stored exception kind.
struct trial_outcome {
  std::string record;      // JSONL line (no wall time so output is reproducible)
  int exit = exit_ok;      // first nonzero outcome aborts the sweep
  std::string error;
};

trial_outcome run_trial(uint64_t seed, int trial, const sample_params& par,
                        const solve_tolerances& tol) {
  trial_outcome out;
  std::mt19937_64 rng = trial_rng(seed, static_cast<uint64_t>(trial));
  auto rec = jval::object();
  rec->set("trial", jval::make(trial));
  try {
    generic_case gc = sample_generic_case(rng, par, tol);
    const count_report rep = count_images(gc.ens, gc.w, std::move(gc.gen), tol);
    auto g = jval::array();
    for (int v : gc.ens.mass_counts()) g->push(jval::make(v));
    rec->set("g", g);
    rec->set("planes", jval::make(gc.ens.plane_count()));
    rec->set("source", complex_to_jval(gc.w));
    rec->set("count", jval::make(rep.count));
    rec->set("bound", jval::make(rep.bound));
    rec->set("resultant_ran", jval::make(rep.resultant_ran));
    rec->set("resamples", jval::make(gc.resamples));
    rec->set("status", jval::make("ok"));
  } catch (const non_generic_error&) {
    rec->set("status", jval::make("skipped_non_generic"));
  } catch (const method_disagreement_error& e) {
    rec->set("status", jval::make("method_disagreement"));
    out.exit = exit_disagreement;
    out.error = e.what();
  } catch (const bound_violation_error& e) {
    rec->set("status", jval::make("bound_violation"));
    out.exit = exit_bound_violation;
    out.error = e.what();
  }
  out.record = dump_json(rec);
  return out;
}

int run_sweep(const common_opts& opt, int trials, uint64_t seed) {
  if (trials <= 0) throw std::invalid_argument("--trials must be positive");
  const solve_tolerances tol = make_tolerances(opt);
  const sample_params par;
  const int workers = std::min(thread_count(), trials);

  std::vector<trial_outcome> outcomes(static_cast<size_t>(trials));
  std::atomic<int> next{0};
  auto work = [&] {
    for (;;) {
      const int t = next.fetch_add(1);
      if (t >= trials) return;
      outcomes[static_cast<size_t>(t)] = run_trial(seed, t, par, tol);
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < workers; ++i) pool.emplace_back(work);
    for (std::thread& th : pool) th.join();
  }

  // records in trial order, independent of the thread schedule
  if (!opt.out_path.empty()) {
    std::ofstream out(opt.out_path, std::ios::binary);
    if (!out) throw std::invalid_argument("cannot open output file: " + opt.out_path);
    for (const trial_outcome& o : outcomes) out << o.record << '\n';
  }

  int ok = 0, skipped = 0, max_count = 0;
  int64_t max_bound = 0;
  int worst_exit = exit_ok;
  std::string worst_error;
  for (const trial_outcome& o : outcomes) {
    if (o.exit != exit_ok && worst_exit == exit_ok) {
      worst_exit = o.exit;
      worst_error = o.error;
    }
    if (o.record.find("\"status\":\"ok\"") != std::string::npos) ++ok;
    if (o.record.find("skipped_non_generic") != std::string::npos) ++skipped;
  }
  // recover numeric summary from the structured records
  for (const trial_outcome& o : outcomes) {
    const auto cpos = o.record.find("\"count\":");
    if (cpos != std::string::npos) max_count = std::max(max_count, std::atoi(o.record.c_str() + cpos + 8));
    const auto bpos = o.record.find("\"bound\":");
    if (bpos != std::string::npos)
      max_bound = std::max<int64_t>(max_bound, std::atoll(o.record.c_str() + bpos + 8));
  }

  if (opt.format == "csv") {
    std::string csv = "trials,ok,skipped,max_count,max_bound,violations\n";
    csv += std::to_string(trials) + ',' + std::to_string(ok) + ',' + std::to_string(skipped) +
           ',' + std::to_string(max_count) + ',' + std::to_string(max_bound) + ',' +
           std::to_string(worst_exit == exit_ok ? 0 : 1) + '\n';
    std::cout << csv;
  } else {
    auto root = jval::object();
    root->set("trials", jval::make(trials));
    root->set("seed", jval::make(static_cast<int64_t>(seed)));
    root->set("ok", jval::make(ok));
    root->set("skipped_non_generic", jval::make(skipped));
    root->set("max_count", jval::make(max_count));
    root->set("max_bound", jval::make(max_bound));
    root->set("violations", jval::make(worst_exit == exit_ok ? 0 : 1));
    std::cout << dump_json(root) << "\n";
  }
  if (worst_exit != exit_ok) {
    std::cerr << "error: " << worst_error << "\n";
    return worst_exit;
  }
  return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multiplane point-mass lens image counting"};
  app.require_subcommand(1);

  common_opts opt;
  std::string g_str;
  int trials = 100;
  uint64_t seed = 1;

  auto add_common = [&](CLI::App* cmd, bool with_config = true) {
    if (with_config) cmd->add_option("--config", opt.config_path, "ensemble config file (JSON)");
    cmd->add_option("--out", opt.out_path, "write the result here instead of stdout");
    cmd->add_option("--format", opt.format, "output format")
        ->check(CLI::IsMember({"json", "csv"}));
  };

  CLI::App* bound = app.add_subcommand("bound", "image-count bound from a mass layout");
  bound->add_option("--g", g_str, "comma-separated masses per plane, e.g. 2,1,3");
  add_common(bound);

  CLI::App* solve = app.add_subcommand("solve", "find the images of a point source");
  add_common(solve);
  solve->get_option("--config")->required();
  solve->add_option("--source", opt.source_str, "source position RE,IM");
  solve->add_option("--tol", opt.tol, "residual acceptance tolerance");
  solve->add_option("--grid-n", opt.grid_n, "newton start-grid nodes per side");
  solve->add_option("--window", opt.window_str, "start window: HW or CX,CY,HW");

  CLI::App* caustics = app.add_subcommand("caustics", "trace critical curves and caustics");
  add_common(caustics);
  caustics->get_option("--config")->required();
  caustics->add_option("--grid-n", opt.grid_n, "marching-squares nodes per side");
  caustics->add_option("--window", opt.window_str, "trace window: HW or CX,CY,HW");
  caustics->add_option("--tol", opt.tol, "residual acceptance tolerance");

  CLI::App* sweep = app.add_subcommand("sweep", "randomized bound-safety sweep");
  add_common(sweep, false);
  sweep->add_option("--trials", trials, "number of random cases");
  sweep->add_option("--seed", seed, "random seed");
  sweep->add_option("--tol", opt.tol, "residual acceptance tolerance");

  CLI::App* validate = app.add_subcommand("validate", "check a configuration file");
  add_common(validate);
  validate->get_option("--config")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? exit_ok : exit_invalid;
  }

  try {
    if (bound->parsed()) return run_bound(opt, g_str);
    if (solve->parsed()) return run_solve(opt);
    if (caustics->parsed()) return run_caustics(opt);
    if (sweep->parsed()) return run_sweep(opt, trials, seed);
    if (validate->parsed()) return run_validate(opt);
  } catch (const non_generic_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_non_generic;
  } catch (const method_disagreement_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_disagreement;
  } catch (const bound_violation_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_bound_violation;
  } catch (const empty_result_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_empty;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_invalid;
  } catch (const error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_invalid;
  }
  return exit_invalid;
}
