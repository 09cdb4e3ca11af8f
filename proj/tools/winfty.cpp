// Command-line front end: solve, decide, cells, render, gadget.

#include <winfty/winfty.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <string>

namespace fs = std::filesystem;
using namespace winfty;

namespace {

void write_cells(const CellDecomposition& cells, const SourceMeasure& source, const fs::path& dir) {
  for (const auto& [a, img] : render_cells(cells, source)) write_pgm(dir / ("cell_" + cell_slug(a) + ".pgm"), img);
}

void write_panels(const TransportPlan& plan, const TransportMap& map, const Config& cfg, const fs::path& dir) {
  const Instance& inst = cfg.instance;
  if (!inst.source.is_grid()) {
    json panels = json::array();
    for (std::size_t i = 0; i < inst.target.size(); ++i) panels.push_back(mu_i_points(plan, inst.source, i));
    write_text(dir / "mu_points.json", dump(panels));
    return;
  }
  for (std::size_t i = 0; i < inst.target.size(); ++i)
    write_pgm(dir / ("mu_" + std::to_string(i + 1) + ".pgm"), render_mu_i(plan, inst.source, i));
  write_cells(plan.cells, inst.source, dir);
  write_pgm(dir / "map.pgm", render_map(map, inst.source, inst.target.size()));
}

void print_cells(const CellDecomposition& cells) {
  for (const auto& [a, m] : cells.masses)
    std::cout << "  " << a.str() << "  mass " << to_string(m) << "  (" << to_double(m) << ")\n";
}

TransportGraph read_graph(const fs::path& path) {
  const json j = read_json_file(path);
  TransportGraph g;
  g.n_targets = j.at("n").get<std::size_t>();
  for (const auto& l : j.at("left"))
    g.left[TargetSet(l.at("mask").get<std::uint32_t>())] += parse_rational(l.at("weight").get<std::string>());
  for (const auto& r : j.at("right")) g.right.push_back(parse_rational(r.get<std::string>()));
  g.validate();
  return g;
}

TransportGraph complete_graph(std::size_t n) {
  TransportGraph g;
  g.n_targets = n;
  g.left[TargetSet::full(n)] = 1;
  g.right.assign(n, Rational(1, static_cast<long long>(n)));
  return g;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Worst-case (L-infinity) optimal transport to a finite target"};
  app.require_subcommand(1);

  std::string config_path, plan_path, out_dir, mode, graph_path, gadget_out, map_mode = "fractional";
  double omega = 0.0, tol = 0.0, p = 2.0, q = 2.0;
  std::size_t n = 2, probes = 3;
  bool no_render = false;

  auto* solve_cmd = app.add_subcommand("solve", "solve a config and write plan.json (and rasters for grids)");
  solve_cmd->add_option("config", config_path, "config JSON")->required();
  solve_cmd->add_option("-o,--out", out_dir, "output directory (default: config output_dir)");
  solve_cmd->add_option("--mode", mode, "bisect or exact")->check(CLI::IsMember({"bisect", "exact"}));
  solve_cmd->add_option("--tol", tol, "bisection tolerance");
  solve_cmd->add_flag("--no-render", no_render, "skip raster output");

  auto* decide_cmd = app.add_subcommand("decide", "exit 0 if a plan of cost <= omega exists, 1 if not");
  decide_cmd->add_option("--omega", omega, "threshold")->required();
  decide_cmd->add_option("config", config_path, "config JSON")->required();

  auto* cells_cmd = app.add_subcommand("cells", "list the cells at omega, optionally writing masks");
  cells_cmd->add_option("--omega", omega, "threshold")->required();
  cells_cmd->add_option("config", config_path, "config JSON")->required();
  cells_cmd->add_option("-o,--out", out_dir, "directory for cell PGMs");

  auto* render_cmd = app.add_subcommand("render", "render mass panels, cells and the map from a plan.json");
  render_cmd->add_option("plan", plan_path, "plan JSON written by solve")->required();
  render_cmd->add_option("-o,--out", out_dir, "output directory (default: next to the plan)");
  render_cmd->add_option("--map", map_mode, "integral or fractional")->check(CLI::IsMember({"integral", "fractional"}));

  auto* gadget_cmd = app.add_subcommand("gadget", "emit the p-norm gadget instance of a transport graph");
  gadget_cmd->add_option("--n", n, "number of targets")->required();
  gadget_cmd->add_option("--p", p, "norm exponent (> 1)")->required();
  gadget_cmd->add_option("--q", q, "cost power (> 0)")->required();
  gadget_cmd->add_option("--graph", graph_path, "transport graph JSON {n, left:[{mask, weight}], right:[...]}");
  gadget_cmd->add_option("--probes", probes, "interior thresholds checked per point");
  gadget_cmd->add_option("-o,--out", gadget_out, "write the config here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*solve_cmd) {
      Config cfg = load_config(config_path);
      if (!mode.empty()) cfg.options.mode = mode == "exact" ? SolveMode::Exact : SolveMode::Bisect;
      if (tol > 0) cfg.options.tolerance = tol;
      const fs::path dir = out_dir.empty() ? fs::path(cfg.output_dir) : fs::path(out_dir);
      const SolveReport report = solve(cfg.instance, cfg.options);
      const PlanDocument doc = make_plan_document(cfg, report);
      export_plan(doc, dir / "plan.json");
      if (!no_render) {
        const TransportMap map = map_from_matching(report.plan.cells, report.matching, cfg.instance.source);
        write_panels(report.plan, map, cfg, dir);
      }
      std::cout << "omega " << report.omega << "\ninterval [" << report.lo << ", " << report.hi << "]\niterations "
                << report.iterations() << "\ncells " << report.plan.cells.nonempty().size() << "\nplan "
                << (dir / "plan.json").string() << "\n";
      if (auto g = cfg.instance.source.grid())
        std::cout << "grid " << g->nx << "x" << g->ny << " (pixel " << g->pixel_width() << ")\n";
      return 0;
    }
    if (*decide_cmd) {
      const Config cfg = load_config(config_path);
      const auto graph = build_graph(decompose(cfg.instance, omega), cfg.instance.target);
      const auto violation = hall_violation(graph);
      std::cout << (violation ? "false" : "true") << "\n";
      if (violation) std::cout << "violated set " << violation->str() << "\n";
      return violation ? 1 : 0;
    }
    if (*cells_cmd) {
      const Config cfg = load_config(config_path);
      const CellDecomposition cells = decompose(cfg.instance, omega);
      std::cout << "omega " << omega << ", " << cells.nonempty().size() << " nonempty cells\n";
      print_cells(cells);
      if (!out_dir.empty()) write_cells(cells, cfg.instance.source, out_dir);
      return 0;
    }
    if (*render_cmd) {
      const PlanDocument doc = import_plan(plan_path);
      const Config cfg = config_from_json(doc.config);
      const TransportPlan plan = plan_from_document(doc, cfg);
      const TransportMap map = map_from_matching(plan.cells, doc.matching(), cfg.instance.source,
                                                 map_mode == "integral" ? MapMode::Integral : MapMode::Fractional);
      if (map.warning) std::cerr << "warning: " << *map.warning << "\n";
      const fs::path dir = out_dir.empty() ? fs::path(plan_path).parent_path() : fs::path(out_dir);
      write_panels(plan, map, cfg, dir);
      std::cout << "rendered " << cfg.instance.target.size() << " panels to " << dir.string() << "\n";
      for (std::size_t i = 0; i < map.marginal_error.size(); ++i)
        if (map.marginal_error[i] != 0)
          std::cout << "  map marginal error y" << i + 1 << ": " << to_string(map.marginal_error[i]) << "\n";
      return 0;
    }
    if (*gadget_cmd) {
      const TransportGraph graph = graph_path.empty() ? complete_graph(n) : read_graph(graph_path);
      if (graph.n_targets != n) throw Error("--n disagrees with the graph file");
      const GadgetInstance gadget = make_gadget(graph, p, q, probes);
      Config cfg{gadget.instance, {}, "out"};
      cfg.options.mode = SolveMode::Exact;
      json j = config_to_json(cfg);
      j["gap"] = {gadget.lambda_lo, gadget.lambda_hi};
      if (gadget_out.empty())
        std::cout << dump(j);
      else
        write_text(gadget_out, dump(j));
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
