#pragma once

#include <winfty/solver.hpp>

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace winfty {

using json = nlohmann::json;

/// A parsed problem file: instance plus solver settings.
struct Config {
  Instance instance;
  SolveOptions options;
  std::string output_dir = "out";
};

namespace detail {

inline const json& field(const json& j, const std::string& key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw Error(where + ": missing field \"" + key + "\"");
  return j.at(key);
}

inline Rational weight_field(const json& j, const std::string& where) {
  if (!j.is_string())
    throw Error(where + ": weights must be exact fraction strings such as \"3/20\", got " + j.dump());
  try {
    return parse_rational(j.get<std::string>());
  } catch (const Error& e) {
    throw Error(where + ": " + e.what());
  }
}

inline Point point_field(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw Error(where + ": expected a nonempty array of numbers");
  Point p;
  for (const auto& v : j) {
    if (!v.is_number()) throw Error(where + ": expected numbers, got " + v.dump());
    p.push_back(v.get<double>());
  }
  return p;
}

inline double exponent_field(const json& j, const std::string& where) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
  }
  throw Error(where + ": expected a number or \"inf\", got " + j.dump());
}

inline json exponent_json(double v) {
  if (std::isinf(v)) return "inf";
  return json(v).dump();
}

}  // namespace detail

inline CostSpec cost_from_json(const json& j) {
  const double p = detail::exponent_field(detail::field(j, "p", "cost"), "cost.p");
  const double q = j.contains("q") ? detail::exponent_field(j.at("q"), "cost.q") : 1.0;
  return CostSpec(p, q);
}

inline json cost_to_json(const CostSpec& c) { return {{"p", detail::exponent_json(c.p)}, {"q", c.q}}; }

inline TargetMeasure targets_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw Error("targets: expected a nonempty array");
  std::vector<Point> pts;
  std::vector<Rational> ws;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string where = "targets[" + std::to_string(i) + "]";
    pts.push_back(detail::point_field(detail::field(j[i], "point", where), where + ".point"));
    ws.push_back(detail::weight_field(detail::field(j[i], "weight", where), where + ".weight"));
  }
  check_target_count(pts.size());
  try {
    return TargetMeasure(std::move(pts), std::move(ws));
  } catch (const MassError& e) {
    throw MassError(std::string("targets: ") + e.what(), e.deficit());
  }
}

inline SourceMeasure source_from_json(const json& j) {
  const bool has_grid = j.contains("grid"), has_atoms = j.contains("atoms");
  if (has_grid == has_atoms) throw Error("config: give exactly one of \"grid\" or \"atoms\"");
  if (has_atoms) {
    const json& atoms = j.at("atoms");
    if (!atoms.is_array() || atoms.empty()) throw Error("atoms: expected a nonempty array");
    std::vector<Point> pts;
    std::vector<Rational> ws;
    for (std::size_t k = 0; k < atoms.size(); ++k) {
      const std::string where = "atoms[" + std::to_string(k) + "]";
      pts.push_back(detail::point_field(detail::field(atoms[k], "point", where), where + ".point"));
      ws.push_back(detail::weight_field(detail::field(atoms[k], "weight", where), where + ".weight"));
    }
    try {
      return make_atomic(std::move(pts), std::move(ws));
    } catch (const MassError& e) {
      throw MassError(std::string("atoms: ") + e.what(), e.deficit());
    }
  }
  const json& dom = detail::field(j, "domain", "config");
  const Box box{detail::point_field(detail::field(dom, "min", "domain"), "domain.min"),
                detail::point_field(detail::field(dom, "max", "domain"), "domain.max")};
  const json& grid = j.at("grid");
  const auto nx = detail::field(grid, "nx", "grid").get<std::size_t>();
  const auto ny = detail::field(grid, "ny", "grid").get<std::size_t>();
  if (!grid.contains("weights")) return make_uniform_grid(box, nx, ny);
  const json& w = grid.at("weights");
  if (!w.is_array()) throw Error("grid.weights: expected an array");
  std::vector<Rational> masses;
  for (std::size_t k = 0; k < w.size(); ++k)
    masses.push_back(detail::weight_field(w[k], "grid.weights[" + std::to_string(k) + "]"));
  return make_grid(GridSpec{box, nx, ny}, std::move(masses));
}

inline Config config_from_json(const json& j) {
  if (!j.is_object()) throw Error("config: expected a JSON object");
  SourceMeasure source = source_from_json(j);
  TargetMeasure target = targets_from_json(detail::field(j, "targets", "config"));
  const CostSpec cost = j.contains("cost") ? cost_from_json(j.at("cost")) : CostSpec::linf();
  Config cfg{Instance(std::move(source), std::move(target), cost), {}, "out"};
  if (j.contains("tolerance")) cfg.options.tolerance = j.at("tolerance").get<double>();
  if (!(cfg.options.tolerance > 0)) throw Error("tolerance: must be positive");
  if (j.contains("mode")) {
    const auto m = j.at("mode").get<std::string>();
    if (m == "bisect")
      cfg.options.mode = SolveMode::Bisect;
    else if (m == "exact")
      cfg.options.mode = SolveMode::Exact;
    else
      throw Error("mode: expected \"bisect\" or \"exact\", got \"" + m + "\"");
  }
  if (j.contains("interval")) {
    const auto& iv = j.at("interval");
    if (!iv.is_array() || iv.size() != 2) throw Error("interval: expected [lo, hi]");
    cfg.options.interval = std::pair{iv[0].get<double>(), iv[1].get<double>()};
  }
  if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
  return cfg;
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

inline Config load_config(const std::filesystem::path& path) { return config_from_json(read_json_file(path)); }

/// Canonical form of a config; weights appear in lowest terms.
inline json config_to_json(const Config& cfg) {
  const Instance& inst = cfg.instance;
  json j;
  if (const auto& grid = inst.source.grid()) {
    j["domain"] = {{"min", grid->box.lo}, {"max", grid->box.hi}};
    j["grid"] = {{"nx", grid->nx}, {"ny", grid->ny}};
    const Rational uniform(1, static_cast<long long>(grid->pixel_count()));
    bool is_uniform = true;
    for (const auto& m : inst.source.masses()) is_uniform = is_uniform && m == uniform;
    if (!is_uniform) {
      json w = json::array();
      for (const auto& m : inst.source.masses()) w.push_back(to_string(m));
      j["grid"]["weights"] = w;
    }
  } else {
    json atoms = json::array();
    for (std::size_t k = 0; k < inst.source.size(); ++k)
      atoms.push_back({{"point", inst.source.point(k)}, {"weight", to_string(inst.source.mass(k))}});
    j["atoms"] = atoms;
  }
  json targets = json::array();
  for (std::size_t i = 0; i < inst.target.size(); ++i)
    targets.push_back({{"point", inst.target.point(i)}, {"weight", to_string(inst.target.weight(i))}});
  j["targets"] = targets;
  j["cost"] = cost_to_json(inst.cost);
  j["tolerance"] = cfg.options.tolerance;
  j["mode"] = cfg.options.mode == SolveMode::Exact ? "exact" : "bisect";
  if (cfg.options.interval) j["interval"] = {cfg.options.interval->first, cfg.options.interval->second};
  j["output_dir"] = cfg.output_dir;
  return j;
}

/// Serialized solve result. Cell row entries carry the matched mass
/// M(A, i); the plan fractions are M(A, i) / mass(A).
struct PlanDocument {
  struct Cell {
    TargetSet mask;
    Rational mass;
    std::vector<std::pair<std::size_t, Rational>> rows;
  };

  json config;
  double omega = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  std::vector<TraceStep> trace;
  std::vector<Cell> cells;

  std::size_t iterations() const { return trace.size(); }

  Matching matching() const {
    Matching m;
    for (const auto& c : cells)
      for (const auto& [i, mass] : c.rows) m.set(c.mask, i, mass);
    return m;
  }
};

inline PlanDocument make_plan_document(const Config& cfg, const SolveReport& report) {
  PlanDocument doc;
  doc.config = config_to_json(cfg);
  doc.omega = report.omega;
  doc.lo = report.lo;
  doc.hi = report.hi;
  doc.trace = report.trace;
  for (const auto& [a, mass] : report.plan.cells.masses) {
    PlanDocument::Cell cell{a, mass, {}};
    for (std::size_t i = 0; i < report.plan.cells.n_targets; ++i)
      if (Rational m = report.matching.at(a, i); m > 0) cell.rows.push_back({i, std::move(m)});
    doc.cells.push_back(std::move(cell));
  }
  return doc;
}

inline json to_json(const PlanDocument& doc) {
  json trace = json::array();
  for (const auto& t : doc.trace) trace.push_back({{"omega", t.omega}, {"feasible", t.feasible}});
  json cells = json::array();
  for (const auto& c : doc.cells) {
    json rows = json::array();
    for (const auto& [i, m] : c.rows) rows.push_back({{"target", i}, {"mass", to_string(m)}});
    cells.push_back({{"mask", c.mask.bits()}, {"label", c.mask.str()}, {"mass", to_string(c.mass)}, {"rows", rows}});
  }
  return {{"config", doc.config}, {"omega", doc.omega},           {"lo", doc.lo},      {"hi", doc.hi},
          {"iterations", doc.iterations()}, {"trace", trace}, {"cells", cells}};
}

inline PlanDocument plan_document_from_json(const json& j) {
  PlanDocument doc;
  doc.config = detail::field(j, "config", "plan");
  doc.omega = detail::field(j, "omega", "plan").get<double>();
  doc.lo = j.value("lo", doc.omega);
  doc.hi = j.value("hi", doc.omega);
  for (const auto& t : detail::field(j, "trace", "plan"))
    doc.trace.push_back({t.at("omega").get<double>(), t.at("feasible").get<bool>()});
  if (j.contains("iterations") && j.at("iterations").get<std::size_t>() != doc.trace.size())
    throw Error("plan: iteration count does not match the trace length");
  for (const auto& c : detail::field(j, "cells", "plan")) {
    PlanDocument::Cell cell{TargetSet(c.at("mask").get<std::uint32_t>()), detail::weight_field(c.at("mass"), "cell.mass"),
                            {}};
    for (const auto& r : c.at("rows"))
      cell.rows.push_back({r.at("target").get<std::size_t>(), detail::weight_field(r.at("mass"), "row.mass")});
    doc.cells.push_back(std::move(cell));
  }
  return doc;
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

inline void export_plan(const PlanDocument& doc, const std::filesystem::path& path) {
  write_text(path, dump(to_json(doc)));
}

inline PlanDocument import_plan(const std::filesystem::path& path) {
  return plan_document_from_json(read_json_file(path));
}

/// Rebuilds the plan a document describes: re-decomposes the embedded
/// instance at the stored omega and applies the stored matching.
inline TransportPlan plan_from_document(const PlanDocument& doc, const Config& cfg) {
  const CellDecomposition cells = decompose(cfg.instance, doc.omega);
  for (const auto& c : doc.cells)
    if (cells.mass_of(c.mask) != c.mass)
      throw Error("plan: cell " + c.mask.str() + " mass " + to_string(c.mass) + " does not match the instance");
  return plan_from_matching(cells, doc.matching(), cfg.instance.target);
}

/// 8-bit grayscale raster.
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;

  std::uint8_t at(std::size_t col, std::size_t row) const { return pixels[row * width + col]; }
  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

/// Binary PGM (P5, maxval 255).
inline void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
  std::ostringstream out;
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  write_text(path, out.str());
}

inline GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::string magic;
  GrayImage img;
  int maxval = 0;
  in >> magic >> img.width >> img.height >> maxval;
  if (magic != "P5" || maxval != 255 || !in) throw Error(path.string() + ": not an 8-bit P5 PGM");
  in.get();
  img.pixels.resize(img.width * img.height);
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (!in) throw Error(path.string() + ": truncated PGM");
  return img;
}

namespace detail {
inline const GridSpec& require_grid(const SourceMeasure& source) {
  if (!source.grid()) throw Error("raster output needs a grid source");
  return *source.grid();
}

/// Image row r shows grid row ny - 1 - r so that +y points up.
template <class F>
GrayImage raster(const GridSpec& grid, F&& value_of_sample) {
  GrayImage img{grid.nx, grid.ny, std::vector<std::uint8_t>(grid.pixel_count())};
  for (std::size_t iy = 0; iy < grid.ny; ++iy)
    for (std::size_t ix = 0; ix < grid.nx; ++ix)
      img.pixels[(grid.ny - 1 - iy) * grid.nx + ix] = value_of_sample(iy * grid.nx + ix);
  return img;
}

inline std::uint8_t quantize(const Rational& unit) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(to_double(unit), 0.0, 1.0) * 255.0));
}
}  // namespace detail

/// Per-sample fraction of mass sent to target i, exact; zero on massless cells.
inline std::vector<Rational> mu_i_coefficients(const TransportPlan& plan, std::size_t i) {
  std::vector<Rational> out(plan.cells.labels.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = plan.fraction(k, i);
  return out;
}

/// Density of the mass sent to target i, on a 0..1 scale mapped to 0..255.
inline GrayImage render_mu_i(const TransportPlan& plan, const SourceMeasure& source, std::size_t i) {
  const GridSpec& grid = detail::require_grid(source);
  return detail::raster(grid, [&](std::size_t k) { return detail::quantize(plan.fraction(k, i)); });
}

/// Point-list substitute for render_mu_i on atomic sources.
inline json mu_i_points(const TransportPlan& plan, const SourceMeasure& source, std::size_t i) {
  json out = json::array();
  for (std::size_t k = 0; k < source.size(); ++k)
    out.push_back({{"point", source.point(k)}, {"fraction", to_string(plan.fraction(k, i))}});
  return out;
}

/// One mask per cell that contains samples: white where the label is A.
inline std::map<TargetSet, GrayImage> render_cells(const CellDecomposition& cells, const SourceMeasure& source) {
  const GridSpec& grid = detail::require_grid(source);
  std::map<TargetSet, GrayImage> out;
  for (const auto& [a, mass] : cells.masses)
    out.emplace(a, detail::raster(grid, [&](std::size_t k) -> std::uint8_t { return cells.labels[k] == a ? 255 : 0; }));
  return out;
}

/// Target index of each sample as a gray level (i + 1) * 255 / N; black where unassigned.
inline GrayImage render_map(const TransportMap& map, const SourceMeasure& source, std::size_t n_targets) {
  const GridSpec& grid = detail::require_grid(source);
  return detail::raster(grid, [&](std::size_t k) -> std::uint8_t {
    if (map.target[k] < 0) return 0;
    return static_cast<std::uint8_t>((map.target[k] + 1) * 255 / static_cast<long>(n_targets));
  });
}

/// File-name fragment for a cell, e.g. "y1_y3" or "empty".
inline std::string cell_slug(TargetSet a) {
  if (a.empty()) return "empty";
  std::string s;
  for (std::size_t i = 0; i < 32; ++i)
    if (a.contains(i)) s += (s.empty() ? "y" : "_y") + std::to_string(i + 1);
  return s;
}

}  // namespace winfty
