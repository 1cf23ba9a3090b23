#include "periscat/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "periscat/diagnostics.hpp"

namespace periscat {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path output_dir(const ExperimentConfig& cfg) {
  fs::path dir(cfg.output.directory);
  fs::create_directories(dir);
  return dir;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

json vec_json(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }

void export_field(const ExperimentConfig& cfg, const fs::path& stem, const ImagingResult& field, const std::string& name,
                  const std::string& hash, json& files) {
  for (const std::string& fmt : cfg.output.formats) {
    const fs::path path = stem.string() + "." + fmt;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    if (fmt == "vtk")
      write_vtk(out, field, name, hash);
    else
      write_csv(out, field, hash);
    files.push_back(path.filename().string());
  }
}

ImagingResult evaluate(const ExperimentConfig& cfg, const RayleighDataMatrix& U, FunctionalKind kind) {
  const SamplingGrid grid = make_sampling_grid(cfg);
  if (kind == FunctionalKind::Osm) return osm_functional(U, grid, cfg.wave, cfg.imaging.q, cfg.imaging.rho, cfg.imaging.p);
  return imaging_functional(U, grid, cfg.wave, make_modes(cfg), cfg.imaging.p);
}

std::vector<FunctionalKind> requested(const ExperimentConfig& cfg) {
  if (cfg.imaging.functional == "new") return {FunctionalKind::New};
  if (cfg.imaging.functional == "osm") return {FunctionalKind::Osm};
  return {FunctionalKind::New, FunctionalKind::Osm};
}

}  // namespace

json field_summary(const ImagingResult& field, double iso_fraction) {
  json s;
  s["kind"] = to_string(field.kind);
  s["p"] = field.p;
  s["modes"] = field.mode_count;
  s["grid"] = {field.grid.n[0], field.grid.n[1], field.grid.n[2]};
  s["max"] = field.max();
  const std::size_t am = field.argmax();
  s["argmax_index"] = am;
  s["argmax_point"] = vec_json(field.grid.point(am));
  const Mask mask = isosurface_mask(field, iso_fraction);
  s["iso_fraction"] = iso_fraction;
  s["mask_volume_fraction"] = mask_fraction(mask);
  const auto comps = connected_components(mask, field.grid);
  s["mask_components"] = comps.size();
  if (!comps.empty()) s["mask_centroid"] = vec_json(mask_centroid(mask, field.grid));
  return s;
}

DataFile load_matching_data(const ExperimentConfig& cfg, const std::string& data_path) {
  DataFile df = read_data_file(data_path);
  const WaveParameters& p = df.data.params();
  if (p.k != cfg.wave.k || p.alpha1 != cfg.wave.alpha1 || p.alpha2 != cfg.wave.alpha2 || p.h != cfg.wave.h)
    throw DataFormatError("data file " + data_path + " was generated for different wave parameters");
  const ModeSet want = make_modes(cfg);
  for (const Mode& m : want)
    if (!df.data.modes().find(m.index))
      throw ModeMismatchError("data file " + data_path + " lacks mode (" + std::to_string(m.index.j1) + ", " +
                              std::to_string(m.index.j2) + ") required by modes.j_max = " +
                              std::to_string(cfg.modes.j_max));
  return df;
}

json run_forward(const ExperimentConfig& cfg, const std::string& data_path) {
  cfg.validate();
  const std::string hash = config_hash(cfg);
  const fs::path dir = output_dir(cfg);
  const fs::path path = data_path.empty() ? dir / kDataFileName : fs::path(data_path);

  const PermittivityModel model = make_model(cfg);
  const VoxelGrid grid = make_voxel_grid(cfg, model);
  const ModeSet modes = make_modes(cfg);
  const std::vector<Vec3> sources = source_positions(cfg.sources);
  const ForwardRun run = build_data_matrix(cfg.wave, model, grid, sources, modes, make_solver(cfg));

  DataProvenance prov;
  prov.config_hash = hash;
  prov.residuals = run.residuals;
  write_data_file(path.string(), run.data, prov);

  json s;
  s["verb"] = "forward";
  s["config_hash"] = hash;
  s["data_file"] = path.filename().string();
  s["model"] = model.name();
  s["voxel_grid"] = {{"dims", {grid.n[0], grid.n[1], grid.n[2]}},
                     {"lo", vec_json(grid.box.lo)},
                     {"hi", vec_json(grid.box.hi)}};
  s["sources"] = sources.size();
  s["modes"] = modes.size();
  s["propagating_modes"] = modes.propagating_count();
  s["solver"] = cfg.solver.mode;
  s["residuals"] = run.residuals;
  s["iterations"] = run.iterations;
  s["max_residual"] = run.residuals.empty() ? 0.0 : *std::max_element(run.residuals.begin(), run.residuals.end());
  s["data_norm"] = run.data.frobenius_norm();
  write_json(dir / "forward.json", s);
  return s;
}

json run_noise(const ExperimentConfig& cfg, const std::string& data_path, const std::string& out_path) {
  cfg.validate();
  const std::string hash = config_hash(cfg);
  const fs::path dir = output_dir(cfg);
  const fs::path path = out_path.empty() ? dir / kNoisyDataFileName : fs::path(out_path);
  DataFile df = read_data_file(data_path);
  if (df.provenance.noise_delta != 0.0) warn("data file " + data_path + " already carries noise; adding more");
  const RayleighDataMatrix noisy = add_noise(df.data, cfg.noise);
  DataProvenance prov = df.provenance;
  prov.noise_delta = cfg.noise.delta;
  prov.noise_seed = cfg.noise.seed;
  write_data_file(path.string(), noisy, prov);

  json s;
  s["verb"] = "noise";
  s["config_hash"] = hash;
  s["source_config_hash"] = df.provenance.config_hash;
  s["data_file"] = path.filename().string();
  s["delta"] = cfg.noise.delta;
  s["seed"] = cfg.noise.seed;
  s["clean_norm"] = df.data.frobenius_norm();
  double d2 = 0.0;
  for (std::size_t i = 0; i < noisy.raw().size(); ++i) d2 += (noisy.raw()[i] - df.data.raw()[i]).squaredNorm();
  s["perturbation_norm"] = std::sqrt(d2);
  write_json(dir / "noise.json", s);
  return s;
}

json run_image(const ExperimentConfig& cfg, const std::string& data_path) {
  cfg.validate();
  const std::string hash = config_hash(cfg);
  const fs::path dir = output_dir(cfg);
  const DataFile df = load_matching_data(cfg, data_path);

  json s;
  s["verb"] = "image";
  s["config_hash"] = hash;
  s["data_config_hash"] = df.provenance.config_hash;
  s["noise_delta"] = df.provenance.noise_delta;
  s["files"] = json::array();
  for (FunctionalKind kind : requested(cfg)) {
    const ImagingResult field = evaluate(cfg, df.data, kind);
    export_field(cfg, dir / ("image_" + to_string(kind)), field, "I_" + to_string(kind), hash, s["files"]);
    s["fields"][to_string(kind)] = field_summary(field, cfg.output.iso_fraction);
  }
  write_json(dir / "image.json", s);
  return s;
}

json run_compare(const ExperimentConfig& cfg, const std::string& data_path) {
  cfg.validate();
  const std::string hash = config_hash(cfg);
  const fs::path dir = output_dir(cfg);
  const DataFile df = load_matching_data(cfg, data_path);
  const PermittivityModel model = make_model(cfg);
  const Mask truth = rasterize(model, make_sampling_grid(cfg));

  json s;
  s["verb"] = "compare";
  s["config_hash"] = hash;
  s["data_config_hash"] = df.provenance.config_hash;
  s["noise_delta"] = df.provenance.noise_delta;
  s["truth_volume_fraction"] = mask_fraction(truth);
  s["files"] = json::array();
  double overlap[2] = {0.0, 0.0};
  int slot = 0;
  for (FunctionalKind kind : {FunctionalKind::New, FunctionalKind::Osm}) {
    ImagingResult field = evaluate(cfg, df.data, kind);
    const double peak = field.max();
    json f = field_summary(field, cfg.output.iso_fraction);
    if (peak > 0.0)
      for (double& v : field.values) v /= peak;
    overlap[slot] = jaccard(isosurface_mask(field, cfg.output.iso_fraction), truth);
    f["jaccard"] = overlap[slot++];
    export_field(cfg, dir / ("compare_" + to_string(kind)), field, "normalized_" + to_string(kind), hash, s["files"]);
    s["fields"][to_string(kind)] = f;
  }
  s["new_jaccard_at_least_osm"] = overlap[0] >= overlap[1];
  if (overlap[0] < overlap[1]) warn("the new functional's mask overlaps the scatterer less than the OSM mask");
  write_json(dir / "compare.json", s);
  return s;
}

}  // namespace periscat
