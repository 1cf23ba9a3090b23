#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "periscat/diagnostics.hpp"
#include "periscat/green.hpp"
#include "periscat/pipeline.hpp"

namespace py = pybind11;
using namespace periscat;

namespace {

GreenRoute route_of(const std::string& s) {
  if (s == "auto") return GreenRoute::Automatic;
  if (s == "modal") return GreenRoute::Modal;
  if (s == "spatial") return GreenRoute::Spatial;
  throw std::invalid_argument("route must be auto, modal or spatial");
}

FunctionalKind kind_of(const std::string& s) {
  if (s == "new") return FunctionalKind::New;
  if (s == "osm") return FunctionalKind::Osm;
  throw std::invalid_argument("kind must be new or osm");
}

// values are x-fastest, so (n3, n2, n1) in C order
py::array_t<double> field_array(const ImagingResult& f) {
  py::array_t<double> a({f.grid.n[2], f.grid.n[1], f.grid.n[0]});
  std::copy(f.values.begin(), f.values.end(), a.mutable_data());
  return a;
}

py::dict data_dict(const DataFile& df) {
  const RayleighDataMatrix& U = df.data;
  const std::size_t M = U.modes().size(), N = U.n_sources();
  py::array_t<Complex> u({std::size_t{2}, M, N, std::size_t{3}});
  auto v = u.mutable_unchecked<4>();
  for (int s = 0; s < 2; ++s)
    for (std::size_t m = 0; m < M; ++m)
      for (std::size_t l = 0; l < N; ++l)
        for (int c = 0; c < 3; ++c) v(s, m, l, c) = U.at(kSides[s], m, l)[c];
  py::list modes;
  for (const Mode& m : U.modes()) modes.append(py::make_tuple(m.index.j1, m.index.j2));
  py::dict d;
  d["data"] = u;
  d["modes"] = modes;
  d["k"] = U.params().k;
  d["alpha"] = py::make_tuple(U.params().alpha1, U.params().alpha2);
  d["h"] = U.params().h;
  d["config_hash"] = df.provenance.config_hash;
  d["noise_delta"] = df.provenance.noise_delta;
  d["noise_seed"] = df.provenance.noise_seed;
  d["residuals"] = df.provenance.residuals;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Periodic-layer electromagnetic scattering: kernels, forward data and imaging";

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataFormatError>(m, "DataFormatError", PyExc_ValueError);
  py::register_exception<ModeMismatchError>(m, "ModeMismatchError", PyExc_ValueError);

  py::class_<WaveParameters>(m, "WaveParameters")
      .def(py::init([](double k, std::pair<double, double> alpha, double h) {
             WaveParameters p{k, alpha.first, alpha.second, h};
             p.validate();
             return p;
           }),
           py::arg("k") = kTwoPi, py::arg("alpha") = std::pair<double, double>{0.0, 0.0}, py::arg("h") = 1.0)
      .def_readonly("k", &WaveParameters::k)
      .def_property_readonly("alpha", [](const WaveParameters& p) { return std::make_pair(p.alpha1, p.alpha2); })
      .def_readonly("h", &WaveParameters::h)
      .def("__repr__", [](const WaveParameters& p) {
        return "WaveParameters(k=" + std::to_string(p.k) + ", alpha=(" + std::to_string(p.alpha1) + ", " +
               std::to_string(p.alpha2) + "), h=" + std::to_string(p.h) + ")";
      });

  m.def(
      "beta", [](const WaveParameters& p, int j1, int j2) { return beta_checked(p, ModeIndex{j1, j2}); },
      py::arg("params"), py::arg("j1"), py::arg("j2"));
  m.def(
      "mode_indices",
      [](const WaveParameters& p, int j_max, bool include_evanescent) {
        std::vector<std::pair<int, int>> out;
        for (const Mode& mode : build_mode_set(p, j_max, include_evanescent))
          out.emplace_back(mode.index.j1, mode.index.j2);
        return out;
      },
      py::arg("params"), py::arg("j_max"), py::arg("include_evanescent") = true);

  m.def(
      "phi",
      [](const WaveParameters& p, const Vec3& x, const Vec3& y, const std::string& route) {
        return GreenKernel(p).phi(x, y, route_of(route));
      },
      py::arg("params"), py::arg("x"), py::arg("y"), py::arg("route") = "auto");
  m.def(
      "green_tensor",
      [](const WaveParameters& p, const Vec3& x, const Vec3& y, const std::string& route) {
        return Mat3c(green_tensor(p, x, y, {}, route_of(route)));
      },
      py::arg("params"), py::arg("x"), py::arg("y"), py::arg("route") = "auto");

  py::class_<ExperimentConfig>(m, "Config")
      .def_static("from_yaml", &parse_config, py::arg("text") = "")
      .def_static("load", &load_config, py::arg("path"))
      .def_property_readonly("hash", [](const ExperimentConfig& c) { return config_hash(c); })
      .def_property_readonly("canonical", [](const ExperimentConfig& c) { return canonical_config(c); })
      .def_property(
          "output_directory", [](const ExperimentConfig& c) { return c.output.directory; },
          [](ExperimentConfig& c, const std::string& d) { c.output.directory = d; })
      .def_property(
          "noise_delta", [](const ExperimentConfig& c) { return c.noise.delta; },
          [](ExperimentConfig& c, double d) { c.noise.delta = d; })
      .def_property(
          "noise_seed", [](const ExperimentConfig& c) { return c.noise.seed; },
          [](ExperimentConfig& c, std::uint64_t s) { c.noise.seed = s; })
      .def_property_readonly("wave", [](const ExperimentConfig& c) { return c.wave; });

  // Pipeline verbs return their JSON summary as text; the Python wrapper decodes it.
  m.def(
      "run_forward", [](const ExperimentConfig& c, const std::string& path) { return run_forward(c, path).dump(); },
      py::arg("config"), py::arg("data_path") = "", py::call_guard<py::gil_scoped_release>());
  m.def(
      "run_noise",
      [](const ExperimentConfig& c, const std::string& data, const std::string& out) {
        return run_noise(c, data, out).dump();
      },
      py::arg("config"), py::arg("data_path"), py::arg("out_path") = "", py::call_guard<py::gil_scoped_release>());
  m.def(
      "run_image", [](const ExperimentConfig& c, const std::string& data) { return run_image(c, data).dump(); },
      py::arg("config"), py::arg("data_path"), py::call_guard<py::gil_scoped_release>());
  m.def(
      "run_compare", [](const ExperimentConfig& c, const std::string& data) { return run_compare(c, data).dump(); },
      py::arg("config"), py::arg("data_path"), py::call_guard<py::gil_scoped_release>());

  m.def(
      "read_data", [](const std::string& path) { return data_dict(read_data_file(path)); }, py::arg("path"));

  m.def(
      "image",
      [](const ExperimentConfig& c, const std::string& data, const std::string& kind) {
        ImagingResult f;
        {
          py::gil_scoped_release release;
          const DataFile df = load_matching_data(c, data);
          const SamplingGrid grid = make_sampling_grid(c);
          f = kind_of(kind) == FunctionalKind::Osm
                  ? osm_functional(df.data, grid, c.wave, c.imaging.q, c.imaging.rho, c.imaging.p)
                  : imaging_functional(df.data, grid, c.wave, make_modes(c), c.imaging.p);
        }
        return field_array(f);
      },
      py::arg("config"), py::arg("data_path"), py::arg("kind") = "new");

  m.def(
      "sampling_axes",
      [](const ExperimentConfig& c) {
        const SamplingGrid g = make_sampling_grid(c);
        std::array<std::vector<double>, 3> axes;
        for (int a = 0; a < 3; ++a)
          for (int i = 0; i < g.n[a]; ++i) {
            int idx[3] = {0, 0, 0};
            idx[a] = i;
            axes[a].push_back(g.point(idx[0], idx[1], idx[2])[a]);
          }
        return axes;
      },
      py::arg("config"));
}
