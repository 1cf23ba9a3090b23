#include "periscat/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace periscat {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Line reader that remembers where it is for error messages.
class Lines {
 public:
  explicit Lines(std::istream& in) : in_(in) {}

  std::istringstream next(const char* expecting) {
    std::string line;
    if (!std::getline(in_, line)) fail(std::string("unexpected end of file, expected ") + expecting);
    ++number_;
    return std::istringstream(line);
  }

  // Reads "<key> ..." and returns the remainder of the line.
  std::istringstream keyed(const std::string& key) {
    std::istringstream ls = next(key.c_str());
    std::string k;
    ls >> k;
    if (k != key) fail("expected '" + key + "', found '" + k + "'");
    return ls;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw DataFormatError("data file line " + std::to_string(number_) + ": " + what);
  }

  template <class T>
  T read(std::istringstream& ls, const char* what) const {
    T v{};
    if (!(ls >> v)) fail(std::string("cannot read ") + what);
    return v;
  }

  void finish(std::istringstream& ls) const {
    std::string extra;
    if (ls >> extra) fail("unexpected trailing field '" + extra + "'");
  }

 private:
  std::istream& in_;
  int number_ = 0;
};

double parse_real(const Lines& lines, std::istringstream& ls) {
  std::string tok;
  if (!(ls >> tok)) lines.fail("missing value");
  // strtod keeps subnormals, which stod rejects
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end != tok.c_str() + tok.size()) lines.fail("bad number '" + tok + "'");
  return v;
}

void write_grid_comment(std::ostream& out, const ImagingResult& f) {
  out << "periscat " << to_string(f.kind) << " p=" << num(f.p) << " modes=" << f.mode_count;
}

}  // namespace

void write_data_file(std::ostream& out, const RayleighDataMatrix& U, const DataProvenance& prov) {
  const auto& p = U.params();
  const auto& modes = U.modes();
  out << "periscat-rayleigh-data 1\n";
  out << "config_hash " << (prov.config_hash.empty() ? "-" : prov.config_hash) << "\n";
  out << "k " << num(p.k) << "\n";
  out << "alpha " << num(p.alpha1) << " " << num(p.alpha2) << "\n";
  out << "h " << num(p.h) << "\n";
  out << "sources " << U.n_sources() << "\n";
  out << "sides + -\n";
  out << "noise " << num(prov.noise_delta) << " " << prov.noise_seed << "\n";
  out << "modes " << modes.size() << "\n";
  for (const Mode& m : modes) out << m.index.j1 << " " << m.index.j2 << "\n";
  if (prov.residuals.empty()) {
    out << "residuals none\n";
  } else {
    if (prov.residuals.size() != U.n_sources()) throw std::invalid_argument("one residual per source expected");
    out << "residuals";
    for (double r : prov.residuals) out << " " << num(r);
    out << "\n";
  }
  out << "records " << 2 * modes.size() * U.n_sources() << "\n";
  for (Side s : kSides)
    for (std::size_t m = 0; m < modes.size(); ++m)
      for (std::size_t l = 0; l < U.n_sources(); ++l) {
        const Vec3c& u = U.at(s, m, l);
        out << (s == Side::Plus ? '+' : '-') << " " << modes[m].index.j1 << " " << modes[m].index.j2 << " " << l;
        for (int c = 0; c < 3; ++c) out << " " << num(u[c].real()) << " " << num(u[c].imag());
        out << "\n";
      }
  out << "end\n";
}

void write_data_file(const std::string& path, const RayleighDataMatrix& U, const DataProvenance& prov) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  write_data_file(out, U, prov);
  if (!out) throw Error("failed writing " + path);
}

DataFile read_data_file(std::istream& in) {
  Lines lines(in);
  {
    auto ls = lines.keyed("periscat-rayleigh-data");
    if (lines.read<int>(ls, "format version") != 1) lines.fail("unsupported format version");
    lines.finish(ls);
  }
  DataProvenance prov;
  {
    auto ls = lines.keyed("config_hash");
    prov.config_hash = lines.read<std::string>(ls, "config hash");
    if (prov.config_hash == "-") prov.config_hash.clear();
    lines.finish(ls);
  }
  WaveParameters p;
  {
    auto ls = lines.keyed("k");
    p.k = parse_real(lines, ls);
    lines.finish(ls);
  }
  {
    auto ls = lines.keyed("alpha");
    p.alpha1 = parse_real(lines, ls);
    p.alpha2 = parse_real(lines, ls);
    lines.finish(ls);
  }
  {
    auto ls = lines.keyed("h");
    p.h = parse_real(lines, ls);
    lines.finish(ls);
  }
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    lines.fail(e.what());
  }
  std::size_t N = 0;
  {
    auto ls = lines.keyed("sources");
    N = lines.read<std::size_t>(ls, "source count");
    lines.finish(ls);
  }
  {
    auto ls = lines.keyed("sides");
    if (lines.read<std::string>(ls, "side") != "+" || lines.read<std::string>(ls, "side") != "-")
      lines.fail("sides must be '+ -'");
    lines.finish(ls);
  }
  {
    auto ls = lines.keyed("noise");
    prov.noise_delta = parse_real(lines, ls);
    prov.noise_seed = lines.read<std::uint64_t>(ls, "noise seed");
    lines.finish(ls);
  }
  std::size_t M = 0;
  {
    auto ls = lines.keyed("modes");
    M = lines.read<std::size_t>(ls, "mode count");
    lines.finish(ls);
  }
  std::vector<ModeIndex> idx(M);
  for (std::size_t m = 0; m < M; ++m) {
    auto ls = lines.next("mode index");
    idx[m].j1 = lines.read<int>(ls, "j1");
    idx[m].j2 = lines.read<int>(ls, "j2");
    lines.finish(ls);
    if (m > 0 && !(idx[m - 1] < idx[m])) lines.fail("mode list must be strictly lexicographic");
  }
  ModeSet modes;
  try {
    modes = ModeSet(p, idx);
  } catch (const Error& e) {
    lines.fail(e.what());
  }
  {
    auto ls = lines.keyed("residuals");
    std::vector<std::string> tokens;
    for (std::string t; ls >> t;) tokens.push_back(t);
    if (!(tokens.size() == 1 && tokens[0] == "none")) {
      if (tokens.size() != N) lines.fail("expected one residual per source");
      for (const std::string& t : tokens) {
        std::istringstream one(t);
        prov.residuals.push_back(parse_real(lines, one));
      }
    }
  }
  {
    auto ls = lines.keyed("records");
    if (lines.read<std::size_t>(ls, "record count") != 2 * M * N) lines.fail("record count does not match 2 x modes x sources");
    lines.finish(ls);
  }
  RayleighDataMatrix U(p, std::move(modes), N);
  for (Side s : kSides)
    for (std::size_t m = 0; m < M; ++m)
      for (std::size_t l = 0; l < N; ++l) {
        auto ls = lines.next("record");
        const std::string side = lines.read<std::string>(ls, "side");
        const int j1 = lines.read<int>(ls, "j1"), j2 = lines.read<int>(ls, "j2");
        const std::size_t src = lines.read<std::size_t>(ls, "source");
        if (side != (s == Side::Plus ? "+" : "-") || j1 != idx[m].j1 || j2 != idx[m].j2 || src != l)
          lines.fail("record out of order");
        Vec3c u;
        for (int c = 0; c < 3; ++c) {
          const double re = parse_real(lines, ls);
          const double im = parse_real(lines, ls);
          u[c] = Complex(re, im);
        }
        lines.finish(ls);
        U.at(s, m, l) = u;
      }
  {
    auto ls = lines.keyed("end");
    lines.finish(ls);
  }
  return {std::move(U), std::move(prov)};
}

DataFile read_data_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataFormatError("cannot open data file " + path);
  return read_data_file(in);
}

void write_vtk(std::ostream& out, const ImagingResult& f, const std::string& name, const std::string& config_hash) {
  const SamplingGrid& g = f.grid;
  const Vec3 d = g.spacing();
  const Vec3 o = g.point(0, 0, 0);
  out << "# vtk DataFile Version 3.0\n";
  write_grid_comment(out, f);
  out << " config_hash=" << (config_hash.empty() ? "-" : config_hash) << "\n";
  out << "ASCII\n";
  out << "DATASET STRUCTURED_POINTS\n";
  out << "DIMENSIONS " << g.n[0] << " " << g.n[1] << " " << g.n[2] << "\n";
  out << "ORIGIN " << num(o[0]) << " " << num(o[1]) << " " << num(o[2]) << "\n";
  out << "SPACING " << num(d[0]) << " " << num(d[1]) << " " << num(d[2]) << "\n";
  out << "POINT_DATA " << g.size() << "\n";
  out << "SCALARS " << name << " double 1\n";
  out << "LOOKUP_TABLE default\n";
  for (double v : f.values) out << num(v) << "\n";
}

void write_csv(std::ostream& out, const ImagingResult& f, const std::string& config_hash) {
  out << "# ";
  write_grid_comment(out, f);
  out << " config_hash=" << (config_hash.empty() ? "-" : config_hash) << "\n";
  out << "z1,z2,z3,value\n";
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    const Vec3 z = f.grid.point(i);
    out << num(z[0]) << "," << num(z[1]) << "," << num(z[2]) << "," << num(f.values[i]) << "\n";
  }
}

std::vector<double> read_vtk_values(std::istream& in) {
  std::string line;
  std::size_t count = 0;
  while (std::getline(in, line)) {
    if (line.rfind("POINT_DATA", 0) == 0) count = std::stoul(line.substr(10));
    if (line.rfind("LOOKUP_TABLE", 0) == 0) break;
  }
  if (count == 0) throw DataFormatError("VTK file without point data");
  std::vector<double> v(count);
  for (double& x : v)
    if (!(in >> x)) throw DataFormatError("VTK file ended early");
  return v;
}

std::vector<double> read_csv_values(std::istream& in) {
  std::string line;
  std::vector<double> v;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "z1,z2,z3,value") throw DataFormatError("unexpected CSV header");
      header = true;
      continue;
    }
    v.push_back(std::stod(line.substr(line.rfind(',') + 1)));
  }
  return v;
}

}  // namespace periscat
