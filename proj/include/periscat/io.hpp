#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "periscat/forward.hpp"
#include "periscat/imaging.hpp"

namespace periscat {

/// Header fields of a data file besides the matrix itself.
struct DataProvenance {
  std::string config_hash;
  double noise_delta = 0.0;
  std::uint64_t noise_seed = 0;
  std::vector<double> residuals;  // one per source, may be empty
};

struct DataFile {
  RayleighDataMatrix data;
  DataProvenance provenance;
};

/// Text format:
///   periscat-rayleigh-data 1
///   config_hash <hex>
///   k <k>
///   alpha <alpha1> <alpha2>
///   h <h>
///   sources <N>
///   sides + -
///   noise <delta> <seed>
///   modes <M>, then M lines "<j1> <j2>" in lexicographic order
///   residuals <N values> | residuals none
///   records <2 M N>, then one line per (side, mode, source):
///     <+|-> <j1> <j2> <l> Re(u1) Im(u1) Re(u2) Im(u2) Re(u3) Im(u3)
///   end
/// Reals are printed with 17 significant digits, so a round trip is exact.
void write_data_file(std::ostream& out, const RayleighDataMatrix& U, const DataProvenance& prov);
void write_data_file(const std::string& path, const RayleighDataMatrix& U, const DataProvenance& prov);

/// Throws DataFormatError with the offending line number.
DataFile read_data_file(std::istream& in);
DataFile read_data_file(const std::string& path);

/// Legacy VTK structured points, ASCII, x-fastest point data.
void write_vtk(std::ostream& out, const ImagingResult& field, const std::string& name, const std::string& config_hash);
/// "# config_hash <hex>" comment, a "z1,z2,z3,value" header, then one row per point, x-fastest.
void write_csv(std::ostream& out, const ImagingResult& field, const std::string& config_hash);

/// Values of a file written by write_vtk or write_csv, in point order.
std::vector<double> read_vtk_values(std::istream& in);
std::vector<double> read_csv_values(std::istream& in);

}  // namespace periscat
