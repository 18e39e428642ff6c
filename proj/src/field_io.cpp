#include <json.hpp>

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "sgsim/grid.hpp"

namespace sgsim {

// On-disk layout: raw interleaved (re, im) little-endian values in the grid's
// natural row-major order, sidecar <path>.json describing the grid. We only
// target little-endian hosts; refuse to run elsewhere rather than silently
// writing garbage.
static_assert(std::endian::native == std::endian::little,
              "field files are defined little-endian");

void write_field(const Field& f, const std::string& path) {
  nlohmann::json side;
  side["dim"] = f.grid().dim();
  side["n"] = f.grid().n();
  side["half_width"] = f.grid().half_width();
  side["dtype"] = "complex128";
  side["layout"] = "row-major";

  std::ofstream bin(path, std::ios::binary | std::ios::trunc);
  if (!bin) throw io_error("write_field: cannot open " + path);
  bin.write(reinterpret_cast<const char*>(f.values().data()),
            static_cast<std::streamsize>(f.size() * sizeof(cplx)));
  if (!bin) throw io_error("write_field: short write to " + path);
  bin.close();

  std::ofstream js(path + ".json", std::ios::trunc);
  if (!js) throw io_error("write_field: cannot open " + path + ".json");
  js << side.dump(2) << "\n";
}

Field read_field(const std::string& path) {
  std::ifstream js(path + ".json");
  if (!js) throw io_error("read_field: missing sidecar " + path + ".json");
  nlohmann::json side;
  try {
    js >> side;
  } catch (const nlohmann::json::exception& e) {
    throw parse_error("read_field: bad sidecar " + path + ".json: " + e.what());
  }
  int dim, n;
  double half_width;
  std::string dtype, layout;
  try {
    dim = side.at("dim").get<int>();
    n = side.at("n").get<int>();
    half_width = side.at("half_width").get<double>();
    dtype = side.at("dtype").get<std::string>();
    layout = side.value("layout", std::string("row-major"));
  } catch (const nlohmann::json::exception& e) {
    throw parse_error("read_field: sidecar missing keys: " + std::string(e.what()));
  }
  if (layout != "row-major")
    throw parse_error("read_field: unsupported layout " + layout);
  if (dtype != "complex128" && dtype != "complex64")
    throw parse_error("read_field: unsupported dtype " + dtype);

  GridPtr g = make_grid(dim, n, half_width);
  std::ifstream bin(path, std::ios::binary);
  if (!bin) throw io_error("read_field: cannot open " + path);
  std::vector<cplx> vals(g->size());
  if (dtype == "complex128") {
    bin.read(reinterpret_cast<char*>(vals.data()),
             static_cast<std::streamsize>(vals.size() * sizeof(cplx)));
  } else {
    std::vector<std::complex<float>> tmp(g->size());
    bin.read(reinterpret_cast<char*>(tmp.data()),
             static_cast<std::streamsize>(tmp.size() * sizeof(tmp[0])));
    for (std::size_t i = 0; i < vals.size(); ++i)
      vals[i] = cplx(tmp[i].real(), tmp[i].imag());
  }
  if (!bin) throw io_error("read_field: truncated data in " + path);
  return Field(std::move(g), std::move(vals));
}

}  // namespace sgsim
