#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "difftomo/io.hpp"

using namespace difftomo;
using namespace testing;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("difftomo_io_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("minimal config takes the documented defaults") {
  const auto c = parse_config(R"({"grid": {"dim": 2, "J": 16, "pitch": 0.01}, "method": "cisor"})");
  CHECK(c.grid.J == 16);
  CHECK(c.method == Method::cisor);
  CHECK(c.solver.alpha == 0.96);
  CHECK(c.solver.step_rule == StepRule::automatic);
  CHECK(c.solver.tolerance == 1e-4);
  CHECK(c.solver.tau_rel == 1e-3);
  CHECK_FALSE(c.solver.tau.has_value());
  CHECK(c.layout.preset == "simulated_2d");
  CHECK(c.phantom.kind == "shepp-logan");
  CHECK(std::isinf(c.simulation.snr_db));
  const auto c3 = parse_config(R"({"grid": {"dim": 3, "J": 8, "pitch": 0.01}, "method": "fista"})");
  CHECK(c3.layout.preset == "spherical_3d");
  CHECK(c3.phantom.kind == "two-spheres");
}

TEST_CASE("out-of-range and unknown values name the offending key") {
  const std::string grid = R"("grid": {"dim": 2, "J": 16, "pitch": 0.01})";
  CHECK(config_error("{" + grid + R"(, "method": "cisor", "solver": {"alpha": 1.2}})").find("solver.alpha") !=
        std::string::npos);
  CHECK(config_error("{" + grid + R"(, "method": "cisor", "solver": {"alpah": 0.5}})").find("solver.alpah") !=
        std::string::npos);
  CHECK(config_error("{" + grid + R"(, "method": "newton"})").find("method") != std::string::npos);
  CHECK(config_error(R"({"method": "cisor"})").find("grid") != std::string::npos);
  CHECK(config_error("{" + grid + R"(, "method": "cisor", "grid2": 1})").find("grid2") != std::string::npos);
  CHECK(config_error("{" + grid + R"(, "method": "cisor", "solver": {"gamma": "fast"}})").find("solver.gamma") !=
        std::string::npos);
  CHECK(config_error(R"({"grid": {"dim": 4, "J": 16, "pitch": 0.01}, "method": "cisor"})").find("grid.dim") !=
        std::string::npos);
  CHECK_FALSE(config_error("{ not json").empty());
  CHECK_THROWS_AS(load_config("/nonexistent/difftomo.json"), ConfigError);
}

TEST_CASE("config round trip through serialisation") {
  auto c = parse_config(R"({
    "grid": {"dim": 2, "J": 24, "pitch": 0.02},
    "method": "il",
    "physics": {"wavelength": 0.1, "eps_b": 1.5},
    "phantom": {"kind": "shepp-logan", "contrast": 0.7},
    "simulation": {"snr_db": 40, "anti_crime_factor": 1},
    "solver": {"alpha": 0.5, "gamma": "born", "tau_rel": 0.01, "box": [0, null], "max_iterations": 77},
    "il": {"outer_rounds": 3, "inner_iterations": 20},
    "seed": 99
  })");
  CHECK(c.solver.step_rule == StepRule::born);
  CHECK_FALSE(c.solver.box_max.has_value());
  const auto again = parse_config(serialize_config(c));
  CHECK(serialize_config(again) == serialize_config(c));
  CHECK(again.physics.eps_b == 1.5);
  CHECK(again.simulation.snr_db == 40.0);
  CHECK(again.simulation.anti_crime_factor == 1);
  CHECK(again.il.outer_rounds == 3);
  CHECK(again.seed == 99);
  CHECK(again.method == Method::il);
  CHECK(again.solver.max_iterations == 77);
}

TEST_CASE("dataset round trip is exact, including the noise record") {
  TempDir dir;
  const SmallScalar s(6, 3, 7);
  auto d = s.random_data(5);
  d.noise = s.random_data(50, 1e-5).measurements;
  write_dataset(d, dir / "data.csv");
  CHECK(fs::exists(dir / "data.csv.json"));
  CHECK(fs::exists(dir / "data.csv.noise.csv"));
  const auto back = read_dataset(dir / "data.csv");
  REQUIRE(back.transmitter_count() == 3);
  for (std::size_t p = 0; p < 3; ++p) {
    CHECK(back.measurements[p] == d.measurements[p]);
    CHECK(back.noise[p] == d.noise[p]);
  }
  CHECK(back.physics.wavelength() == d.physics.wavelength());
  CHECK(back.layout.receivers.size() == 7);
  // one CSV row per active pair, plus the header
  const std::string text = slurp(dir / "data.csv");
  CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 3 * 7);
  CHECK(text.rfind("tx,rx,rx_x,rx_y,re,im", 0) == 0);
}

TEST_CASE("a dataset with no measurements reads back empty") {
  TempDir dir;
  ScatteringDataset d;
  d.layout = make_layout(2, {}, {{0.3, 0.0, 0.0}});
  d.physics = PhysicsConfig(kWavelength);
  write_dataset(d, dir / "empty.csv");
  const auto back = read_dataset(dir / "empty.csv");
  CHECK(back.transmitter_count() == 0);
  CHECK(slurp(dir / "empty.csv") == "tx,rx,rx_x,rx_y,re,im\n");
}

TEST_CASE("dataset rows in the wrong order are rejected") {
  TempDir dir;
  const SmallScalar s(6, 2, 3);
  write_dataset(s.random_data(1), dir / "d.csv");
  std::string text = slurp(dir / "d.csv");
  std::vector<std::string> lines;
  std::stringstream ss(text);
  for (std::string line; std::getline(ss, line);) lines.push_back(line);
  std::swap(lines[1], lines[2]);
  std::ofstream out(dir / "d.csv");
  for (const auto& l : lines) out << l << '\n';
  out.close();
  CHECK_THROWS(read_dataset(dir / "d.csv"));
}

TEST_CASE("image CSV round trip and PGM layout") {
  TempDir dir;
  const Grid grid(2, 5, 0.01);
  const RVector img = random_rvector(25, -1.0, 2.0, 3);
  write_image_csv(img, grid, dir / "img.csv");
  CHECK(read_image_csv(dir / "img.csv") == img);

  RVector ramp(6);
  ramp << 0, 1, 2, 3, 4, 5;  // width 3, height 2
  write_pgm(ramp, 3, 2, dir / "r.pgm");
  const std::string pgm = slurp(dir / "r.pgm");
  REQUIRE(pgm.rfind("P5\n", 0) == 0);
  CHECK(pgm.find("# min=0 max=5") != std::string::npos);
  const std::string pixels = pgm.substr(pgm.size() - 12);
  auto px = [&](int i) {
    return (static_cast<unsigned>(static_cast<unsigned char>(pixels[2 * i])) << 8) |
           static_cast<unsigned char>(pixels[2 * i + 1]);
  };
  // top row is the largest i1: values 3, 4, 5 first
  CHECK(px(0) == 39321u);
  CHECK(px(2) == 65535u);
  CHECK(px(3) == 0u);
}

TEST_CASE("a constant image writes a PGM with min equal to max") {
  TempDir dir;
  write_pgm(RVector::Constant(16, 0.25), 4, 4, dir / "c.pgm");
  const std::string pgm = slurp(dir / "c.pgm");
  CHECK(pgm.find("# min=0.25 max=0.25") != std::string::npos);
  CHECK(pgm.find("P5") == 0);
}

TEST_CASE("3D images write one slice per requested plane") {
  TempDir dir;
  const Grid grid(3, 32, 0.01);
  const auto N = static_cast<Eigen::Index>(grid.size());
  RVector vol(N);
  for (std::size_t n = 0; n < grid.size(); ++n) vol[static_cast<Eigen::Index>(n)] = grid.indices(n)[2];
  const auto files = write_image(vol, grid, dir / "vol", {{'z', 0.0}});
  REQUIRE(files.size() == 2);
  int pgms = 0;
  for (const auto& f : files) pgms += f.size() > 4 && f.substr(f.size() - 4) == ".pgm";
  CHECK(pgms == 1);
  const int iz = nearest_index(grid, 0.0);
  CHECK((iz == 15 || iz == 16));
  const RVector slice = extract_slice(vol, grid, 'z', iz);
  CHECK(slice.size() == 32 * 32);
  CHECK((slice.array() == iz).all());
  const RVector xs = extract_slice(vol, grid, 'x', 3);
  CHECK(xs[0] == 0.0);
  CHECK(xs[32 * 31] == 31.0);
  CHECK_THROWS(extract_slice(vol, grid, 'w', 0));
}

TEST_CASE("telemetry CSV has increasing k and the documented header") {
  TempDir dir;
  std::vector<TelemetryRow> rows(3);
  for (int k = 0; k < 3; ++k) {
    rows[static_cast<std::size_t>(k)].k = k + 1;
    rows[static_cast<std::size_t>(k)].F = 1.0 / (k + 1);
    rows[static_cast<std::size_t>(k)].seconds = 0.1 * k;
  }
  write_telemetry(rows, dir / "t.csv");
  write_timing(rows, dir / "time.csv");
  std::stringstream ss(slurp(dir / "t.csv"));
  std::string line;
  std::getline(ss, line);
  CHECK(line == "k,F,D,TV,grad_map_norm");
  int last = 0;
  while (std::getline(ss, line)) {
    const int k = std::stoi(line.substr(0, line.find(',')));
    CHECK(k > last);
    last = k;
  }
  CHECK(last == 3);
  CHECK(slurp(dir / "time.csv").rfind("k,seconds\n", 0) == 0);
}
