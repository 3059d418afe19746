#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "difftomo/forward.hpp"
#include "difftomo/optimizers.hpp"
#include "difftomo/phantoms.hpp"

namespace difftomo {

/// Invalid or inconsistent configuration. The message starts with the key path.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Method { cisor, ista, fista, fb, il };
enum class StepRule { automatic, born, fixed };

std::string to_string(Method m);
Method parse_method(const std::string& s);

struct ExperimentConfig {
  struct Physics {
    double wavelength = 0.0749;
    double eps_b = 1.0;
    bool dyadic_uses_background_k = false;
  } physics;

  struct GridSpec {
    int dim = 2;
    int J = 32;
    double pitch = 0.01875;
  } grid;

  struct LayoutSpec {
    /// simulated_2d | halved_2d | spherical_3d | explicit
    std::string preset = "simulated_2d";
    std::vector<Point> transmitters;
    std::vector<Point> receivers;
    std::vector<std::vector<std::uint8_t>> active;  // empty: all active
    /// Keep only these transmitter indices (empty keeps all).
    std::vector<int> use_transmitters;
  } layout;

  /// point_source | plane_wave | dipole; empty picks the dimension default.
  std::string incident;

  struct PhantomSpec {
    std::string kind = "shepp-logan";  // shepp-logan | two-spheres | two-cubes | custom
    double contrast = 1.0;
    std::vector<Sphere> spheres;
    std::vector<Cube> cubes;
  } phantom;

  struct Simulation {
    double snr_db = std::numeric_limits<double>::infinity();
    int anti_crime_factor = 2;
    bool include_self_term = true;
    KrylovOptions krylov{1e-8, 2000, KrylovMethod::bicgstab};
  } simulation;

  struct Solver {
    double alpha = 0.96;
    StepRule step_rule = StepRule::automatic;
    double gamma = 0.0;        // used by the fixed rule
    double gamma_scale = 1.0;  // multiplies the born rule's 1 / L
    std::optional<double> tau;  // absolute weight; overrides tau_rel
    double tau_rel = 1e-3;
    double box_min = 0.0;
    std::optional<double> box_max;  // defaults to the phantom contrast
    int max_iterations = 200;
    double tolerance = 1e-4;
    int prox_iterations = 20;
    double prox_tolerance = 0.0;
    bool monitor = true;
    KrylovOptions krylov{1e-6, 1000, KrylovMethod::bicgstab};
    int lipschitz_samples = 4;
    double lipschitz_safety = 2.0;
    double lipschitz_fraction = 0.1;
  } solver;

  struct IterativeLinearization {
    int outer_rounds = 5;
    int inner_iterations = 50;
  } il;

  struct Sweep {
    std::vector<double> contrasts{1e-3, 0.5, 1.0, 2.0, 3.0};
    std::vector<Method> methods{Method::fb, Method::il, Method::cisor};
    std::vector<double> tau_rel{1e-5, 1e-4, 1e-3, 1e-2, 1e-1};
    /// Per-method override of tau_rel.
    std::map<std::string, std::vector<double>> tau_rel_by_method;
  } sweep;

  struct Output {
    std::string directory = "out";
    /// 3D preview slices: axis ('x', 'y' or 'z') and position in metres.
    std::vector<std::pair<char, double>> slices{{'z', 0.0}};
  } output;

  Method method = Method::cisor;
  std::uint64_t seed = 0;
};

/// Strict JSON parsing: unknown keys, malformed values and out-of-range
/// numbers raise ConfigError naming the key path. "grid" and "method" are
/// required; everything else has a default.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
/// Full JSON form with every default written out; parse_config accepts it.
std::string serialize_config(const ExperimentConfig& config);

/// Throws ConfigError for out-of-range or inconsistent values.
void validate_config(const ExperimentConfig& config);

// ---- datasets ----

/// Writes `<path>` (CSV: tx,rx,rx_x,rx_y[,rx_z],re,im with 17 significant
/// digits, one row per active pair), `<path>.json` (physics and layout) and,
/// when a noise record exists, `<path>.noise.csv` in the same CSV schema.
void write_dataset(const ScatteringDataset& data, const std::string& path);
ScatteringDataset read_dataset(const std::string& path);

// ---- images ----

/// Row-major CSV: one line per (i1, i2) row, J values along axis 0.
void write_image_csv(const RVector& image, const Grid& grid, const std::string& path);
RVector read_image_csv(const std::string& path);

/// 16-bit binary PGM, min-max normalised, with "# min=<v> max=<v>" recorded.
/// The top row of the picture is the largest i1.
void write_pgm(const RVector& image, int width, int height, const std::string& path);

/// Slice of a 3D image normal to `axis` at grid index `index`, as a
/// row-major 2D image (the two remaining axes in increasing order).
RVector extract_slice(const RVector& volume, const Grid& grid, char axis, int index);
/// Nearest grid index of a physical position along an axis.
int nearest_index(const Grid& grid, double position);

/// CSV plus PGM preview (2D), or CSV plus one PGM per configured slice (3D).
/// Returns the paths written.
std::vector<std::string> write_image(const RVector& image, const Grid& grid, const std::string& stem,
                                     const std::vector<std::pair<char, double>>& slices = {{'z', 0.0}});

/// k,F,D,TV,grad_map_norm. Deterministic for a fixed configuration.
void write_telemetry(const std::vector<TelemetryRow>& rows, const std::string& path);
/// k,seconds (wall clock, so never bit-reproducible).
void write_timing(const std::vector<TelemetryRow>& rows, const std::string& path);

}  // namespace difftomo
