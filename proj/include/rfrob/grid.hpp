// Periodic grids, sampled scalar/vector fields, and their on-disk layout.
//
// A grid covers the torus box [-L/2, L/2)^dim with N points per axis, so the
// origin sits on a grid node (index N/2 along every axis). Values are stored
// row-major with axis 0 slowest.
//
// A VecField may live on a *reduced* grid: its grid has fewer axes than the
// ambient space, and `axes[a]` names the ambient coordinate carried by grid
// axis a. Such a field is constant along the omitted ambient coordinates,
// which keeps fields of one variable (shears, canonical pairs depending only
// on y) one-dimensional for the spectral machinery.
#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace rfrob {

inline constexpr int kMaxDim = 3;

// Points and velocities in R^n, n <= 3. Unused trailing entries stay zero.
using Point = std::array<double, kMaxDim>;

inline double norm(const Point& p, int dim) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) s += p[i] * p[i];
  return std::sqrt(s);
}

inline double distance(const Point& a, const Point& b, int dim) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

inline Point axpy(double a, const Point& x, const Point& y) {
  return {a * x[0] + y[0], a * x[1] + y[1], a * x[2] + y[2]};
}

struct GridSpec {
  int dim = 1;
  int points_per_axis = 64;
  double box_side = 1.0;

  GridSpec() = default;
  GridSpec(int d, int n, double side = 1.0) : dim(d), points_per_axis(n), box_side(side) {
    validate();
  }

  void validate() const {
    if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("GridSpec: dim must be 1, 2 or 3");
    if (points_per_axis < 4 || !std::has_single_bit(static_cast<unsigned>(points_per_axis)))
      throw std::invalid_argument("GridSpec: points_per_axis must be a power of two >= 4");
    if (!(box_side > 0.0) || !std::isfinite(box_side))
      throw std::invalid_argument("GridSpec: box_side must be positive");
  }

  std::size_t size() const {
    std::size_t s = 1;
    for (int i = 0; i < dim; ++i) s *= static_cast<std::size_t>(points_per_axis);
    return s;
  }
  double spacing() const { return box_side / points_per_axis; }
  double lower() const { return -0.5 * box_side; }
  double coordinate(int index) const { return lower() + index * spacing(); }

  // Multi-index of a flat offset (axis 0 slowest).
  std::array<int, kMaxDim> unflatten(std::size_t flat) const {
    std::array<int, kMaxDim> idx{0, 0, 0};
    for (int a = dim - 1; a >= 0; --a) {
      idx[a] = static_cast<int>(flat % points_per_axis);
      flat /= points_per_axis;
    }
    return idx;
  }
  std::size_t flatten(const std::array<int, kMaxDim>& idx) const {
    std::size_t flat = 0;
    for (int a = 0; a < dim; ++a) flat = flat * points_per_axis + static_cast<std::size_t>(idx[a]);
    return flat;
  }
  // Grid-axis coordinates of node `flat` (entries >= dim are zero).
  Point node(std::size_t flat) const {
    auto idx = unflatten(flat);
    Point p{0, 0, 0};
    for (int a = 0; a < dim; ++a) p[a] = coordinate(idx[a]);
    return p;
  }
  // Signed integer wavenumber of an FFT index along one axis.
  int wavenumber(int index) const {
    return index < points_per_axis / 2 ? index : index - points_per_axis;
  }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(const GridSpec& grid, double fill = 0.0)
      : grid_(grid), values_(grid.size(), fill) {}
  ScalarField(const GridSpec& grid, std::vector<double> values)
      : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size())
      throw std::invalid_argument("ScalarField: value count does not match grid");
    for (double v : values_)
      if (!std::isfinite(v)) throw std::invalid_argument("ScalarField: non-finite value");
  }

  // Samples f at every node (grid-axis coordinates).
  template <class F>
  static ScalarField sample(const GridSpec& grid, F&& f) {
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      double y = f(grid.node(i));
      v[i] = std::isfinite(y) ? y : 0.0;
    }
    return ScalarField(grid, std::move(v));
  }

  const GridSpec& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  double sup_norm() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

  ScalarField& operator+=(const ScalarField& o) {
    check_same(o);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
    return *this;
  }
  ScalarField& operator-=(const ScalarField& o) {
    check_same(o);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
    return *this;
  }
  ScalarField& operator*=(double c) {
    for (double& v : values_) v *= c;
    return *this;
  }
  friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
  friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
  friend ScalarField operator*(double c, ScalarField a) { return a *= c; }
  // Pointwise product.
  friend ScalarField operator*(const ScalarField& a, const ScalarField& b) {
    a.check_same(b);
    ScalarField r(a.grid_);
    for (std::size_t i = 0; i < r.values_.size(); ++i) r.values_[i] = a.values_[i] * b.values_[i];
    return r;
  }

  void check_same(const ScalarField& o) const {
    if (!(grid_ == o.grid_)) throw std::invalid_argument("ScalarField: grid mismatch");
  }

 private:
  GridSpec grid_;
  std::vector<double> values_;
};

inline double sup_distance(const ScalarField& a, const ScalarField& b) {
  a.check_same(b);
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

class VecField {
 public:
  VecField() = default;
  // Full grid: one grid axis per ambient coordinate.
  VecField(const GridSpec& grid, std::vector<ScalarField> components)
      : VecField(grid, identity_axes(grid.dim), std::move(components)) {}
  VecField(const GridSpec& grid, std::vector<int> axes, std::vector<ScalarField> components)
      : grid_(grid), axes_(std::move(axes)), components_(std::move(components)) {
    if (static_cast<int>(axes_.size()) != grid_.dim)
      throw std::invalid_argument("VecField: one ambient axis per grid axis required");
    if (components_.empty() || components_.size() > static_cast<std::size_t>(kMaxDim))
      throw std::invalid_argument("VecField: 1..3 components required");
    for (int a : axes_)
      if (a < 0 || a >= static_cast<int>(components_.size()))
        throw std::invalid_argument("VecField: axis index outside ambient dimension");
    for (const auto& c : components_)
      if (!(c.grid() == grid_)) throw std::invalid_argument("VecField: components must share the grid");
  }

  static std::vector<int> identity_axes(int dim) {
    std::vector<int> a(dim);
    std::iota(a.begin(), a.end(), 0);
    return a;
  }

  const GridSpec& grid() const { return grid_; }
  const std::vector<int>& axes() const { return axes_; }
  int ambient_dim() const { return static_cast<int>(components_.size()); }
  const ScalarField& operator[](int i) const { return components_[i]; }
  ScalarField& operator[](int i) { return components_[i]; }
  const std::vector<ScalarField>& components() const { return components_; }

  Point at(std::size_t flat) const {
    Point p{0, 0, 0};
    for (int i = 0; i < ambient_dim(); ++i) p[i] = components_[i][flat];
    return p;
  }
  // Max over nodes of the Euclidean length.
  double sup_norm() const {
    double m = 0.0;
    for (std::size_t k = 0; k < grid_.size(); ++k) m = std::max(m, norm(at(k), ambient_dim()));
    return m;
  }

  bool compatible(const VecField& o) const {
    return grid_ == o.grid_ && axes_ == o.axes_ && ambient_dim() == o.ambient_dim();
  }

 private:
  GridSpec grid_;
  std::vector<int> axes_;
  std::vector<ScalarField> components_;
};

// ---------------------------------------------------------------------------
// Field files.
//
// Binary (.rfld): "RFLD" magic, uint32 version (=1), uint32 dim, uint32 N,
// float64 box_side, then N^dim float64 values row-major; all little-endian.
//
// CSV: a first line "dim,N,box_side", a second line with those three values,
// then one value per line (row-major, %.17g).
// ---------------------------------------------------------------------------

namespace io {

inline void write_binary(const ScalarField& f, const std::string& path) {
  static_assert(std::endian::native == std::endian::little, "field files are little-endian");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  const char magic[4] = {'R', 'F', 'L', 'D'};
  std::uint32_t header[3] = {1u, static_cast<std::uint32_t>(f.grid().dim),
                             static_cast<std::uint32_t>(f.grid().points_per_axis)};
  double side = f.grid().box_side;
  out.write(magic, 4);
  out.write(reinterpret_cast<const char*>(header), sizeof header);
  out.write(reinterpret_cast<const char*>(&side), sizeof side);
  out.write(reinterpret_cast<const char*>(f.values().data()),
            static_cast<std::streamsize>(f.size() * sizeof(double)));
}

inline ScalarField read_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  char magic[4];
  std::uint32_t header[3];
  double side = 0.0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(header), sizeof header);
  in.read(reinterpret_cast<char*>(&side), sizeof side);
  if (!in || std::memcmp(magic, "RFLD", 4) != 0 || header[0] != 1u)
    throw std::runtime_error(path + ": not an rfrob field file");
  GridSpec grid(static_cast<int>(header[1]), static_cast<int>(header[2]), side);
  std::vector<double> values(grid.size());
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!in) throw std::runtime_error(path + ": truncated field file");
  return ScalarField(grid, std::move(values));
}

inline void write_csv(const ScalarField& f, std::ostream& out) {
  out << "dim,N,box_side\n"
      << f.grid().dim << ',' << f.grid().points_per_axis << ',' << std::setprecision(17)
      << f.grid().box_side << '\n';
  for (double v : f.values()) out << v << '\n';
}

inline ScalarField read_csv(std::istream& in) {
  std::string line;
  std::getline(in, line);
  if (line.rfind("dim,N,box_side", 0) != 0) throw std::runtime_error("field csv: missing header");
  std::getline(in, line);
  std::replace(line.begin(), line.end(), ',', ' ');
  std::istringstream hs(line);
  int dim = 0, n = 0;
  double side = 0.0;
  if (!(hs >> dim >> n >> side)) throw std::runtime_error("field csv: malformed header values");
  GridSpec grid(dim, n, side);
  std::vector<double> values;
  values.reserve(grid.size());
  while (std::getline(in, line))
    if (!line.empty()) values.push_back(std::stod(line));
  return ScalarField(grid, std::move(values));
}

}  // namespace io
}  // namespace rfrob
