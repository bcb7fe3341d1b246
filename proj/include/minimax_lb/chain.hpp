#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace minimax_lb {

// Canonical chain ordering of the joint variable v = (x, z, ybar):
//
//   x_1, y^(1)_1..y^(1)_n, z_2, x_2, y^(2)_1..y^(2)_n, z_3, ..., z_T, x_T
//
// i.e. block i (1 <= i <= T-1) is [x_i, y^(i), z_{i+1}] and x_T closes the
// chain.  Every coupling term touches only neighbours in this order, which
// is what makes the joint function a zero-chain over the flattened indices.
//
// x has logical indices 1..T, z has 2..T (mirroring the subscripts in the
// couplings), y blocks are 1..T-1 with inner index 1..n.
struct ChainLayout {
  int T = 0;
  int n = 0;

  int dim() const { return (T - 1) * (n + 2) + 1; }

  int x_index(int i) const {
    check(i >= 1 && i <= T, "x index");
    return (i - 1) * (n + 2);
  }
  int z_index(int i) const {
    check(i >= 2 && i <= T, "z index");
    return (i - 2) * (n + 2) + n + 1;
  }
  int y_index(int block, int j) const {
    check(block >= 1 && block <= T - 1 && j >= 1 && j <= n, "y index");
    return (block - 1) * (n + 2) + j;
  }

  enum class Kind { X, Z, Y };
  struct Coord {
    Kind kind;
    int i;  // logical x/z index, or y block
    int j;  // inner y index, 0 otherwise
  };

  Coord coord(int chain_index) const {
    check(chain_index >= 0 && chain_index < dim(), "chain index");
    const int block = chain_index / (n + 2);
    const int off = chain_index % (n + 2);
    if (block == T - 1) return Coord{Kind::X, T, 0};  // the trailing x_T
    if (off == 0) return Coord{Kind::X, block + 1, 0};
    if (off == n + 1) return Coord{Kind::Z, block + 2, 0};
    return Coord{Kind::Y, block + 1, off};
  }

 private:
  void check(bool ok, const char* what) const {
    if (!ok) throw std::out_of_range(std::string("ChainLayout: ") + what + " out of range");
  }
};

// A joint point stored flat in chain order, with logical accessors.
class ChainPoint {
 public:
  explicit ChainPoint(ChainLayout layout) : layout_(layout), v_(layout.dim(), 0.0) {}
  ChainPoint(ChainLayout layout, std::vector<double> flat)
      : layout_(layout), v_(std::move(flat)) {
    if (static_cast<int>(v_.size()) != layout_.dim())
      throw std::invalid_argument("ChainPoint: flat vector length does not match layout");
  }

  const ChainLayout& layout() const { return layout_; }
  int dim() const { return layout_.dim(); }

  double x(int i) const { return v_[layout_.x_index(i)]; }
  double z(int i) const { return v_[layout_.z_index(i)]; }
  double y(int block, int j) const { return v_[layout_.y_index(block, j)]; }
  double& x(int i) { return v_[layout_.x_index(i)]; }
  double& z(int i) { return v_[layout_.z_index(i)]; }
  double& y(int block, int j) { return v_[layout_.y_index(block, j)]; }

  std::vector<double>& flat() { return v_; }
  const std::vector<double>& flat() const { return v_; }
  double operator[](int k) const { return v_[k]; }
  double& operator[](int k) { return v_[k]; }

  void fill(double value) { std::fill(v_.begin(), v_.end(), value); }

  std::vector<int> support() const { return support_of(v_); }

  // Contiguous copies of the scattered x / z blocks.
  std::vector<double> x_block() const {
    std::vector<double> out(layout_.T);
    for (int i = 1; i <= layout_.T; ++i) out[i - 1] = x(i);
    return out;
  }
  std::vector<double> z_block() const {
    std::vector<double> out(layout_.T - 1);
    for (int i = 2; i <= layout_.T; ++i) out[i - 2] = z(i);
    return out;
  }

  static std::vector<int> support_of(std::span<const double> v) {
    std::vector<int> s;
    for (int k = 0; k < static_cast<int>(v.size()); ++k)
      if (v[k] != 0.0) s.push_back(k);
    return s;
  }

 private:
  ChainLayout layout_;
  std::vector<double> v_;
};

// Smallest chain index holding an exact zero; nullopt if all are nonzero.
inline std::optional<int> next_zero_index(std::span<const double> v) {
  for (int k = 0; k < static_cast<int>(v.size()); ++k)
    if (v[k] == 0.0) return k;
  return std::nullopt;
}

}  // namespace minimax_lb
