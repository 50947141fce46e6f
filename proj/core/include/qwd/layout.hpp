#pragma once

#include <cstddef>
#include <vector>

namespace qwd {

// Index bookkeeping for a tensor product of registers. The first register is
// the most significant digit of the global basis index.
class Layout {
 public:
  Layout() = default;
  explicit Layout(std::vector<int> dims);

  const std::vector<int>& dims() const { return dims_; }
  std::size_t dimension() const { return dim_; }
  std::size_t stride(int reg) const { return strides_[reg]; }
  int digit(std::size_t index, int reg) const {
    return static_cast<int>((index / strides_[reg]) % dims_[reg]);
  }

  // For an ordered target list: `offsets[t]` is the global offset of local
  // index t, and `bases` enumerates all settings of the remaining registers.
  // Global index of (base b, local t) is bases[b] + offsets[t].
  struct Targets {
    std::vector<int> regs;
    std::size_t local_dim = 1;
    std::vector<std::size_t> offsets;
    std::vector<std::size_t> bases;
  };
  Targets targets(const std::vector<int>& regs) const;

 private:
  std::vector<int> dims_;
  std::vector<std::size_t> strides_;
  std::size_t dim_ = 1;
};

}  // namespace qwd
