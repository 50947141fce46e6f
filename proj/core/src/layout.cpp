#include "qwd/layout.hpp"

#include <stdexcept>

namespace qwd {

Layout::Layout(std::vector<int> dims) : dims_(std::move(dims)) {
  strides_.assign(dims_.size(), 1);
  for (int i = static_cast<int>(dims_.size()) - 2; i >= 0; --i)
    strides_[i] = strides_[i + 1] * static_cast<std::size_t>(dims_[i + 1]);
  dim_ = 1;
  for (int d : dims_) dim_ *= static_cast<std::size_t>(d);
}

Layout::Targets Layout::targets(const std::vector<int>& regs) const {
  Targets t;
  t.regs = regs;
  std::vector<bool> used(dims_.size(), false);
  for (int r : regs) {
    if (r < 0 || r >= static_cast<int>(dims_.size()) || used[r])
      throw std::invalid_argument("bad target register list");
    used[r] = true;
    t.local_dim *= static_cast<std::size_t>(dims_[r]);
  }
  // Local index: first listed register most significant.
  t.offsets.assign(t.local_dim, 0);
  for (std::size_t local = 0; local < t.local_dim; ++local) {
    std::size_t rest = local, off = 0;
    for (int i = static_cast<int>(regs.size()) - 1; i >= 0; --i) {
      const int r = regs[i];
      off += (rest % dims_[r]) * strides_[r];
      rest /= dims_[r];
    }
    t.offsets[local] = off;
  }
  std::vector<int> others;
  for (int r = 0; r < static_cast<int>(dims_.size()); ++r)
    if (!used[r]) others.push_back(r);
  std::size_t count = dim_ / t.local_dim;
  t.bases.assign(count, 0);
  for (std::size_t b = 0; b < count; ++b) {
    std::size_t rest = b, off = 0;
    for (int i = static_cast<int>(others.size()) - 1; i >= 0; --i) {
      const int r = others[i];
      off += (rest % dims_[r]) * strides_[r];
      rest /= dims_[r];
    }
    t.bases[b] = off;
  }
  return t;
}

}  // namespace qwd
